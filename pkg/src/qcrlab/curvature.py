"""Curvature tensor algebra on the 4n-dimensional fiber.

Index conventions: a Riemann4 array ``R[i, j, k, l]`` is R^i_{jkl} with the
first index up.  Its lowered form is ``R_{ijkl} = g_{im} R^m_{jkl}`` and the
Ricci tensor is ``R_{jl} = R^i_{jil}``.  With these conventions the unit
sphere (and the unit quadric of any signature) has
``R^i_{jkl} = g_{jl} delta^i_k - g_{jk} delta^i_l``.

Triple matrices act on column coordinate vectors: ``M[:, i]`` holds the
coordinates of ``J e_i``.  The lowered form is
``J_{ij} = g(J e_i, e_j) = (M^T g)_{ij}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .quaternion import QI, QJ, QK, right_matrix
from .report import CheckResult

RIEMANN_LAYOUT = "i,j,k,l row-major"


@dataclass(frozen=True)
class TripleMatrices:
    I: np.ndarray
    J: np.ndarray
    K: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.stack([self.I, self.J, self.K])

    def __iter__(self):
        return iter((self.I, self.J, self.K))

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "TripleMatrices":
        return cls(arr[0], arr[1], arr[2])

    def relation_residual(self) -> float:
        dim = self.I.shape[0]
        eye = np.eye(dim)
        res = [
            self.I @ self.I + eye,
            self.J @ self.J + eye,
            self.K @ self.K + eye,
            self.I @ self.J - self.K,
            self.J @ self.K - self.I,
            self.K @ self.I - self.J,
        ]
        return float(max(np.max(np.abs(r)) for r in res))


def standard_triple(p: int, q: int) -> tuple[np.ndarray, TripleMatrices]:
    """Metric and quaternionic triple on H^n = R^{4n} for signature (p, q).

    The triple is v -> -v e_a (right multiplication by -i, -j, -k) so that
    IJ = K holds; right multiplication itself satisfies R_i R_j = -R_k.
    """
    n = p + q
    if n < 1:
        raise ValueError("standard_triple needs p + q >= 1")
    g = np.diag(np.repeat(np.concatenate([np.ones(p), -np.ones(q)]), 4))
    mats = [np.kron(np.eye(n), -right_matrix(e)) for e in (QI, QJ, QK)]
    return g, TripleMatrices(*mats)


def lowered_triple(g: np.ndarray, triple: TripleMatrices) -> np.ndarray:
    """Array J[a, i, j] = g(J_a e_i, e_j)."""
    return np.stack([M.T @ g for M in triple])


def lower(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.einsum("im,mjkl->ijkl", g, R)


def raise_first(Rlow: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.einsum("im,mjkl->ijkl", np.linalg.inv(g), Rlow)


def ricci(R: np.ndarray) -> np.ndarray:
    return np.einsum("ijil->jl", R)


def scalar_curvature(R: np.ndarray, g: np.ndarray) -> float:
    return float(np.einsum("jl,jl->", np.linalg.inv(g), ricci(R)))


def constant_curvature(g: np.ndarray) -> np.ndarray:
    """g_{jl} delta^i_k - g_{jk} delta^i_l."""
    d = np.eye(g.shape[0])
    return np.einsum("jl,ik->ijkl", g, d) - np.einsum("jk,il->ijkl", g, d)


def kulkarni_nomizu(h: np.ndarray, k: np.ndarray) -> np.ndarray:
    """(h o k)_{ijkl} = h_ik k_jl + h_jl k_ik - h_il k_jk - h_jk k_il."""
    return (
        np.einsum("ik,jl->ijkl", h, k)
        + np.einsum("jl,ik->ijkl", h, k)
        - np.einsum("il,jk->ijkl", h, k)
        - np.einsum("jk,il->ijkl", h, k)
    )


def r_hp_lowered(g: np.ndarray, triple: TripleMatrices) -> np.ndarray:
    J = lowered_triple(g, triple)
    out = np.einsum("jl,ik->ijkl", g, g) - np.einsum("jk,il->ijkl", g, g)
    out = out + np.einsum("ajl,aik->ijkl", J, J)
    out = out - np.einsum("ajk,ail->ijkl", J, J)
    out = out + 2.0 * np.einsum("aij,akl->ijkl", J, J)
    return out


def r_hp(g: np.ndarray, triple: TripleMatrices) -> np.ndarray:
    """Curvature of quaternionic projective space in mixed form R^i_{jkl}."""
    return raise_first(r_hp_lowered(g, triple), g)


def t_tensor(R: np.ndarray, g: np.ndarray, triple: TripleMatrices) -> np.ndarray:
    """Invariant tensor T = R - R_HP for fibers of dimension 4n with n >= 2."""
    dim = R.shape[0]
    if dim % 4 or dim < 8 or g.shape != (dim, dim):
        raise ValueError(f"t_tensor needs dimension 4n with n >= 2, got {dim}")
    return R - r_hp(g, triple)


def weyl_lowered(Rlow: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Totally trace-free part of a lowered algebraic curvature tensor."""
    N = g.shape[0]
    ginv = np.linalg.inv(g)
    ric = np.einsum("mk,mjkl->jl", ginv, Rlow)
    sigma = float(np.einsum("jl,jl->", ginv, ric))
    return (
        Rlow
        - kulkarni_nomizu(ric, g) / (N - 2)
        + sigma / (2.0 * (N - 1) * (N - 2)) * kulkarni_nomizu(g, g)
    )


def weyl4(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    if R.shape != (4, 4, 4, 4) or g.shape != (4, 4):
        raise ValueError("weyl4 needs a four-dimensional curvature tensor")
    return raise_first(weyl_lowered(lower(R, g), g), g)


def rotate_triple(A: np.ndarray, triple: TripleMatrices) -> TripleMatrices:
    """(I', J', K')^T = A^T (I, J, K)^T."""
    A = np.asarray(A, dtype=float)
    if np.max(np.abs(A.T @ A - np.eye(3))) > 1e-9 or abs(np.linalg.det(A) - 1.0) > 1e-9:
        raise ValueError("rotate_triple needs A in SO(3)")
    return TripleMatrices.from_array(np.einsum("ba,bij->aij", A, triple.as_array()))


def bianchi_residual(R: np.ndarray) -> float:
    cyc = R + np.transpose(R, (0, 2, 3, 1)) + np.transpose(R, (0, 3, 1, 2))
    return float(np.max(np.abs(cyc)))


def symmetry_residual(R: np.ndarray, g: np.ndarray) -> float:
    low = lower(R, g)
    res = [
        R + np.transpose(R, (0, 1, 3, 2)),
        low + np.transpose(low, (1, 0, 2, 3)),
        low - np.transpose(low, (2, 3, 0, 1)),
    ]
    return max(float(np.max(np.abs(r))) for r in res + [bianchi_residual(R)])


def random_algebraic_curvature(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random lowered tensor with all algebraic curvature symmetries."""
    T = rng.normal(size=(dim,) * 4)
    T = T - np.transpose(T, (1, 0, 2, 3))
    T = T - np.transpose(T, (0, 1, 3, 2))
    T = T + np.transpose(T, (2, 3, 0, 1))
    cyc = T + np.transpose(T, (0, 2, 3, 1)) + np.transpose(T, (0, 3, 1, 2))
    return (T - cyc / 3.0) / 8.0


def random_einstein(g: np.ndarray, triple: TripleMatrices, rng: np.random.Generator) -> np.ndarray:
    """Mixed curvature tensor with Ricci = 4(n+2) g: trace-free noise plus R_HP."""
    W = weyl_lowered(random_algebraic_curvature(g.shape[0], rng), g)
    return raise_first(W + r_hp_lowered(g, triple), g)


def transform_tensor(R: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Components of a (1,3) tensor in the basis e'_i = sum_j S[j, i] e_j."""
    Sinv = np.linalg.inv(S)
    return np.einsum("im,mnpq,nj,pk,ql->ijkl", Sinv, R, S, S, S, optimize=True)


def random_basis_change(dim: int, rng: np.random.Generator, max_cond: float = 10.0) -> np.ndarray:
    while True:
        S = np.eye(dim) + 0.3 * rng.normal(size=(dim, dim)) / np.sqrt(dim)
        if np.linalg.cond(S) < max_cond:
            return S


def t_invariance_check(
    R: np.ndarray,
    g: np.ndarray,
    triple: TripleMatrices,
    trials: int,
    seed: int,
    rotation_tol: float = 1e-10,
    covariance_tol: float = 1e-8,
    frame_trials: int | None = None,
) -> CheckResult:
    from .quaternion import random_rotation

    rng = np.random.default_rng([seed, 7])
    base = t_tensor(R, g, triple)
    scale = max(1.0, float(np.max(np.abs(base))))
    rot = 0.0
    for _ in range(trials):
        A = random_rotation(rng)
        rot = max(rot, float(np.max(np.abs(t_tensor(R, g, rotate_triple(A, triple)) - base))))
    cov = 0.0
    for _ in range(trials if frame_trials is None else frame_trials):
        S = random_basis_change(g.shape[0], rng)
        Sinv = np.linalg.inv(S)
        triple_s = TripleMatrices.from_array(np.einsum("ij,ajk,kl->ail", Sinv, triple.as_array(), S))
        T_s = t_tensor(transform_tensor(R, S), S.T @ g @ S, triple_s)
        cov = max(cov, float(np.max(np.abs(T_s - transform_tensor(base, S)))) / scale)
    passed = rot <= rotation_tol and cov <= covariance_tol
    return CheckResult(
        "t_invariance",
        passed,
        max(rot, cov),
        trials,
        {"rotation_residual": rot, "covariance_residual": cov,
         "rotation_tol": rotation_tol, "covariance_tol": covariance_tol},
    )


# Curvature from metric derivatives -------------------------------------------------

def christoffel(g: np.ndarray, dg: np.ndarray, d2g: np.ndarray, d3g: np.ndarray | None = None):
    """Gamma^i_{jk} and its first (and optionally second) partial derivatives.

    Derivative arrays put the differentiation indices first: ``dGamma[a, i, j, k]``.
    """
    ginv = np.linalg.inv(g)
    dginv = -np.einsum("im,amn,nj->aij", ginv, dg, ginv)
    # Gamma_{l jk} = (d_j g_lk + d_k g_lj - d_l g_jk) / 2
    low = 0.5 * (np.einsum("jlk->ljk", dg) + np.einsum("klj->ljk", dg) - dg)
    dlow = 0.5 * (
        np.einsum("ajlk->aljk", d2g) + np.einsum("aklj->aljk", d2g) - d2g
    )
    gamma = np.einsum("il,ljk->ijk", ginv, low)
    dgamma = np.einsum("ail,ljk->aijk", dginv, low) + np.einsum("il,aljk->aijk", ginv, dlow)
    if d3g is None:
        return gamma, dgamma
    d2ginv = (
        -np.einsum("im,abmn,nj->abij", ginv, d2g, ginv)
        - np.einsum("aim,bmn,nj->abij", dginv, dg, ginv)
        - np.einsum("im,bmn,anj->abij", ginv, dg, dginv)
    )
    d2low = 0.5 * (
        np.einsum("abjlk->abljk", d3g) + np.einsum("abklj->abljk", d3g) - d3g
    )
    d2gamma = (
        np.einsum("abil,ljk->abijk", d2ginv, low)
        + np.einsum("ail,bljk->abijk", dginv, dlow)
        + np.einsum("bil,aljk->abijk", dginv, dlow)
        + np.einsum("il,abljk->abijk", ginv, d2low)
    )
    return gamma, dgamma, d2gamma


def riemann_from_gamma(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """R^i_{jkl} = d_k G^i_{lj} - d_l G^i_{kj} + G^i_{km} G^m_{lj} - G^i_{lm} G^m_{kj}."""
    return (
        np.einsum("kilj->ijkl", dgamma)
        - np.einsum("likj->ijkl", dgamma)
        + np.einsum("ikm,mlj->ijkl", gamma, gamma)
        - np.einsum("ilm,mkj->ijkl", gamma, gamma)
    )


def riemann_from_metric(g: np.ndarray, dg: np.ndarray, d2g: np.ndarray) -> np.ndarray:
    gamma, dgamma = christoffel(g, dg, d2g)
    return riemann_from_gamma(gamma, dgamma)


def cotton_from_metric(g: np.ndarray, dg: np.ndarray, d2g: np.ndarray, d3g: np.ndarray) -> np.ndarray:
    """C_{ijk} = nabla_k S_ij - nabla_j S_ik with S = Ric - (sigma/4) g (dimension 3)."""
    if g.shape != (3, 3):
        raise ValueError("the Cotton tensor is computed in dimension 3")
    gamma, dgamma, d2gamma = christoffel(g, dg, d2g, d3g)
    R = riemann_from_gamma(gamma, dgamma)
    dR = (
        np.einsum("akilj->aijkl", d2gamma)
        - np.einsum("alikj->aijkl", d2gamma)
        + np.einsum("aikm,mlj->aijkl", dgamma, gamma)
        + np.einsum("ikm,amlj->aijkl", gamma, dgamma)
        - np.einsum("ailm,mkj->aijkl", dgamma, gamma)
        - np.einsum("ilm,amkj->aijkl", gamma, dgamma)
    )
    ric = np.einsum("ijil->jl", R)
    dric = np.einsum("aijil->ajl", dR)
    ginv = np.linalg.inv(g)
    dginv = -np.einsum("im,amn,nj->aij", ginv, dg, ginv)
    sigma = np.einsum("jl,jl->", ginv, ric)
    dsigma = np.einsum("ajl,jl->a", dginv, ric) + np.einsum("jl,ajl->a", ginv, dric)
    S = ric - sigma / 4.0 * g
    dS = dric - np.einsum("a,ij->aij", dsigma, g) / 4.0 - sigma / 4.0 * dg
    # nabla_k S_ij = d_k S_ij - G^m_ki S_mj - G^m_kj S_im
    nabla = dS - np.einsum("mki,mj->kij", gamma, S) - np.einsum("mkj,im->kij", gamma, S)
    return np.einsum("kij->ijk", nabla) - np.einsum("jik->ijk", nabla)


def cotton3(metric_fn, point: Iterable[float]) -> np.ndarray:
    """Cotton tensor C_{ijk} of a 3-dimensional metric given as a function of coordinates."""
    from .jets import metric_derivatives

    g, dg, d2g, d3g = metric_derivatives(metric_fn, list(point), order=3)
    return cotton_from_metric(g, dg, d2g, d3g)


def riemann_to_json(R: np.ndarray) -> str:
    dim = int(R.shape[0])
    return json.dumps({"dim": dim, "layout": RIEMANN_LAYOUT, "data": [float(v) for v in R.reshape(-1)]})


def riemann_from_json(text: str) -> np.ndarray:
    obj = json.loads(text)
    if obj.get("layout") != RIEMANN_LAYOUT:
        raise ValueError(f"unsupported layout {obj.get('layout')!r}")
    dim = int(obj["dim"])
    data = np.asarray(obj["data"], dtype=float)
    if data.size != dim**4:
        raise ValueError("data length does not match dim**4")
    return data.reshape((dim,) * 4)


def model_flatness_check(p: int, q: int, samples: int, seed: int, perturb: bool = False, tol: float = 1e-5) -> CheckResult:
    """Numeric Riemann tensor of the model quadric minus the constant curvature term on D.

    With ``perturb`` the ambient form is scaled by 1 + 0.1 along one frame
    coordinate; the check must then fail, which validates sensitivity.
    """
    from .model_quadric import build_dframe, chart_basis, numeric_riemann, random_point

    name = "model_flatness_perturbed" if perturb else "model_flatness"
    if p + q < 1:
        return CheckResult.skip(name, "needs p + q >= 1")
    worst = 0.0
    for s in range(samples):
        x = random_point(p, q, [seed, s])
        frame = build_dframe(x, [seed, s, 1])
        R, g = numeric_riemann(x, chart_basis(x, frame), perturb=perturb, with_metric=True)
        D = slice(3, None)
        T = R[D, D, D, D] - constant_curvature(g[D, D])
        worst = max(worst, float(np.max(np.abs(T))))
    return CheckResult.from_residual(name, worst, tol, samples, perturbed=perturb)

"""Fiberwise gauge changes of the quaternionic 1-form and the structure group G.

A gauge change replaces omega by s * a omega conj(a) with s > 0 and a a unit
quaternion.  In components this is the row-vector rule
(w1, w2, w3) -> s (w1, w2, w3) A with A = ad_matrix(a).

Real coframe ordering is slot-major: (omega_1, omega_2, omega_3, then the
four real components of each quaternionic slot in turn).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import TripleMatrices, rotate_triple, standard_triple
from .indefinite_linear import QMatrix, Signature, derealify, qmatmul, qmatvec, qstar, random_sp, realify, sp_residual
from .quaternion import UnitQuaternion, ad_matrix, qconj, qmul, right_matrix, unit_from_rotation
from .report import CheckResult

NONDEGENERATE_TOL = 1e-10
RELATION_TOL = 1e-6
CYCLIC = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


class NotQuaternionicFiber(ValueError):
    pass


@dataclass(frozen=True)
class FiberData:
    g: np.ndarray
    sigma: np.ndarray  # (3, N, N), sigma[a] = d omega_a restricted to D
    triple: TripleMatrices

    def __post_init__(self) -> None:
        for s in self.sigma:
            if np.max(np.abs(s + s.T)) > 1e-10:
                raise ValueError("sigma must be antisymmetric")
            if abs(np.linalg.det(s)) <= NONDEGENERATE_TOL:
                raise ValueError("sigma is degenerate")
        if symmetric_residual(self.sigma, self.triple) > 1e-9:
            raise ValueError("sigma_a(J_a X, Y) is not symmetric")

    @property
    def dim(self) -> int:
        return self.g.shape[0]


def sigma_from_triple(g: np.ndarray, triple: TripleMatrices) -> np.ndarray:
    """sigma_a(X, Y) = g(X, J_a Y), i.e. the negated lowered triple."""
    return np.stack([g @ J for J in triple])


def metric_from_sigma(sigma: np.ndarray, triple: TripleMatrices, alpha: int) -> np.ndarray:
    """g(X, Y) = sigma_alpha(J_alpha X, Y)."""
    J = triple.as_array()[alpha]
    return J.T @ sigma[alpha]


def symmetric_residual(sigma: np.ndarray, triple: TripleMatrices) -> float:
    out = 0.0
    for a in range(3):
        m = metric_from_sigma(sigma, triple, a)
        out = max(out, float(np.max(np.abs(m - m.T))))
    return out


def random_fiber(p: int, q: int, rng: np.random.Generator) -> FiberData:
    """Standard fiber moved by a random element of Sp(p, q).Sp(1)."""
    g0, t0 = standard_triple(p, q)
    U = realify(random_sp(Signature(p, q), rng).entries)
    b = UnitQuaternion.random(rng).as_array()
    P = U @ np.kron(np.eye(p + q), right_matrix(b))
    Pinv = np.linalg.inv(P)
    g = P.T @ g0 @ P
    triple = TripleMatrices.from_array(np.stack([Pinv @ J @ P for J in t0]))
    return FiberData(g, sigma_from_triple(g, triple), triple)


def transform_omega(values: np.ndarray, s: float, a) -> np.ndarray:
    """Components (..., 3) of s * a omega conj(a), computed by conjugation."""
    if s <= 0:
        raise ValueError("scale must be positive")
    a = UnitQuaternion.from_quaternion(a).as_array()
    v = np.asarray(values, dtype=float)
    q = np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)
    return s * qmul(qmul(a, q), qconj(a))[..., 1:]


def transform_omega_matrix(values: np.ndarray, s: float, a) -> np.ndarray:
    """Same map via the row-vector rule omega -> s omega A."""
    return s * np.asarray(values, dtype=float) @ ad_matrix(a)


def transform_sigma(sigma: np.ndarray, s: float, a) -> np.ndarray:
    A = ad_matrix(a)
    return s * np.einsum("ba,bij->aij", A, sigma)


def j_from_sigma(sigma: np.ndarray, tol: float = RELATION_TOL) -> TripleMatrices:
    """J_gamma = sigma_beta^{-1} sigma_alpha over cyclic (alpha, beta, gamma)."""
    sigma = np.asarray(sigma, dtype=float)
    out = np.empty_like(sigma)
    for al, be, ga in CYCLIC:
        out[ga] = np.linalg.solve(sigma[be], sigma[al])
    triple = TripleMatrices.from_array(out)
    if not np.isfinite(out).all() or triple.relation_residual() > tol:
        raise NotQuaternionicFiber("not a quaternionic-CR fiber")
    return triple


def _triple_distance(t1: TripleMatrices, t2: TripleMatrices) -> float:
    return float(np.max(np.abs(t1.as_array() - t2.as_array())))


def gauge_residuals(f: FiberData, s: float, a) -> dict[str, float]:
    A = ad_matrix(a)
    sig2 = transform_sigma(f.sigma, s, a)
    J2 = j_from_sigma(sig2)
    metrics = [metric_from_sigma(sig2, J2, al) for al in range(3)]
    g2 = metrics[0]
    q_inv = 0.0
    for J in J2:
        q_inv = max(q_inv, float(np.max(np.abs(J.T @ g2 @ J - g2))))
    return {
        "rotation": _triple_distance(J2, rotate_triple(A, f.triple)),
        "scale": float(np.max(np.abs(g2 - s * f.g))),
        "alpha_independence": max(float(np.max(np.abs(m - g2))) for m in metrics[1:]),
        "symmetry": float(np.max(np.abs(g2 - g2.T))),
        "q_invariance": q_inv,
    }


def gauge_consistency_check(f: FiberData, trials: int, seed: int, tol: float = 1e-10,
                            s: float | None = None, a=None) -> CheckResult:
    """Random gauges unless (s, a) is pinned; residuals are relative to max(1, s)."""
    worst: dict[str, float] = {}
    for t in range(trials):
        rng = np.random.default_rng([seed, t, 23])
        s_t = s if s is not None else float(np.exp(rng.uniform(-1, 1)))
        a_t = a if a is not None else UnitQuaternion.random(rng)
        for k, v in gauge_residuals(f, s_t, a_t).items():
            worst[k] = max(worst.get(k, 0.0), v / max(1.0, s_t))
    res = max(worst.values()) if worst else 0.0
    return CheckResult("gauge_consistency", res <= tol, res, trials, {**worst, "tol": tol})


# Structure group G --------------------------------------------------------------

def _v_matrix(vt: np.ndarray) -> np.ndarray:
    """4x3 real matrix of omega -> vt * omega on Im H (column b = coords of vt e_b)."""
    return np.stack([qmul(vt, e) for e in np.eye(4)[1:]], axis=1)


def _canonical_sign(a: np.ndarray, Up: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(U', a) and (-U', -a) define the same element; pick a with first nonzero coeff > 0."""
    k = int(np.argmax(np.abs(a) > 1e-8))
    if a[k] < 0:
        return -a, -Up
    return a, Up


@dataclass(frozen=True)
class GMatrix:
    """Element acting on the coframe by
    omega -> lam omega conj(lam),  w^j -> U'^j_l w^l conj(lam) + lam vt^j omega conj(lam),
    with lam = u a.
    """

    u: float
    a: np.ndarray
    Uprime: np.ndarray  # (n, n, 4) quaternionic entries in Sp(p, q)
    v: np.ndarray  # (n, 4)
    p: int
    q: int

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def lam(self) -> np.ndarray:
        return self.u * self.a

    @property
    def U(self) -> np.ndarray:
        """Real 4n x 4n part: realify(U') followed by right multiplication by conj(a)."""
        if self.n == 0:
            return np.zeros((0, 0))
        return realify(self.Uprime) @ np.kron(np.eye(self.n), right_matrix(qconj(self.a)))

    def matrix(self) -> np.ndarray:
        n, u = self.n, self.u
        A = ad_matrix(self.a)
        out = np.zeros((4 * n + 3, 4 * n + 3))
        out[:3, :3] = u**2 * A.T
        rot = np.zeros((4, 4))
        rot[0, 0] = 1.0
        rot[1:, 1:] = A.T
        for j in range(n):
            out[3 + 4 * j: 7 + 4 * j, :3] = u**2 * rot @ _v_matrix(self.v[j])
        out[3:, 3:] = u * self.U
        return out

    def quaternionic(self) -> np.ndarray:
        """(n+1) x (n+1) matrix [[lam, 0], [lam vt, U']]; multiplicative in the group law."""
        n = self.n
        Q = np.zeros((n + 1, n + 1, 4))
        Q[0, 0] = self.lam
        if n:
            Q[1:, 0] = qmul(self.lam, self.v)
            Q[1:, 1:] = self.Uprime
        return Q

    def compose(self, other: "GMatrix") -> "GMatrix":
        """Parameters of self @ other by the closed-form law."""
        l1, l2 = self.lam, other.lam
        L = qmul(l1, l2)
        Linv = qconj(L) / float(L @ L)
        Up = qmatmul(self.Uprime, other.Uprime) if self.n else self.Uprime
        if self.n:
            vt = qmul(Linv, qmatvec(self.Uprime, qmul(l2, other.v)) + qmul(qmul(l1, self.v), l2))
        else:
            vt = self.v
        a, Up = _canonical_sign(qmul(self.a, other.a), Up)
        return GMatrix(self.u * other.u, a, Up, vt, self.p, self.q)


def build_g_matrix(u: float, a, Uprime: QMatrix | np.ndarray | None, v: np.ndarray | None,
                   p: int = 0, q: int = 0) -> GMatrix:
    if u <= 0:
        raise ValueError("u must be positive")
    a = UnitQuaternion.from_quaternion(a).as_array()
    if isinstance(Uprime, QMatrix):
        p, q = Uprime.sig.r, Uprime.sig.s
        Up = np.array(Uprime.entries)
    else:
        Up = np.zeros((0, 0, 4)) if Uprime is None else np.asarray(Uprime, dtype=float)
    n = p + q
    if Up.shape != (n, n, 4):
        raise ValueError("U' shape does not match (p, q)")
    if n and sp_residual(QMatrix(Up, Signature(p, q))) > 1e-9:
        raise ValueError("U' is not in Sp(p, q)")
    vt = np.zeros((n, 4)) if v is None else np.asarray(v, dtype=float).reshape(n, 4)
    a, Up = _canonical_sign(a, Up)
    return GMatrix(float(u), a, Up, vt, p, q)


def recover_parameters(M: np.ndarray, p: int, q: int) -> GMatrix:
    """Invert GMatrix.matrix; raises if M is not of the block form."""
    n = p + q
    if M.shape != (4 * n + 3, 4 * n + 3):
        raise ValueError("wrong size")
    if n and np.max(np.abs(M[:3, 3:])) > 1e-9:
        raise ValueError("upper-right block must vanish")
    TL = M[:3, :3]
    det = np.linalg.det(TL)
    if det <= 0:
        raise ValueError("top-left block is not a positive multiple of a rotation")
    u2 = det ** (1.0 / 3.0)
    u = float(np.sqrt(u2))
    A = TL.T / u2
    a = unit_from_rotation(A).as_array()
    if n:
        R = M[3:, 3:] / u @ np.kron(np.eye(n), right_matrix(a))
        Up = derealify(R)
        rot = np.eye(4)
        rot[1:, 1:] = A
        vt = np.empty((n, 4))
        for j in range(n):
            Vj = rot @ M[3 + 4 * j: 7 + 4 * j, :3] / u2
            vt[j] = -qmul(Vj[:, 0], np.eye(4)[1])  # (vt i)(-i) = vt
    else:
        Up, vt = np.zeros((0, 0, 4)), np.zeros((0, 4))
    a, Up = _canonical_sign(a, Up)
    return GMatrix(u, a, Up, vt, p, q)


def parameter_distance(g1: GMatrix, g2: GMatrix) -> float:
    parts = [abs(g1.u - g2.u), float(np.max(np.abs(g1.a - g2.a)))]
    if g1.n:
        parts.append(float(np.max(np.abs(g1.Uprime - g2.Uprime))))
        parts.append(float(np.max(np.abs(g1.v - g2.v))))
    return max(parts)


def random_g(p: int, q: int, rng: np.random.Generator) -> GMatrix:
    n = p + q
    Up = random_sp(Signature(p, q), rng) if n else None
    return build_g_matrix(float(np.exp(rng.uniform(-0.5, 0.5))), UnitQuaternion.random(rng), Up,
                          0.5 * rng.normal(size=(n, 4)), p, q)


def sim_image(g: GMatrix) -> np.ndarray:
    """Upper block-triangular [[conj(lam), x], [0, X]] = conjugate transpose of the quaternionic matrix."""
    return qstar(g.quaternionic())


def sim_translation(g: GMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sim(H^n) data (X x^*, X, corner) read off from sim_image."""
    P = sim_image(g)
    x, X = P[0, 1:], P[1:, 1:]
    return qmatvec(X, qconj(x)) if g.n else x, X, P[0, 0]


def _sign_distance(P: np.ndarray, Q: np.ndarray) -> float:
    """Quaternionic lifts are defined up to an overall sign."""
    return min(float(np.max(np.abs(P - Q))), float(np.max(np.abs(P + Q))))


def g_closure_check(p: int, q: int, trials: int, seed: int, tol: float = 1e-9) -> CheckResult:
    closure = anti = block = 0.0
    min_det = np.inf
    for t in range(trials):
        rng = np.random.default_rng([seed, t, 31])
        g1, g2 = random_g(p, q, rng), random_g(p, q, rng)
        M = g1.matrix() @ g2.matrix()
        rec = recover_parameters(M, p, q)
        closure = max(closure, parameter_distance(rec, g1.compose(g2)))
        block = max(block, float(np.max(np.abs(rec.matrix() - M))))
        prod = g1.compose(g2)
        anti = max(anti, _sign_distance(sim_image(prod), qmatmul(sim_image(g2), sim_image(g1))))
        anti = max(anti, _sign_distance(prod.quaternionic(), qmatmul(g1.quaternionic(), g2.quaternionic())))
        min_det = min(min_det, float(np.linalg.det(M)))
    res = max(closure, anti, block)
    return CheckResult(
        "g_closure",
        res <= tol and min_det > 0,
        res,
        trials,
        {"parameter_recovery": closure, "block_form": block, "anti_isomorphism": anti, "min_det": min_det, "tol": tol},
    )

"""The quaternionic Heisenberg group, its similarity group and the null quadric.

A Heisenberg element (a, y) has a in Im H (stored as a quaternion array with
zero real part) and y in H^n with the form of signature (p, q).  The group
law is (a, y)(b, z) = (a + b - Im<y, z>, y + z).

The boundary model lives in H^{n+2} with signature (p+1, q+1), coordinates
ordered as (first, z_+, z_-, last) so that the positive slots come first.
Projective points are stored normalized to |z_- block| = 1.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .indefinite_linear import QMatrix, Signature, herm_arr, qidentity, qmatmul, qmatvec, random_sp, sp_residual
from .model_quadric import (
    CalibrationConstants,
    DFrame,
    GOLDEN_CALIBRATION,
    QuadricPoint,
    omega0,
    xi_fields,
)
from .quaternion import UnitQuaternion, qconj, qmul, qnorm2
from .report import CheckResult

PROJ_TOL = 1e-9
NULL_TOL = 1e-10
SQRT2 = math.sqrt(2.0)


def _eta(p: int, q: int) -> np.ndarray:
    return np.concatenate([np.ones(p), -np.ones(q)])


def _boundary_eta(p: int, q: int) -> np.ndarray:
    return np.concatenate([np.ones(p + 1), -np.ones(q + 1)])


@dataclass(frozen=True)
class HeisPoint:
    a: np.ndarray
    y: np.ndarray
    p: int
    q: int

    def __post_init__(self) -> None:
        a = np.array(self.a, dtype=float).reshape(-1)
        if a.shape == (3,):
            a = np.concatenate([[0.0], a])
        if a.shape != (4,) or abs(a[0]) > 1e-12:
            raise ValueError("center coordinate must be purely imaginary")
        a[0] = 0.0
        y = np.array(self.y, dtype=float).reshape(-1, 4)
        if y.shape[0] != self.p + self.q:
            raise ValueError("y length does not match (p, q)")
        a.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)

    @property
    def eta(self) -> np.ndarray:
        return _eta(self.p, self.q)

    @classmethod
    def identity(cls, p: int, q: int) -> "HeisPoint":
        return cls(np.zeros(4), np.zeros((p + q, 4)), p, q)

    @classmethod
    def random(cls, p: int, q: int, rng: np.random.Generator) -> "HeisPoint":
        return cls(rng.normal(size=3), rng.normal(size=(p + q, 4)), p, q)

    def distance(self, other: "HeisPoint") -> float:
        da = float(np.max(np.abs(self.a - other.a)))
        dy = float(np.max(np.abs(self.y - other.y))) if self.y.size else 0.0
        return max(da, dy)


def _im(q: np.ndarray) -> np.ndarray:
    out = np.array(q, dtype=float)
    out[..., 0] = 0.0
    return out


def _herm_n(y: np.ndarray, z: np.ndarray, eta: np.ndarray) -> np.ndarray:
    if y.shape[0] == 0:
        return np.zeros(4)
    return herm_arr(y, z, eta)


def heis_mul(m1: HeisPoint, m2: HeisPoint) -> HeisPoint:
    if (m1.p, m1.q) != (m2.p, m2.q):
        raise ValueError("signature mismatch")
    a = m1.a + m2.a - _im(_herm_n(m1.y, m2.y, m1.eta))
    return HeisPoint(a, m1.y + m2.y, m1.p, m1.q)


def heis_inv(m: HeisPoint) -> HeisPoint:
    return HeisPoint(-m.a, -m.y, m.p, m.q)


def commutator(m1: HeisPoint, m2: HeisPoint) -> HeisPoint:
    return heis_mul(heis_mul(m1, m2), heis_mul(heis_inv(m1), heis_inv(m2)))


@dataclass(frozen=True)
class SimElement:
    """Similarity (A g, t) followed by translation: m -> trans . lin(m)."""

    A: QMatrix | None
    g: UnitQuaternion
    t: float
    trans: HeisPoint

    def __post_init__(self) -> None:
        if self.t <= 0:
            raise ValueError("dilation factor must be positive")
        if self.A is not None and sp_residual(self.A) > 1e-10:
            raise ValueError("A is not in Sp(p, q)")

    @property
    def p(self) -> int:
        return self.trans.p

    @property
    def q(self) -> int:
        return self.trans.q

    @classmethod
    def identity(cls, p: int, q: int) -> "SimElement":
        A = QMatrix.identity(Signature(p, q)) if p + q else None
        return cls(A, UnitQuaternion(), 1.0, HeisPoint.identity(p, q))

    @classmethod
    def random(cls, p: int, q: int, rng: np.random.Generator) -> "SimElement":
        A = random_sp(Signature(p, q), rng) if p + q else None
        g = UnitQuaternion.random(rng)
        t = float(np.exp(rng.uniform(-0.5, 0.5)))
        trans = HeisPoint(0.5 * rng.normal(size=3), 0.5 * rng.normal(size=(p + q, 4)), p, q)
        return cls(A, g, t, trans)


def sim_action0(s: SimElement, m: HeisPoint) -> HeisPoint:
    """Linear part: (a, y) -> (t^2 g a g^-1, t A y g^-1)."""
    g = s.g.as_array()
    gi = qconj(g)
    a = s.t**2 * qmul(qmul(g, m.a), gi)
    y = m.y
    if y.size:
        y = s.t * qmul(qmatvec(s.A.entries, y), gi)
    return HeisPoint(a, y, m.p, m.q)


def sim_action(s: SimElement, m: HeisPoint) -> HeisPoint:
    return heis_mul(s.trans, sim_action0(s, m))


def sim_action_right(s: SimElement, m: HeisPoint) -> HeisPoint:
    """lin(m) . trans: the variant realized linearly through the embedding."""
    return heis_mul(sim_action0(s, m), s.trans)


# Projective null quadric -------------------------------------------------------

@dataclass(frozen=True)
class ProjPoint:
    x: np.ndarray
    p: int
    q: int

    @property
    def eta(self) -> np.ndarray:
        return _boundary_eta(self.p, self.q)


def null_residual(x: np.ndarray, p: int, q: int) -> float:
    return float(np.max(np.abs(herm_arr(x, x, _boundary_eta(p, q)))))


def proj_normalize(x: np.ndarray, p: int, q: int, tol: float = NULL_TOL) -> ProjPoint:
    """Representative with |z_- block| = 1 (real rescaling)."""
    x = np.asarray(x, dtype=float).reshape(-1, 4)
    if x.shape[0] != p + q + 2:
        raise ValueError("vector length does not match (p, q)")
    scale = float(np.max(np.abs(x)))
    if scale == 0.0:
        raise ValueError("zero vector has no projective class")
    if null_residual(x / scale, p, q) > tol:
        raise ValueError("vector is not null")
    neg = math.sqrt(float(np.sum(x[p + 1:] ** 2)))
    if neg <= 1e-12 * scale:
        raise ValueError("degenerate z_- block")
    out = x / neg
    out.setflags(write=False)
    return ProjPoint(out, p, q)


def proj_equal(P1: ProjPoint, P2: ProjPoint, tol: float = PROJ_TOL) -> bool:
    """[x1] == [x2]: solve x1_k lam = x2_k at the largest coordinate, check all."""
    x1, x2 = P1.x, P2.x
    k = int(np.argmax(qnorm2(x1)))
    lam = qmul(qconj(x1[k]) / qnorm2(x1[k]), x2[k])
    return bool(np.max(np.abs(qmul(x1, lam) - x2)) <= tol * max(1.0, float(np.max(np.abs(x2)))))


def embed_heis(m: HeisPoint) -> ProjPoint:
    """(a, z_+, z_-) -> [(r - 1 + a, sqrt2 z_+, sqrt2 z_-, r + 1 + a)], r = (|z_+|^2 - |z_-|^2) / 2."""
    r = 0.5 * float(np.sum(m.eta * qnorm2(m.y))) if m.y.size else 0.0
    first = m.a + np.array([r - 1.0, 0, 0, 0])
    last = m.a + np.array([r + 1.0, 0, 0, 0])
    x = np.concatenate([first[None], SQRT2 * m.y[: m.p], SQRT2 * m.y[m.p:], last[None]])
    return proj_normalize(x, m.p, m.q)


def heis_from_proj(P: ProjPoint) -> HeisPoint:
    """Inverse of embed_heis on its image (last - first = 2 after rescaling)."""
    x = P.x
    d = x[-1] - x[0]
    if np.sqrt(qnorm2(d)) < 1e-12:
        raise ValueError("point at infinity has no Heisenberg coordinates")
    lam = 2.0 * qconj(d) / qnorm2(d)
    y = qmul(x, lam)
    a = _im(0.5 * (y[0] + y[-1]))
    return HeisPoint(a, y[1:-1] / SQRT2, P.p, P.q)


def embed_sigma(x: QuadricPoint) -> ProjPoint:
    """(z, w) -> [(z, w, 1)]."""
    v = np.concatenate([x.x, np.array([[1.0, 0, 0, 0]])])
    return proj_normalize(v, x.p, x.q)


def lift_tangent(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v, np.zeros((1, 4))])


def psp_action(M: QMatrix, P: ProjPoint, tol: float = 1e-10) -> ProjPoint:
    if sp_residual(M) > tol:
        raise ValueError("matrix is not in Sp(p+1, q+1)")
    return proj_normalize(qmatvec(M.entries, P.x), P.p, P.q)


def hcan_residual(P: ProjPoint, v: np.ndarray) -> float:
    return float(np.max(np.abs(herm_arr(P.x, v, P.eta))))


def hcan_member(P: ProjPoint, v: np.ndarray, tol: float = 1e-12) -> bool:
    """v in x^perp = {v : <x, v> = 0}, which projects onto H^can at [x]."""
    return hcan_residual(P, v) <= tol


def infinity(p: int, q: int) -> ProjPoint:
    x = np.zeros((p + q + 2, 4))
    x[0, 0] = x[-1, 0] = 1.0
    return proj_normalize(x, p, q)


def _light_cone_change(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Real-coefficient matrices C, C^-1 with X = C (mu, Z, nu): X_0 = mu - nu, X_last = mu + nu."""
    C = np.eye(m)
    C[0, 0], C[0, -1] = 1.0, -1.0
    C[-1, 0], C[-1, -1] = 1.0, 1.0
    return C, np.linalg.inv(C)


def _real_qmatrix(R: np.ndarray) -> np.ndarray:
    out = np.zeros(R.shape + (4,))
    out[..., 0] = R
    return out


def sim_matrix(s: SimElement) -> QMatrix:
    """Element of Sp(p+1, q+1) fixing infinity that realizes m -> lin(m) . trans.

    In light-cone coordinates (mu, Z, nu) the dilation/rotation part is
    diag(t g, A, g / t) and the translation by (b, w) is
    mu += <w, Z> / sqrt2 + (<w, w>/2 + b) nu,  Z += sqrt2 w nu.
    """
    p, q = s.p, s.q
    n = p + q
    m = n + 2
    g = s.g.as_array()
    R = np.zeros((m, m, 4))
    R[0, 0] = s.t * g
    R[-1, -1] = g / s.t
    if n:
        R[1:-1, 1:-1] = s.A.entries
    eta = _eta(p, q)
    w, b = s.trans.y, s.trans.a
    T = qidentity(m)
    if n:
        T[0, 1:-1] = (eta[:, None] * qconj(w)) / SQRT2
        T[1:-1, -1] = SQRT2 * w
        ww = float(np.sum(eta * qnorm2(w)))
    else:
        ww = 0.0
    T[0, -1] = b + np.array([0.5 * ww, 0, 0, 0])
    C, Cinv = _light_cone_change(m)
    M = qmatmul(qmatmul(_real_qmatrix(C), qmatmul(T, R)), _real_qmatrix(Cinv))
    return QMatrix(M, Signature(p + 1, q + 1))


# Pullback checks ----------------------------------------------------------------

def _frame_vectors(x: QuadricPoint, frame: DFrame | None) -> np.ndarray:
    parts = [xi_fields(x)]
    if frame is not None:
        parts.append(frame.e)
    return np.concatenate(parts)


def sp_sp1_pullback_residual(A: QMatrix, a: UnitQuaternion, x: QuadricPoint, frame: DFrame | None,
                             cal: CalibrationConstants = GOLDEN_CALIBRATION) -> float:
    """h(x) = A x conj(a): max |h* omega_0 - a omega_0 conj(a)| on the frame."""
    av = a.as_array()
    ac = qconj(av)
    hx = QuadricPoint(qmul(qmatvec(A.entries, x.x), ac), x.p, x.q)
    res = 0.0
    for v in _frame_vectors(x, frame):
        lhs = omega0(hx, qmul(qmatvec(A.entries, v), ac), cal)
        rhs = qmul(qmul(av, omega0(x, v, cal)), ac)
        res = max(res, float(np.max(np.abs(lhs - rhs))))
    return res


def projective_map_pullback(M: QMatrix, x: QuadricPoint, vecs: np.ndarray, cal: CalibrationConstants = GOLDEN_CALIBRATION,
                            min_last: float = 1e-3):
    """Pull omega_0 back through x -> [M (x, 1)] normalized to last coordinate 1.

    Returns (image point, array of h* omega_0 on vecs) or None when the image
    leaves the affine chart {last != 0}.
    """
    X = qmatvec(M.entries, lift_tangent(x.x) + np.eye(x.n + 2)[-1][:, None] * np.array([1.0, 0, 0, 0]))
    t = X[-1]
    if np.sqrt(qnorm2(t)) < min_last:
        return None
    tinv = qconj(t) / qnorm2(t)
    xp = QuadricPoint(qmul(X[:-1], tinv), x.p, x.q)
    vals = []
    for v in vecs:
        dX = qmatvec(M.entries, lift_tangent(v))
        dx = qmul(dX[:-1], tinv) - qmul(qmul(X[:-1], tinv), qmul(dX[-1], tinv))
        vals.append(omega0(xp, dx, cal))
    return xp, np.array(vals), t


def fit_conformal(transfer: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Fit transfer = s R with R in SO(3), s > 0; returns (s, R, relative residual)."""
    U, S, Vt = np.linalg.svd(transfer)
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    R = U @ D @ Vt
    s = float(np.trace(R.T @ transfer)) / 3.0
    res = float(np.max(np.abs(transfer - s * R))) / max(abs(s), 1e-300)
    return s, R, res


def sim_pullback_fit(s_el: SimElement, x: QuadricPoint, frame: DFrame | None,
                     cal: CalibrationConstants = GOLDEN_CALIBRATION) -> dict | None:
    """Fit h* omega_0 = lam omega_0 conj(lam) for the projective map of a Sim element."""
    M = sim_matrix(s_el)
    vecs = _frame_vectors(x, frame)
    out = projective_map_pullback(M, x, vecs, cal)
    if out is None:
        return None
    _, vals, t = out
    transfer = vals[:3, 1:].T  # column b = h* omega_0(xi_b)
    u2, R, res = fit_conformal(transfer)
    d_part = float(np.max(np.abs(vals[3:]))) / u2 if len(vals) > 3 else 0.0
    predicted_u2 = 1.0 / float(qnorm2(t))
    return {
        "u2": u2,
        "fit_residual": max(res, d_part),
        "scale_vs_prediction": abs(u2 - predicted_u2) / predicted_u2,
    }


def pullback_omega_check(p: int, q: int, samples: int, seed: int, tol_exact: float = 1e-9,
                         tol_fit: float = 1e-6) -> CheckResult:
    from .model_quadric import build_dframe, random_point

    exact = 0.0
    fit = 0.0
    skipped = 0
    min_u2 = math.inf
    for s in range(samples):
        rng = np.random.default_rng([seed, s, 11])
        x = random_point(p, q, [seed, s])
        frame = build_dframe(x, [seed, s, 1]) if p + q else None
        A = random_sp(Signature(p + 1, q), rng)
        a = UnitQuaternion.random(rng)
        exact = max(exact, sp_sp1_pullback_residual(A, a, x, frame))
        r = sim_pullback_fit(SimElement.random(p, q, rng), x, frame)
        if r is None:
            skipped += 1
            continue
        fit = max(fit, r["fit_residual"], r["scale_vs_prediction"])
        min_u2 = min(min_u2, r["u2"])
    passed = exact <= tol_exact and fit <= tol_fit and min_u2 > 0
    return CheckResult(
        "pullback_conformality",
        passed,
        max(exact, fit),
        samples,
        {"exact_residual": exact, "fit_residual": fit, "min_u2": min_u2,
         "skipped_samples": skipped, "tol_exact": tol_exact, "tol_fit": tol_fit},
    )


def load_heis_csv(path: str, p: int, q: int) -> tuple[list[HeisPoint], list[str]]:
    """Rows of 3 + 4n reals; invalid rows are reported and skipped."""
    width = 3 + 4 * (p + q)
    points, problems = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                vals = [float(c) for c in row]
                if len(vals) != width or not all(map(math.isfinite, vals)):
                    raise ValueError(f"expected {width} finite values")
                points.append(HeisPoint(vals[:3], np.array(vals[3:]).reshape(-1, 4), p, q))
            except ValueError as exc:
                problems.append(f"row {lineno}: {exc}")
    return points, problems

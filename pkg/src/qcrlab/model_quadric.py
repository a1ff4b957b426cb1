"""The model quadric Sigma = {x in H^{n+1} : Re<x, x> = 1} of signature (p+1, q).

Points and ambient tangent vectors are real arrays of shape ``(n+1, 4)``.
The Reeb fields are xi_a(x) = x e_a with (e_1, e_2, e_3) = (i, j, k), the
canonical form is omega_0(v) = s_omega * (-<x, v>), and the distribution D
is the common kernel of omega_0 inside T Sigma.

Sign and normalization conventions that are not fixed by the defining
formulas live in :class:`CalibrationConstants`; :func:`calibrate` sweeps the
candidate values and :data:`GOLDEN_CALIBRATION` pins the unique survivor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .curvature import TripleMatrices, lowered_triple, riemann_from_metric, standard_triple
from .indefinite_linear import QMatrix, Signature, herm_arr, qmatvec, re_form_arr
from .jets import jsqrt, metric_derivatives
from .quaternion import IMAG_UNITS, qconj, qmul
from .report import CheckResult

TANGENT_TOL = 1e-10
POINT_TOL = 1e-12
GRAM_TOL = 1e-9
CHART_RADIUS = 0.1
FD_STEP = 1e-4
MAX_RETRIES = 100


@dataclass(frozen=True)
class CalibrationConstants:
    s_omega: int
    c_wedge: float
    c_quad: float


GOLDEN_CALIBRATION = CalibrationConstants(s_omega=-1, c_wedge=0.5, c_quad=-1.0)
SWEEP = (
    (-1, 1),
    (0.5, 1.0),
    (-2.0, -1.0, 1.0, 2.0),
)


@dataclass(frozen=True)
class QuadricPoint:
    x: np.ndarray
    p: int
    q: int

    def __post_init__(self) -> None:
        arr = np.array(self.x, dtype=float).reshape(-1, 4)
        if arr.shape[0] != self.p + self.q + 1:
            raise ValueError("point length does not match (p, q)")
        arr.setflags(write=False)
        object.__setattr__(self, "x", arr)
        err = abs(re_form_arr(arr, arr, self.eta) - 1.0)
        if err > POINT_TOL:
            raise ValueError(f"not on the quadric: |Re<x,x> - 1| = {err:.3e}")

    @property
    def n(self) -> int:
        return self.p + self.q

    @property
    def sig(self) -> Signature:
        return Signature(self.p + 1, self.q)

    @property
    def eta(self) -> np.ndarray:
        return np.concatenate([np.ones(self.p + 1), -np.ones(self.q)])


@dataclass(frozen=True)
class DFrame:
    base: QuadricPoint
    e: np.ndarray  # (4n, n+1, 4)

    @property
    def signs(self) -> np.ndarray:
        return np.repeat(np.concatenate([np.ones(self.base.p), -np.ones(self.base.q)]), 4)

    def gram(self) -> np.ndarray:
        eta = self.base.eta
        return re_form_arr(self.e[:, None], self.e[None, :], eta)

    def theta(self, v: np.ndarray) -> np.ndarray:
        """Dual coefficients theta^i(v) in this orthonormal frame."""
        return self.signs * re_form_arr(self.e, v[None], self.base.eta)


def validate_point(arr: np.ndarray, p: int, q: int) -> QuadricPoint:
    return QuadricPoint(np.asarray(arr, dtype=float), p, q)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_point(p: int, q: int, seed) -> QuadricPoint:
    """Deterministic random point of Sigma with moderate hyperbolic extent."""
    rng = _rng(seed)
    neg = 0.5 * rng.normal(size=(q, 4))
    pos = rng.normal(size=(p + 1, 4))
    pos *= np.sqrt(1.0 + np.sum(neg * neg)) / np.linalg.norm(pos)
    x = np.concatenate([pos, neg])
    eta = np.concatenate([np.ones(p + 1), -np.ones(q)])
    x /= np.sqrt(re_form_arr(x, x, eta))
    return QuadricPoint(x, p, q)


def xi_fields(x: QuadricPoint) -> np.ndarray:
    """xi_a(x) = x e_a, shape (3, n+1, 4)."""
    return qmul(x.x[None], IMAG_UNITS[:, None, :])


def linear_field_bracket(q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Quaternion s with [V_q, V_r] = V_s for V_q(x) = x q (closed form)."""
    # [V_q, V_r](x) = DV_r(V_q) - DV_q(V_r) = x q r - x r q
    return qmul(q, r) - qmul(r, q)


def check_tangent(x: QuadricPoint, v: np.ndarray) -> None:
    err = abs(float(re_form_arr(x.x, v, x.eta)))
    if err > TANGENT_TOL:
        raise ValueError(f"vector is not tangent to the quadric (Re<x,v> = {err:.3e})")


def omega0(x: QuadricPoint, v: np.ndarray, cal: CalibrationConstants = GOLDEN_CALIBRATION) -> np.ndarray:
    check_tangent(x, v)
    return -cal.s_omega * herm_arr(x.x, v, x.eta)


def d_omega0(x: QuadricPoint, v: np.ndarray, w: np.ndarray, cal: CalibrationConstants = GOLDEN_CALIBRATION) -> np.ndarray:
    """d omega_0(v, w) = -c_wedge s_omega (<v, w> - conj<v, w>)."""
    h = herm_arr(v, w, x.eta)
    return -cal.c_wedge * cal.s_omega * (h - qconj(h))


def wedge(alpha_v: np.ndarray, alpha_w: np.ndarray, beta_v: np.ndarray, beta_w: np.ndarray, c: float) -> np.ndarray:
    """(alpha ^ beta)(v, w) = c (alpha(v) beta(w) - alpha(w) beta(v)) for quaternion values."""
    return c * (qmul(alpha_v, beta_w) - qmul(alpha_w, beta_v))


def project_D(x: QuadricPoint, v: np.ndarray) -> np.ndarray:
    eta = x.eta
    out = v - x.x * re_form_arr(x.x, v, eta)
    for xi in xi_fields(x):
        out = out - xi * re_form_arr(xi, v, eta)
    return out


def build_dframe(x: QuadricPoint, seed) -> DFrame:
    """g-orthonormal quaternionic frame (f, f i, f j, f k, ...) of D.

    Positive quadruples come first.  Isotropic or wrong-sign candidates are
    discarded and redrawn rather than pivoted.
    """
    n = x.n
    if n < 1:
        raise ValueError("D is trivial when p + q = 0")
    rng = _rng(seed)
    eta = x.eta
    basis: list[np.ndarray] = []
    signs: list[float] = []
    targets = [1.0] * x.p + [-1.0] * x.q
    for target in targets:
        for _ in range(MAX_RETRIES):
            v = 0.1 * rng.normal(size=(n + 1, 4))
            block = slice(0, x.p + 1) if target > 0 else slice(x.p + 1, n + 1)
            v[block] += rng.normal(size=v[block].shape)
            v = project_D(x, v)
            for f, eps in zip(basis, signs):
                v = v - eps * qmul(f, herm_arr(f, v, eta))
            nrm = float(herm_arr(v, v, eta)[0])
            if abs(nrm) >= 1e-8 and np.sign(nrm) == target:
                basis.append(v / np.sqrt(abs(nrm)))
                signs.append(target)
                break
        else:
            raise RuntimeError("build_dframe: no admissible candidate after 100 retries")
    e = []
    for f in basis:
        e.append(f)
        e.extend(qmul(f, IMAG_UNITS[:, None, :]))
    return DFrame(x, np.array(e))


def structure_terms(x: QuadricPoint, frame: DFrame | None, cal: CalibrationConstants, triple: TripleMatrices | None = None):
    """Left and right sides of the structure equation on all pairs of test vectors.

    LHS = d omega_0 + omega_0 ^ omega_0, RHS = c_quad (I_ij i + J_ij j + K_ij k) theta^i ^ theta^j.
    Returns arrays of shape (N, N, 4).
    """
    if frame is None:  # n = 0: no theta term
        vecs = xi_fields(x)
    else:
        vecs = np.concatenate([xi_fields(x), frame.e])
        g, trip = standard_triple(x.p, x.q)
        Jlow = lowered_triple(g, triple or trip)
        th = np.array([frame.theta(v) for v in vecs])
    om = np.array([omega0(x, v, cal) for v in vecs])
    N = len(vecs)
    lhs = np.zeros((N, N, 4))
    rhs = np.zeros((N, N, 4))
    for i, j in itertools.product(range(N), repeat=2):
        lhs[i, j] = d_omega0(x, vecs[i], vecs[j], cal) + wedge(om[i], om[j], om[i], om[j], cal.c_wedge)
        if frame is None:
            continue
        tt = cal.c_wedge * (np.outer(th[i], th[j]) - np.outer(th[j], th[i]))
        rhs[i, j, 1:] = cal.c_quad * np.einsum("akl,kl->a", Jlow, tt)
    return lhs, rhs


def verify_structure_eq(x: QuadricPoint, frame: DFrame | None, cal: CalibrationConstants = GOLDEN_CALIBRATION, tol: float = 1e-9) -> CheckResult:
    lhs, rhs = structure_terms(x, frame, cal)
    res = float(np.max(np.abs(lhs - rhs)))
    return CheckResult.from_residual("structure_equation", res, tol, 1)


def lie_derivative_table(x: QuadricPoint, vecs: np.ndarray, cal: CalibrationConstants):
    """Lie derivatives L_{xi_a} omega_b evaluated on ``vecs`` by two closed forms.

    ``cartan[a, b, v]`` is (i_{xi_a} d omega_b + d i_{xi_a} omega_b)(v) with
    the calibrated exterior derivative; the second term vanishes because
    omega_b(xi_a) is constant.  ``flow[a, b, v]`` differentiates the pullback
    along the flow x -> x exp(t e_a), giving [omega_0(v), e_a].
    """
    xis = xi_fields(x)
    cartan = np.zeros((3, 3, len(vecs)))
    flow = np.zeros((3, 3, len(vecs)))
    for a in range(3):
        for m, v in enumerate(vecs):
            cartan[a, :, m] = d_omega0(x, xis[a], v, cal)[1:]
            om = omega0(x, v, cal)
            e = IMAG_UNITS[a]
            flow[a, :, m] = (qmul(om, e) - qmul(e, om))[1:]
    return cartan, flow


def lie_expected(x: QuadricPoint, vecs: np.ndarray, cal: CalibrationConstants) -> np.ndarray:
    """Table: L_{xi_a} omega_a = 0, L_{xi_a} omega_b = omega_c = -L_{xi_b} omega_a (cyclic)."""
    om = np.array([omega0(x, v, cal)[1:] for v in vecs]).T  # (3, N)
    out = np.zeros((3, 3, len(vecs)))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        out[a, b] = om[c]
        out[b, a] = -om[c]
    return out


def lie_derivative_check(x: QuadricPoint, frame: DFrame | None, cal: CalibrationConstants = GOLDEN_CALIBRATION, tol: float = 1e-8) -> CheckResult:
    vecs = [*xi_fields(x)]
    if frame is not None:
        vecs.extend(frame.e)
    vecs = np.array(vecs)
    cartan, flow = lie_derivative_table(x, vecs, cal)
    expected = lie_expected(x, vecs, cal)
    res = float(np.max(np.abs(cartan - expected)))
    flow_ratio = float(np.max(np.abs(cal.c_wedge * flow - cartan)))
    return CheckResult.from_residual(
        "lie_derivative_table", res, tol, 1, flow_vs_cartan_residual=flow_ratio
    )


def canonical_values_residual(x: QuadricPoint, cal: CalibrationConstants = GOLDEN_CALIBRATION) -> float:
    xis = xi_fields(x)
    res = 0.0
    for a in range(3):
        res = max(res, float(np.max(np.abs(omega0(x, xis[a], cal) - np.eye(4)[a + 1]))))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        s = linear_field_bracket(IMAG_UNITS[a], IMAG_UNITS[b])
        res = max(res, float(np.max(np.abs(qmul(x.x, s) - 2 * xis[c]))))
    return res


def calibrate(points: Sequence[tuple[QuadricPoint, DFrame]], tol: float = 1e-9) -> list[CalibrationConstants]:
    """All sweep assignments consistent with the canonical values, the
    structure equation and the Lie-derivative table at the given points."""
    found = []
    for s, c, k in itertools.product(*SWEEP):
        cal = CalibrationConstants(s, c, k)
        ok = True
        for x, frame in points:
            lhs, rhs = structure_terms(x, frame, cal)
            if (
                canonical_values_residual(x, cal) > tol
                or np.max(np.abs(lhs - rhs)) > tol
                or lie_derivative_check(x, frame, cal, tol).passed is False
            ):
                ok = False
                break
        if ok:
            found.append(cal)
    return found


def d_omega_lemma_residual(x: QuadricPoint, frame: DFrame, cal: CalibrationConstants = GOLDEN_CALIBRATION) -> float:
    """max |d omega_a(X, Y) - g(X, J_a Y)| over frame vectors, with J_a v = -v e_a."""
    res = 0.0
    for a in range(3):
        for X in frame.e:
            for Y in frame.e:
                JY = -qmul(Y, IMAG_UNITS[a])
                lhs = d_omega0(x, X, Y, cal)[a + 1]
                rhs = re_form_arr(X, JY, x.eta)
                res = max(res, abs(float(lhs - rhs)))
    return res


# Null omega_alpha, the extended complex structures and Nijenhuis tensors ------------

def _cyclic(alpha: int) -> tuple[int, int]:
    return (alpha + 1) % 3, (alpha + 2) % 3


def _normalized(y: np.ndarray, eta: np.ndarray) -> np.ndarray:
    return y / np.sqrt(re_form_arr(y, y, eta))


def null_projector(alpha: int, eta: np.ndarray) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """P(y) v: projection onto Null omega_alpha at the normalized point y."""

    def proj(y: np.ndarray, v: np.ndarray) -> np.ndarray:
        nrm = _normalized(y, eta)
        xa = qmul(nrm, IMAG_UNITS[alpha])
        return v - nrm * re_form_arr(nrm, v, eta) - xa * re_form_arr(xa, v, eta)

    return proj


def d_projector(eta: np.ndarray) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    def proj(y: np.ndarray, v: np.ndarray) -> np.ndarray:
        nrm = _normalized(y, eta)
        out = v - nrm * re_form_arr(nrm, v, eta)
        for e in IMAG_UNITS:
            xe = qmul(nrm, e)
            out = out - xe * re_form_arr(xe, v, eta)
        return out

    return proj


def j_on_d(v: np.ndarray, a: int) -> np.ndarray:
    """J_a on D: v -> -v e_a."""
    return -qmul(v, IMAG_UNITS[a])


def j_bar(alpha: int, eta: np.ndarray) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Extended structure on Null omega_alpha: J_alpha on D, xi_beta -> xi_gamma, xi_gamma -> -xi_beta."""
    beta, gamma = _cyclic(alpha)

    def apply(y: np.ndarray, v: np.ndarray) -> np.ndarray:
        nrm = _normalized(y, eta)
        xb = qmul(nrm, IMAG_UNITS[beta])
        xg = qmul(nrm, IMAG_UNITS[gamma])
        cb = re_form_arr(xb, v, eta)
        cg = re_form_arr(xg, v, eta)
        vd = v - xb * cb - xg * cg
        return j_on_d(vd, alpha) + xg * cb - xb * cg

    return apply


VectorField = Callable[[np.ndarray], np.ndarray]


def fd_bracket(X: VectorField, Y: VectorField, y: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """[X, Y](y) = DY(X) - DX(Y) by the fourth-order central stencil."""

    def deriv(F: VectorField, d: np.ndarray) -> np.ndarray:
        return (8.0 * (F(y + h * d) - F(y - h * d)) - (F(y + 2 * h * d) - F(y - 2 * h * d))) / (12.0 * h)

    return deriv(Y, X(y)) - deriv(X, Y(y))


def extend(proj, v0: np.ndarray, base: np.ndarray, M: np.ndarray | None = None) -> VectorField:
    """Vector field y -> P(y)(v0 + M (y - base)); M = None is the constant extension."""
    if M is None:
        return lambda y: proj(y, v0)
    shape = v0.shape
    return lambda y: proj(y, v0 + (M @ (y - base).reshape(-1)).reshape(shape))


def nijenhuis(alpha: int, x: QuadricPoint, X: VectorField, Y: VectorField, h: float = FD_STEP) -> tuple[np.ndarray, float]:
    """N(X, Y) at x and the size of the components leaving Null omega_alpha."""
    eta = x.eta
    J = j_bar(alpha, eta)
    P = null_projector(alpha, eta)
    JX = lambda y: J(y, X(y))
    JY = lambda y: J(y, Y(y))
    y0 = x.x
    b1 = fd_bracket(JX, JY, y0, h) - fd_bracket(X, Y, y0, h)
    b2 = fd_bracket(JX, Y, y0, h) + fd_bracket(X, JY, y0, h)
    leak = max(float(np.max(np.abs(b1 - P(y0, b1)))), float(np.max(np.abs(b2 - P(y0, b2)))))
    return b1 - J(y0, P(y0, b2)), leak


def random_null_vector(x: QuadricPoint, alpha: int, rng: np.random.Generator) -> np.ndarray:
    P = null_projector(alpha, x.eta)
    return P(x.x, rng.normal(size=x.x.shape))


def nijenhuis_check(
    x: QuadricPoint,
    alpha: int,
    samples: int,
    h: float = FD_STEP,
    tol: float = 1e-5,
    seed=0,
    extension_tol: float = 1e-6,
) -> CheckResult:
    """Nijenhuis tensor of the extended structure on Null omega_alpha at x."""
    rng = _rng(seed)
    eta = x.eta
    P = null_projector(alpha, eta)
    J = j_bar(alpha, eta)
    dim = x.x.size
    worst = 0.0
    worst_ext = 0.0
    for _ in range(samples):
        u = random_null_vector(x, alpha, rng)
        w = random_null_vector(x, alpha, rng)
        X, Y = extend(P, u, x.x), extend(P, w, x.x)
        N, leak = nijenhuis(alpha, x, X, Y, h)
        # same vectors, different extensions
        M1, M2 = 0.3 * rng.normal(size=(dim, dim)), 0.3 * rng.normal(size=(dim, dim))
        N2, leak2 = nijenhuis(alpha, x, extend(P, u, x.x, M1), extend(P, w, x.x, M2), h)
        # Y = J X
        N3, leak3 = nijenhuis(alpha, x, X, extend(P, J(x.x, u), x.x), h)
        worst = max(worst, float(np.max(np.abs(N))), float(np.max(np.abs(N3))), leak, leak2, leak3)
        worst_ext = max(worst_ext, float(np.max(np.abs(N - N2))))
    passed = worst <= tol and worst_ext <= extension_tol
    return CheckResult(
        f"nijenhuis_alpha{alpha + 1}",
        passed,
        worst,
        samples,
        {"tol": tol, "extension_residual": worst_ext, "extension_tol": extension_tol, "fd_step": h},
    )


def bracket_decomposition(x: QuadricPoint, v: np.ndarray, w: np.ndarray, h: float = FD_STEP, M=None):
    """Bracket of X = V - sqrt(-1) J_1 V and Y = W - sqrt(-1) J_1 W in D^{1,0}.

    Complex vectors are (real, imaginary) pairs.  Returns the complex
    coefficients of xi_1, xi_2, xi_3, the complex D-part (re, im), the
    normal component, and the complex value of d omega_2(X, Y).
    """
    eta = x.eta
    P = d_projector(eta)
    V = extend(P, v, x.x, None if M is None else M[0])
    W = extend(P, w, x.x, None if M is None else M[1])
    JV = lambda y: j_on_d(V(y), 0)
    JW = lambda y: j_on_d(W(y), 0)
    y0 = x.x
    zr = fd_bracket(V, W, y0, h) - fd_bracket(JV, JW, y0, h)
    zi = -(fd_bracket(V, JW, y0, h) + fd_bracket(JV, W, y0, h))
    xis = xi_fields(x)
    coeff = np.array([[re_form_arr(xi, zr, eta), re_form_arr(xi, zi, eta)] for xi in xis])
    normal = max(abs(float(re_form_arr(x.x, zr, eta))), abs(float(re_form_arr(x.x, zi, eta))))
    ur = zr - np.einsum("a,aij->ij", coeff[:, 0], xis)
    ui = zi - np.einsum("a,aij->ij", coeff[:, 1], xis)
    jv, jw = j_on_d(v, 0), j_on_d(w, 0)
    dw = lambda a, b: d_omega0(x, a, b)[2]
    dw2 = (dw(v, w) - dw(jv, jw), -(dw(v, jw) + dw(jv, w)))
    return coeff, (ur, ui), normal, dw2


def bracket_type_residuals(x: QuadricPoint, v: np.ndarray, w: np.ndarray, h: float = FD_STEP) -> dict[str, float]:
    coeff, (ur, ui), normal, dw2 = bracket_decomposition(x, v, w, h)
    c2 = coeff[1]
    c3 = coeff[2]
    return {
        "xi1_coefficient": float(np.max(np.abs(coeff[0]))),
        "xi3_vs_xi2": float(max(abs(c3[0] - c2[1]), abs(c3[1] + c2[0]))),
        "d_part_type": float(max(np.max(np.abs(j_on_d(ur, 0) + ui)), np.max(np.abs(j_on_d(ui, 0) - ur)))),
        "normal": normal,
        "a_vs_d_omega2": float(max(abs(c2[0] + 2 * dw2[0]), abs(c2[1] + 2 * dw2[1]))),
        "xi2_coefficient_imag": float(abs(c2[1])),
    }


def bracket_type_check(x: QuadricPoint, samples: int, h: float = FD_STEP, tol: float = 1e-5, seed=0) -> CheckResult:
    """Type of [X, Y] for X, Y in D^{1,0}.

    Asserted: no xi_1 component, xi_3 coefficient = -sqrt(-1) times the xi_2
    coefficient, D-part of type (1,0), and a = -2 d omega_2(X, Y).  The
    imaginary part of a is reported but not asserted: a is complex bilinear
    in (X, Y), so it becomes real only after rephasing Y.
    """
    rng = _rng(seed)
    P = d_projector(x.eta)
    worst = 0.0
    imag = 0.0
    for _ in range(samples):
        v = P(x.x, rng.normal(size=x.x.shape))
        w = P(x.x, rng.normal(size=x.x.shape))
        r = bracket_type_residuals(x, v, w, h)
        imag = max(imag, r.pop("xi2_coefficient_imag"))
        worst = max(worst, max(r.values()))
    return CheckResult.from_residual("bracket_type", worst, tol, samples, xi2_coefficient_imag_max=imag)


# Charts and curvature ----------------------------------------------------------

def chart_basis(x: QuadricPoint, frame: DFrame | None) -> np.ndarray:
    """(xi_1, xi_2, xi_3, e_1, ..., e_4n) as an array (4n+3, n+1, 4)."""
    parts = [xi_fields(x)]
    if frame is not None:
        parts.append(frame.e)
    return np.concatenate(parts)


def chart(x0: QuadricPoint, basis: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """u -> (x0 + sum u_m b_m) / sqrt(Re<., .>), defined for |u| <= 0.1."""
    eta = x0.eta

    def phi(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if np.linalg.norm(u) > CHART_RADIUS + 1e-15:
            raise ValueError("chart coordinates outside |u| <= 0.1")
        y = x0.x + np.einsum("m,mij->ij", u, basis)
        rad = re_form_arr(y, y, eta)
        if rad <= 1e-6:
            raise ValueError("out of chart: radicand too small")
        return y / np.sqrt(rad)

    return phi


def chart_metric_fn(x0: QuadricPoint, basis: np.ndarray, perturb: bool = False):
    """Chart metric g_mn(u) = Re<d_m phi, d_n phi> in closed form.

    With y = x0 + B u, Q = Re<y, y> and P_m = Re<y, b_m> the differential of
    the chart is d_m phi = b_m Q^{-1/2} - y P_m Q^{-3/2}, whence
    g_mn = G_mn / Q - P_m P_n / Q^2.

    With ``perturb`` the ambient form is scaled by 1 + 0.1 along the
    coordinate direction c = basis[3] (the first D-frame vector):
    Re<a, b> + 0.1 eps Re<c, a> Re<c, b>, eps = Re<c, c>.
    """
    eta = x0.eta
    G = re_form_arr(basis[:, None], basis[None, :], eta)
    p0 = re_form_arr(x0.x[None], basis, eta)
    q0 = float(re_form_arr(x0.x, x0.x, eta))
    dim = len(basis)
    c = basis[min(3, dim - 1)]
    cb = re_form_arr(c[None], basis, eta)
    c0 = float(re_form_arr(c, x0.x, eta))
    eps = float(re_form_arr(c, c, eta))

    def metric(u: Sequence) -> list:
        Q = q0
        for a in range(dim):
            Q = Q + 2.0 * p0[a] * u[a]
            for b in range(dim):
                if G[a, b] != 0.0:
                    Q = Q + G[a, b] * u[a] * u[b]
        P = []
        for m in range(dim):
            val = p0[m]
            for a in range(dim):
                if G[a, m] != 0.0:
                    val = val + G[a, m] * u[a]
            P.append(val)
        invQ = 1.0 / Q
        invQ2 = invQ * invQ
        rows = [[G[m, n] * invQ - P[m] * P[n] * invQ2 for n in range(dim)] for m in range(dim)]
        if perturb:
            # Re<c, d_m phi> = (Re<c, b_m> - Re<c, y> P_m / Q) / sqrt(Q)
            cy = c0
            for a in range(dim):
                cy = cy + cb[a] * u[a]
            root = jsqrt(Q)
            ell = [(cb[m] - cy * P[m] * invQ) / root for m in range(dim)]
            rows = [[rows[m][n] + 0.1 * eps * ell[m] * ell[n] for n in range(dim)] for m in range(dim)]
        return rows

    return metric


def omega_metric_fn(x0: QuadricPoint, basis: np.ndarray, weights: Sequence[float] = (1.0, 1.0, 1.0)):
    """Pullback of sum_a w_a omega_a^2 through the chart.

    omega_0(d_m phi) = -s_omega Im<y, b_m> / Q, since <y, y> = Q is real.
    """
    eta = x0.eta
    H0 = herm_arr(x0.x[None], basis, eta)[:, 1:]  # (dim, 3)
    H = herm_arr(basis[:, None], basis[None, :], eta)[..., 1:]  # (dim, dim, 3)
    G = re_form_arr(basis[:, None], basis[None, :], eta)
    p0 = re_form_arr(x0.x[None], basis, eta)
    q0 = float(re_form_arr(x0.x, x0.x, eta))
    dim = len(basis)

    def metric(u: Sequence) -> list:
        Q = q0
        for a in range(dim):
            Q = Q + 2.0 * p0[a] * u[a]
            for b in range(dim):
                Q = Q + G[a, b] * u[a] * u[b]
        invQ = 1.0 / Q
        om = []
        for m in range(dim):
            comps = []
            for c in range(3):
                val = H0[m, c]
                for b in range(dim):
                    val = val + H[b, m, c] * u[b]
                comps.append(val * invQ)
            om.append(comps)
        rows = []
        for m in range(dim):
            row = []
            for n in range(dim):
                val = 0.0
                for c in range(3):
                    val = val + weights[c] * om[m][c] * om[n][c]
                row.append(val)
            rows.append(row)
        return rows

    return metric


def numeric_riemann(x0: QuadricPoint, basis: np.ndarray, perturb: bool = False, with_metric: bool = False):
    """Riemann tensor of the chart metric at u = 0 via third-order jets."""
    metric = chart_metric_fn(x0, basis, perturb)
    g, dg, d2g = metric_derivatives(metric, [0.0] * len(basis), order=2)
    R = riemann_from_metric(g, dg, d2g)
    return (R, g) if with_metric else R


def affine_metric_fn(x0: QuadricPoint, basis: np.ndarray):
    """Flat control: the affine chart u -> x0 + B u with the ambient form."""
    G = re_form_arr(basis[:, None], basis[None, :], x0.eta)
    dim = len(basis)
    return lambda u: [[G[m, n] + 0.0 * u[0] for n in range(dim)] for m in range(dim)]


def sp_pullback_residual(A: QMatrix, x: QuadricPoint, vecs: np.ndarray, cal: CalibrationConstants = GOLDEN_CALIBRATION) -> float:
    """max |omega_0 at Ax on Av - omega_0 at x on v| for A in Sp(p+1, q)."""
    Ax = QuadricPoint(qmatvec(A.entries, x.x), x.p, x.q)
    res = 0.0
    for v in vecs:
        res = max(res, float(np.max(np.abs(omega0(Ax, qmatvec(A.entries, v), cal) - omega0(x, v, cal)))))
    return res


def load_points_csv(path: str, p: int, q: int) -> tuple[list[QuadricPoint], list[str]]:
    """Rows of 4(n+1) reals; invalid rows are reported and skipped."""
    import csv

    points, problems = [], []
    width = 4 * (p + q + 1)
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                vals = [float(c) for c in row]
                if len(vals) != width:
                    raise ValueError(f"expected {width} values, got {len(vals)}")
                points.append(validate_point(np.array(vals), p, q))
            except ValueError as exc:
                problems.append(f"row {lineno}: {exc}")
    return points, problems

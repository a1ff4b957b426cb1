"""Registered checks grouped into suites.

Every check is a function of a :class:`Context` returning a CheckResult.  The
registry records the suite, the default tolerance and the smallest n = p + q
for which the check is meaningful; gating produces a skipped record.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import curvature as cv
from . import gauge as gg
from . import heisenberg as hb
from . import model_quadric as mq
from .quaternion import UnitQuaternion, qmul
from .report import CheckResult

SUITES = ("model", "curvature", "heisenberg", "gauge")


@dataclass
class Context:
    p: int
    q: int
    seed: int
    samples: int | None = None
    fd_step: float = mq.FD_STEP
    tol_overrides: dict[str, float] = field(default_factory=dict)
    points: list = field(default_factory=list)
    heis_points: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.p + self.q

    def count(self, default: int) -> int:
        return self.samples if self.samples is not None else default

    def quadric_points(self, default: int) -> list[mq.QuadricPoint]:
        """User points first, then seeded random points up to the sample count."""
        k = self.count(default)
        pts = list(self.points[:k])
        s = 0
        while len(pts) < k:
            pts.append(mq.random_point(self.p, self.q, [self.seed, s]))
            s += 1
        return pts

    def frame(self, x: mq.QuadricPoint, s: int) -> mq.DFrame | None:
        return mq.build_dframe(x, [self.seed, s, 1]) if self.n else None


@dataclass(frozen=True)
class CheckSpec:
    name: str
    suite: str
    fn: Callable[[Context, float], CheckResult]
    tol: float
    min_n: int = 0
    max_n: int | None = None
    reason: str = ""


REGISTRY: dict[str, CheckSpec] = {}


def register(name: str, suite: str, tol: float, min_n: int = 0, max_n: int | None = None, reason: str = ""):
    def deco(fn):
        REGISTRY[name] = CheckSpec(name, suite, fn, tol, min_n, max_n, reason)
        return fn

    return deco


def checks_for(suite: str) -> list[CheckSpec]:
    if suite == "all":
        return sorted(REGISTRY.values(), key=lambda c: c.name)
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    return sorted((c for c in REGISTRY.values() if c.suite == suite), key=lambda c: c.name)


def run_check(spec: CheckSpec, ctx: Context) -> CheckResult:
    n = ctx.n
    if n < spec.min_n or (spec.max_n is not None and n > spec.max_n):
        return CheckResult.skip(spec.name, spec.reason or f"needs {spec.min_n} <= p + q")
    tol = ctx.tol_overrides.get(spec.name, spec.tol)
    res = spec.fn(ctx, tol)
    if res.name != spec.name:
        res = CheckResult(spec.name, res.passed, res.max_residual, res.samples_used, res.details, res.skipped)
    return res


def _worst(results: list[CheckResult], name: str, tol: float, **extra) -> CheckResult:
    res = max((r.max_residual for r in results), default=0.0)
    details: dict = {"tol": tol, **extra}
    for r in results:
        for k, v in r.details.items():
            if isinstance(v, (int, float)) and k not in ("tol",):
                details[k] = max(details.get(k, -math.inf), v)
    return CheckResult(name, all(r.passed for r in results) and res <= tol, res, len(results), details)


# model --------------------------------------------------------------------------

@register("calibration_unique", "model", 1e-9, min_n=1, reason="needs p + q >= 1 (the theta term pins c_quad)")
def _calibration(ctx: Context, tol: float) -> CheckResult:
    pts = ctx.quadric_points(3)[:3]
    found = mq.calibrate([(x, ctx.frame(x, s)) for s, x in enumerate(pts)], tol)
    ok = found == [mq.GOLDEN_CALIBRATION]
    return CheckResult("calibration_unique", ok, float(len(found) != 1), len(pts),
                       {"survivors": len(found), "tol": tol})


@register("structure_equation", "model", 1e-9)
def _structure(ctx: Context, tol: float) -> CheckResult:
    out = [mq.verify_structure_eq(x, ctx.frame(x, s), tol=tol) for s, x in enumerate(ctx.quadric_points(20))]
    return _worst(out, "structure_equation", tol)


@register("canonical_values", "model", 1e-12)
def _canonical(ctx: Context, tol: float) -> CheckResult:
    vals = brk = 0.0
    pts = ctx.quadric_points(20)
    for x in pts:
        vals = max(vals, mq.canonical_values_residual(x))
        xis = mq.xi_fields(x)
        for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            s = mq.linear_field_bracket(np.eye(4)[a + 1], np.eye(4)[b + 1])
            brk = max(brk, float(np.max(np.abs(qmul(x.x, s) - 2 * xis[c]))))
    res = max(vals, brk)
    return CheckResult("canonical_values", res <= tol, res, len(pts),
                       {"omega_values": vals, "xi_brackets": brk, "tol": tol})


@register("lie_derivative_table", "model", 1e-8)
def _lie(ctx: Context, tol: float) -> CheckResult:
    out = [mq.lie_derivative_check(x, ctx.frame(x, s), tol=tol) for s, x in enumerate(ctx.quadric_points(20))]
    return _worst(out, "lie_derivative_table", tol)


@register("d_omega_metric_lemma", "model", 1e-12, min_n=1, reason="needs p + q >= 1 (D is trivial)")
def _lemma(ctx: Context, tol: float) -> CheckResult:
    pts = ctx.quadric_points(10)
    res = max(mq.d_omega_lemma_residual(x, ctx.frame(x, s)) for s, x in enumerate(pts))
    return CheckResult.from_residual("d_omega_metric_lemma", res, tol, len(pts))


@register("nijenhuis", "model", 1e-5)
def _nijenhuis(ctx: Context, tol: float) -> CheckResult:
    out = []
    for s, x in enumerate(ctx.quadric_points(10)):
        for alpha in range(3):
            out.append(mq.nijenhuis_check(x, alpha, 10, h=ctx.fd_step, tol=tol, seed=[ctx.seed, s, alpha]))
    return _worst(out, "nijenhuis", tol, fd_step=ctx.fd_step)


@register("bracket_type", "model", 1e-5, min_n=1, reason="needs p + q >= 1 (D is trivial)")
def _bracket(ctx: Context, tol: float) -> CheckResult:
    out = [mq.bracket_type_check(x, 5, h=ctx.fd_step, tol=tol, seed=[ctx.seed, s, 5])
           for s, x in enumerate(ctx.quadric_points(5))]
    return _worst(out, "bracket_type", tol, fd_step=ctx.fd_step)


@register("sp_invariance", "model", 1e-9)
def _sp_inv(ctx: Context, tol: float) -> CheckResult:
    from .indefinite_linear import Signature, random_sp

    pts = ctx.quadric_points(10)
    res = 0.0
    for s, x in enumerate(pts):
        rng = np.random.default_rng([ctx.seed, s, 9])
        A = random_sp(Signature(ctx.p + 1, ctx.q), rng)
        res = max(res, mq.sp_pullback_residual(A, x, mq.chart_basis(x, ctx.frame(x, s))))
    return CheckResult.from_residual("sp_invariance", res, tol, len(pts))


# curvature ----------------------------------------------------------------------

def _fiber(ctx: Context):
    return cv.standard_triple(ctx.p, ctx.q)


@register("t_of_rhp_zero", "curvature", 1e-12, min_n=2, reason="T is defined for p + q >= 2")
def _t_zero(ctx: Context, tol: float) -> CheckResult:
    g, t = _fiber(ctx)
    res = float(np.max(np.abs(cv.t_tensor(cv.r_hp(g, t), g, t))))
    return CheckResult.from_residual("t_of_rhp_zero", res, tol, 1)


@register("rhp_einstein", "curvature", 1e-12, min_n=1, reason="needs p + q >= 1 (no fiber)")
def _einstein(ctx: Context, tol: float) -> CheckResult:
    g, t = _fiber(ctx)
    R = cv.r_hp(g, t)
    res = float(np.max(np.abs(cv.ricci(R) - 4 * (ctx.n + 2) * g)))
    sym = max(cv.symmetry_residual(R, g), cv.bianchi_residual(R))
    return CheckResult("rhp_einstein", max(res, sym) <= tol, max(res, sym), 1,
                       {"ricci_residual": res, "symmetry_residual": sym, "tol": tol})


@register("t_trace_free", "curvature", 1e-10, min_n=2, reason="T is defined for p + q >= 2")
def _trace_free(ctx: Context, tol: float) -> CheckResult:
    g, t = _fiber(ctx)
    k = ctx.count(20)
    res = 0.0
    for s in range(k):
        R = cv.random_einstein(g, t, np.random.default_rng([ctx.seed, s, 13]))
        res = max(res, float(np.max(np.abs(cv.ricci(cv.t_tensor(R, g, t))))))
    return CheckResult.from_residual("t_trace_free", res, tol, k)


@register("t_invariance", "curvature", 1e-10, min_n=2, reason="T is defined for p + q >= 2")
def _t_inv(ctx: Context, tol: float) -> CheckResult:
    g, t = _fiber(ctx)
    R = cv.random_einstein(g, t, np.random.default_rng([ctx.seed, 17]))
    return cv.t_invariance_check(R, g, t, ctx.count(20), ctx.seed, rotation_tol=tol,
                                 covariance_tol=ctx.tol_overrides.get("t_covariance", 1e-8), frame_trials=10)


@register("schur_n1", "curvature", 1e-12, min_n=1, max_n=1, reason="only for p + q = 1")
def _schur(ctx: Context, tol: float) -> CheckResult:
    g, t = _fiber(ctx)
    res = float(np.max(np.abs(cv.r_hp(g, t) - 4 * cv.constant_curvature(g))))
    return CheckResult.from_residual("schur_n1", res, tol, 1)


@register("t_equals_weyl_n1", "curvature", 1e-10, min_n=1, max_n=1, reason="only for p + q = 1")
def _weyl_n1(ctx: Context, tol: float) -> CheckResult:
    g, t = _fiber(ctx)
    k = ctx.count(20)
    res = 0.0
    for s in range(k):
        R = cv.random_einstein(g, t, np.random.default_rng([ctx.seed, s, 19]))
        res = max(res, float(np.max(np.abs((R - cv.r_hp(g, t)) - cv.weyl4(R, g)))))
    return CheckResult.from_residual("t_equals_weyl_n1", res, tol, k)


@register("model_flatness", "curvature", 1e-5, min_n=1, reason="needs p + q >= 1 (n = 0 uses the Cotton checks)")
def _flat(ctx: Context, tol: float) -> CheckResult:
    return cv.model_flatness_check(ctx.p, ctx.q, ctx.count(5), ctx.seed, tol=tol)


@register("model_flatness_control", "curvature", 1e-2, min_n=1, reason="needs p + q >= 1")
def _control(ctx: Context, tol: float) -> CheckResult:
    """Sensitivity: the perturbed metric must produce max |T| >= tol."""
    r = cv.model_flatness_check(ctx.p, ctx.q, 1, ctx.seed, perturb=True)
    return CheckResult("model_flatness_control", r.max_residual >= tol, r.max_residual, 1,
                       {"min_required": tol})


def _cotton_setup(ctx: Context):
    x = mq.random_point(0, 0, [ctx.seed, 0])
    basis = mq.chart_basis(x, None)
    rng = np.random.default_rng([ctx.seed, 29])
    return x, basis, [rng.uniform(-0.05, 0.05, size=3) for _ in range(ctx.count(3))]


def _sin(v):
    return v.sin() if hasattr(v, "sin") else math.sin(v)


def _cos(v):
    return v.cos() if hasattr(v, "cos") else math.cos(v)


def _conformal(metric_fn):
    """w^4 g with w = 1 + 0.2 sin(u0 + 2 u1) + 0.1 cos(3 u2)."""

    def wrapped(u):
        w = 1.0 + 0.2 * _sin(u[0] + 2.0 * u[1]) + 0.1 * _cos(3.0 * u[2])
        w4 = w * w * w * w
        return [[w4 * e for e in row] for row in metric_fn(u)]

    return wrapped


@register("cotton_round", "curvature", 1e-4, max_n=0, reason="Cotton checks are the n = 0 case")
def _cotton_round(ctx: Context, tol: float) -> CheckResult:
    x, basis, pts = _cotton_setup(ctx)
    metric = mq.omega_metric_fn(x, basis)
    res = max(float(np.max(np.abs(cv.cotton3(metric, u)))) for u in pts)
    return CheckResult.from_residual("cotton_round", res, tol, len(pts))


@register("cotton_conformal_invariance", "curvature", 1e-4, max_n=0, reason="Cotton checks are the n = 0 case")
def _cotton_conf(ctx: Context, tol: float) -> CheckResult:
    x, basis, pts = _cotton_setup(ctx)
    res = size = 0.0
    for weights in ((1.0, 1.0, 1.0), (1.0, 1.5, 0.6)):
        metric = mq.omega_metric_fn(x, basis, weights)
        for u in pts:
            C = cv.cotton3(metric, u)
            C2 = cv.cotton3(_conformal(metric), u)
            res = max(res, float(np.max(np.abs(C2 - C))))
            size = max(size, float(np.max(np.abs(C))))
    return CheckResult("cotton_conformal_invariance", res <= tol, res, len(pts),
                       {"tol": tol, "max_cotton_squashed": size})


# heisenberg ---------------------------------------------------------------------

def _heis_points(ctx: Context, rng: np.random.Generator, k: int) -> list[hb.HeisPoint]:
    pts = list(ctx.heis_points[:k])
    while len(pts) < k:
        pts.append(hb.HeisPoint.random(ctx.p, ctx.q, rng))
    return pts


@register("heis_group_axioms", "heisenberg", 1e-12)
def _heis_axioms(ctx: Context, tol: float) -> CheckResult:
    rng = np.random.default_rng([ctx.seed, 37])
    k = ctx.count(100)
    e = hb.HeisPoint.identity(ctx.p, ctx.q)
    assoc = ident = inv = center = 0.0
    pts = _heis_points(ctx, rng, 3 * k)
    for i in range(k):
        a, b, c = pts[3 * i: 3 * i + 3]
        assoc = max(assoc, hb.heis_mul(hb.heis_mul(a, b), c).distance(hb.heis_mul(a, hb.heis_mul(b, c))))
        ident = max(ident, hb.heis_mul(e, a).distance(a), hb.heis_mul(a, e).distance(a))
        inv = max(inv, hb.heis_mul(a, hb.heis_inv(a)).distance(e))
        com = hb.commutator(a, b)
        center = max(center, float(np.max(np.abs(com.y))) if com.y.size else 0.0)
        expected = -2.0 * hb._im(hb._herm_n(a.y, b.y, a.eta))
        center = max(center, float(np.max(np.abs(com.a - expected))))
    res = max(assoc, ident, inv, center)
    return CheckResult("heis_group_axioms", res <= tol, res, k,
                       {"associativity": assoc, "identity": ident, "inverse": inv, "commutator": center, "tol": tol})


def _dilation(ctx: Context, t: float) -> hb.SimElement:
    base = hb.SimElement.identity(ctx.p, ctx.q)
    return hb.SimElement(base.A, base.g, t, base.trans)


@register("sim_automorphism", "heisenberg", 1e-12)
def _sim_auto(ctx: Context, tol: float) -> CheckResult:
    rng = np.random.default_rng([ctx.seed, 41])
    k = ctx.count(100)
    auto = dil = 0.0
    for _ in range(k):
        s = hb.SimElement.random(ctx.p, ctx.q, rng)
        m1, m2 = hb.HeisPoint.random(ctx.p, ctx.q, rng), hb.HeisPoint.random(ctx.p, ctx.q, rng)
        lhs = hb.sim_action0(s, hb.heis_mul(m1, m2))
        rhs = hb.heis_mul(hb.sim_action0(s, m1), hb.sim_action0(s, m2))
        scale = max(1.0, float(np.max(np.abs(lhs.a))))
        auto = max(auto, lhs.distance(rhs) / scale)
        t1, t2 = float(rng.uniform(0.5, 2)), float(rng.uniform(0.5, 2))
        both = hb.sim_action(_dilation(ctx, t1), hb.sim_action(_dilation(ctx, t2), m1))
        once = hb.sim_action(_dilation(ctx, t1 * t2), m1)
        dil = max(dil, both.distance(once) / max(1.0, float(np.max(np.abs(both.a)))))
    res = max(auto, dil)
    return CheckResult("sim_automorphism", res <= tol, res, k,
                       {"automorphism": auto, "dilation_composition": dil, "tol": tol})


@register("embedding_null", "heisenberg", 1e-12)
def _embed_null(ctx: Context, tol: float) -> CheckResult:
    rng = np.random.default_rng([ctx.seed, 43])
    k = ctx.count(100)
    heis = sig = 0.0
    for m in _heis_points(ctx, rng, k):
        P = hb.embed_heis(m)
        heis = max(heis, hb.null_residual(P.x, ctx.p, ctx.q))
    pts = ctx.quadric_points(k)
    for x in pts:
        sig = max(sig, hb.null_residual(hb.embed_sigma(x).x, ctx.p, ctx.q))
    res = max(heis, sig)
    return CheckResult("embedding_null", res <= tol, res, k, {"embed_heis": heis, "embed_sigma": sig, "tol": tol})


@register("hcan_compatibility", "heisenberg", 1e-12, min_n=1, reason="needs p + q >= 1 (D is trivial)")
def _hcan(ctx: Context, tol: float) -> CheckResult:
    pts = ctx.quadric_points(20)
    res = 0.0
    for s, x in enumerate(pts):
        P = hb.embed_sigma(x)
        for v in ctx.frame(x, s).e:
            res = max(res, hb.hcan_residual(P, hb.lift_tangent(v)))
    return CheckResult.from_residual("hcan_compatibility", res, tol, len(pts))


@register("sim_matrix_realization", "heisenberg", 1e-10)
def _sim_matrix(ctx: Context, tol: float) -> CheckResult:
    from .indefinite_linear import sp_residual

    rng = np.random.default_rng([ctx.seed, 47])
    k = ctx.count(20)
    inf = hb.infinity(ctx.p, ctx.q)
    group = equiv = 0.0
    fixed = True
    for _ in range(k):
        s = hb.SimElement.random(ctx.p, ctx.q, rng)
        M = hb.sim_matrix(s)
        group = max(group, sp_residual(M))
        fixed &= hb.proj_equal(hb.psp_action(M, inf), inf)
        m = hb.HeisPoint.random(ctx.p, ctx.q, rng)
        img = hb.psp_action(M, hb.embed_heis(m))
        equiv = max(equiv, hb.heis_from_proj(img).distance(hb.sim_action_right(s, m)))
    res = max(group, equiv)
    return CheckResult("sim_matrix_realization", fixed and res <= tol, res, k,
                       {"sp_residual": group, "equivariance": equiv, "fixes_infinity": fixed, "tol": tol})


@register("pullback_conformality", "heisenberg", 1e-6)
def _pullback(ctx: Context, tol: float) -> CheckResult:
    return hb.pullback_omega_check(ctx.p, ctx.q, ctx.count(10), ctx.seed,
                                   tol_exact=ctx.tol_overrides.get("pullback_exact", 1e-9), tol_fit=tol)


# gauge --------------------------------------------------------------------------

@register("omega_transform_routes", "gauge", 1e-12)
def _omega_routes(ctx: Context, tol: float) -> CheckResult:
    rng = np.random.default_rng([ctx.seed, 53])
    k = ctx.count(50)
    res = 0.0
    for _ in range(k):
        vals = rng.normal(size=(4, 3))
        s, a = float(np.exp(rng.uniform(-1, 1))), UnitQuaternion.random(rng)
        res = max(res, float(np.max(np.abs(gg.transform_omega(vals, s, a) - gg.transform_omega_matrix(vals, s, a)))))
    return CheckResult.from_residual("omega_transform_routes", res, tol, k)


@register("gauge_consistency", "gauge", 1e-10, min_n=1, reason="needs p + q >= 1 (no fiber)")
def _gauge(ctx: Context, tol: float) -> CheckResult:
    f = gg.random_fiber(ctx.p, ctx.q, np.random.default_rng([ctx.seed, 59]))
    return gg.gauge_consistency_check(f, ctx.count(50), ctx.seed, tol)


@register("j_from_sigma", "gauge", 1e-9, min_n=1, reason="needs p + q >= 1 (no fiber)")
def _j_sigma(ctx: Context, tol: float) -> CheckResult:
    rng = np.random.default_rng([ctx.seed, 61])
    g, t = cv.standard_triple(ctx.p, ctx.q)
    std = float(np.max(np.abs(gg.j_from_sigma(gg.sigma_from_triple(g, t)).as_array() - t.as_array())))
    f = gg.random_fiber(ctx.p, ctx.q, rng)
    moved = float(np.max(np.abs(gg.j_from_sigma(f.sigma).as_array() - f.triple.as_array())))
    rejected = 0
    k = ctx.count(10)
    for _ in range(k):
        S = rng.normal(size=(3, 4 * ctx.n, 4 * ctx.n))
        try:
            gg.j_from_sigma(S - S.transpose(0, 2, 1))
        except gg.NotQuaternionicFiber:
            rejected += 1
    res = max(std, moved)
    return CheckResult("j_from_sigma", res <= tol and rejected == k, res, k,
                       {"standard": std, "random_fiber": moved, "generic_rejected": rejected, "tol": tol})


@register("g_closure", "gauge", 1e-9)
def _g_closure(ctx: Context, tol: float) -> CheckResult:
    return gg.g_closure_check(ctx.p, ctx.q, ctx.count(50), ctx.seed, tol)

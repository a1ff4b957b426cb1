"""Acceptance suite: one test and one printed pass/fail line per criterion.

Run with pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_log import record  # noqa: E402

from qcrlab import cli  # noqa: E402
from qcrlab import curvature as cv  # noqa: E402
from qcrlab import gauge as gg  # noqa: E402
from qcrlab import heisenberg as hb  # noqa: E402
from qcrlab import model_quadric as mq  # noqa: E402
from qcrlab.jets import metric_derivatives  # noqa: E402
from qcrlab.quaternion import IMAG_UNITS, UnitQuaternion, qmul  # noqa: E402
from qcrlab.suites import Context, REGISTRY, run_check  # noqa: E402

SIGNATURES = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
SEED = 2024


def _points(p: int, q: int, k: int) -> list[tuple[mq.QuadricPoint, mq.DFrame]]:
    out = []
    for s in range(k):
        x = mq.random_point(p, q, [SEED, p, q, s])
        out.append((x, mq.build_dframe(x, [SEED, p, q, s, 1])))
    return out


def test_criterion_01_structure_equation() -> None:
    start = time.perf_counter()
    worst = 0.0
    for p, q in SIGNATURES:
        for x, frame in _points(p, q, 20):
            worst = max(worst, mq.verify_structure_eq(x, frame).max_residual)
    survivors = mq.calibrate(_points(1, 0, 2) + _points(0, 1, 2))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and survivors == [mq.GOLDEN_CALIBRATION] and elapsed < 10.0
    record(1, "structure equation", ok,
           f"max residual {worst:.2e} (tol 1e-9), {len(survivors)} calibration survivor(s), {elapsed:.1f} s")
    assert ok


def test_criterion_02_canonical_values() -> None:
    vals = brk = 0.0
    for p, q in SIGNATURES:
        for x, _ in _points(p, q, 5):
            vals = max(vals, mq.canonical_values_residual(x))
            xis = mq.xi_fields(x)
            for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                s = mq.linear_field_bracket(IMAG_UNITS[a], IMAG_UNITS[b])
                brk = max(brk, float(np.max(np.abs(qmul(x.x, s) - 2 * xis[c]))))
    ok = max(vals, brk) <= 1e-12
    record(2, "canonical values", ok, f"omega0(xi) residual {vals:.2e}, [xi,xi]=2xi residual {brk:.2e} (tol 1e-12)")
    assert ok


def test_criterion_03_lie_derivative_table() -> None:
    worst = 0.0
    for p, q in SIGNATURES:
        for x, frame in _points(p, q, 5):
            worst = max(worst, mq.lie_derivative_check(x, frame, tol=1e-8).max_residual)
    ok = worst <= 1e-8
    record(3, "Lie-derivative table", ok, f"nine relations, max residual {worst:.2e} (tol 1e-8)")
    assert ok


def test_criterion_04_integrability() -> None:
    worst = ext = 0.0
    for p, q in ((1, 0), (0, 1)):
        for s, (x, _) in enumerate(_points(p, q, 10)):
            for alpha in range(3):
                r = mq.nijenhuis_check(x, alpha, 10, h=1e-4, tol=1e-5, seed=[SEED, s, alpha])
                worst = max(worst, r.max_residual)
                ext = max(ext, r.details["extension_residual"])
    ok = worst <= 1e-5 and ext <= 1e-6
    record(4, "integrability", ok, f"Nijenhuis max {worst:.2e} (tol 1e-5), extension {ext:.2e} (tol 1e-6)")
    assert ok


def test_criterion_05_constant_curvature() -> None:
    start = time.perf_counter()
    x, frame = _points(1, 0, 1)[0]
    basis = mq.chart_basis(x, frame)
    R, g = mq.numeric_riemann(x, basis, with_metric=True)
    dev = float(np.max(np.abs(R - cv.constant_curvature(g))))
    gf, dgf, d2gf = metric_derivatives(mq.affine_metric_fn(x, basis), [0.0] * len(basis), order=2)
    flat = float(np.max(np.abs(cv.riemann_from_metric(gf, dgf, d2gf))))
    elapsed = time.perf_counter() - start
    ok = R.shape == (7, 7, 7, 7) and dev <= 1e-5 and flat <= 1e-10 and elapsed < 60.0
    record(5, "constant curvature 1", ok,
           f"dim {R.shape[0]} deviation {dev:.2e} (tol 1e-5), flat control {flat:.2e} (tol 1e-10), {elapsed:.1f} s")
    assert ok


def test_criterion_06_algebraic_t_identities() -> None:
    rng = np.random.default_rng(SEED)
    t_zero = ric = trace = 0.0
    for n in (2, 3):
        g, t = cv.standard_triple(n, 0) if n == 2 else cv.standard_triple(2, 1)
        Rhp = cv.r_hp(g, t)
        t_zero = max(t_zero, float(np.max(np.abs(cv.t_tensor(Rhp, g, t)))))
        ric = max(ric, float(np.max(np.abs(cv.ricci(Rhp) - 4 * (n + 2) * g))))
    g2, t2 = cv.standard_triple(1, 1)
    for _ in range(20):
        R = cv.random_einstein(g2, t2, rng)
        trace = max(trace, float(np.max(np.abs(cv.ricci(cv.t_tensor(R, g2, t2))))))
    g1, t1 = cv.standard_triple(1, 0)
    schur = float(np.max(np.abs(cv.r_hp(g1, t1) - 4 * cv.constant_curvature(g1))))
    weyl = 0.0
    for _ in range(20):
        R = cv.random_einstein(g1, t1, rng)
        weyl = max(weyl, float(np.max(np.abs((R - cv.r_hp(g1, t1)) - cv.weyl4(R, g1)))))
    ok = t_zero <= 1e-12 and ric <= 1e-12 and trace <= 1e-10 and schur <= 1e-12 and weyl <= 1e-10
    record(6, "algebraic T identities", ok,
           f"T(R_HP) {t_zero:.2e}, Ricci-4(n+2)g {ric:.2e}, trace T {trace:.2e}, Schur {schur:.2e}, T-W4 {weyl:.2e}")
    assert ok


def test_criterion_07_invariance() -> None:
    g, t = cv.standard_triple(1, 1)
    R = cv.random_einstein(g, t, np.random.default_rng(SEED))
    r = cv.t_invariance_check(R, g, t, trials=20, seed=SEED, frame_trials=10)
    rot, cov = r.details["rotation_residual"], r.details["covariance_residual"]
    ok = rot <= 1e-10 and cov <= 1e-8
    record(7, "invariance of T", ok, f"20 rotations {rot:.2e} (tol 1e-10), 10 frame changes {cov:.2e} (tol 1e-8)")
    assert ok


def test_criterion_08_model_flatness() -> None:
    worst = max(cv.model_flatness_check(p, q, 5, SEED).max_residual for p, q in ((1, 0), (0, 1)))
    control = cv.model_flatness_check(1, 0, 1, SEED, perturb=True).max_residual
    ok = worst <= 1e-5 and control >= 1e-2
    record(8, "model flatness", ok, f"max |T| {worst:.2e} (tol 1e-5), perturbed control {control:.2e} (needs >= 1e-2)")
    assert ok


def test_criterion_09_cotton() -> None:
    ctx = Context(0, 0, SEED)
    rnd = run_check(REGISTRY["cotton_round"], ctx)
    conf = run_check(REGISTRY["cotton_conformal_invariance"], ctx)
    ok = rnd.max_residual <= 1e-4 and conf.max_residual <= 1e-4 and rnd.passed and conf.passed
    record(9, "n = 0 conformal flatness", ok,
           f"Cotton round {rnd.max_residual:.2e}, u^4 invariance {conf.max_residual:.2e} (tol 1e-4); "
           f"squashed |C| {conf.details['max_cotton_squashed']:.2e}")
    assert ok


def test_criterion_10_heisenberg_boundary() -> None:
    parts = {}
    for p, q in ((1, 0), (1, 1)):
        ctx = Context(p, q, SEED, samples=None)
        for name in ("heis_group_axioms", "sim_automorphism", "embedding_null"):
            ctx.samples = 100
            parts[name] = max(parts.get(name, 0.0), run_check(REGISTRY[name], ctx).max_residual)
        ctx.samples = 20
        parts["hcan_compatibility"] = max(parts.get("hcan_compatibility", 0.0),
                                          run_check(REGISTRY["hcan_compatibility"], ctx).max_residual)
        pb = hb.pullback_omega_check(p, q, 10, SEED)
        parts["pullback_fit"] = max(parts.get("pullback_fit", 0.0), pb.details["fit_residual"])
        parts["pullback_exact"] = max(parts.get("pullback_exact", 0.0), pb.details["exact_residual"])
        assert pb.details["min_u2"] > 0
    tols = {"heis_group_axioms": 1e-12, "sim_automorphism": 1e-12, "embedding_null": 1e-12,
            "hcan_compatibility": 1e-12, "pullback_fit": 1e-6, "pullback_exact": 1e-9}
    ok = all(parts[k] <= tols[k] for k in tols)
    record(10, "Heisenberg/boundary", ok, ", ".join(f"{k} {v:.2e}" for k, v in parts.items()))
    assert ok


def test_criterion_11_gauge() -> None:
    worst: dict[str, float] = {}
    for p, q in ((2, 0), (1, 1)):
        f = gg.random_fiber(p, q, np.random.default_rng([SEED, p, q]))
        r = gg.gauge_consistency_check(f, 50, SEED)
        for k in ("scale", "rotation", "alpha_independence", "q_invariance"):
            worst[k] = max(worst.get(k, 0.0), r.details[k])
    closure = max(gg.g_closure_check(p, q, 50, SEED).details["parameter_recovery"] for p, q in ((1, 0), (1, 1)))
    ok = max(worst.values()) <= 1e-10 and closure <= 1e-9
    record(11, "gauge fiber consistency", ok,
           ", ".join(f"{k} {v:.2e}" for k, v in worst.items()) + f", G closure {closure:.2e}")
    assert ok


def test_criterion_12_determinism(tmp_path: Path | None = None) -> None:
    import tempfile

    base = Path(tmp_path or tempfile.mkdtemp())
    a, b = base / "a.json", base / "b.json"
    args = ["verify", "--suite", "all", "--p", "1", "--q", "0", "--seed", "42"]
    code_a = cli.main(args + ["--out", str(a)])
    code_b = cli.main(args + ["--out", str(b)])
    same = a.read_bytes() == b.read_bytes()
    ok = same and code_a == code_b == 0
    record(12, "determinism", ok, f"byte-identical JSON: {same}, exit codes {code_a}/{code_b}")
    assert ok


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failures += 1
    sys.exit(1 if failures else 0)

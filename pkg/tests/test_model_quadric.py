from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcrlab import model_quadric as mq
from qcrlab.indefinite_linear import Signature, random_sp
from qcrlab.quaternion import IMAG_UNITS, qmul

sigs = st.sampled_from([(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)])
seeds = st.integers(0, 2**32 - 1)

# x = (1, 0) on the positive-definite quadric; v = (0, 1) lies in D
X0 = mq.QuadricPoint(np.array([[1.0, 0, 0, 0], [0, 0, 0, 0]]), 1, 0)
V0 = np.array([[0.0, 0, 0, 0], [1, 0, 0, 0]])


def _pt(p: int, q: int, seed: int) -> tuple[mq.QuadricPoint, mq.DFrame]:
    x = mq.random_point(p, q, seed)
    return x, mq.build_dframe(x, [seed, 1])


def test_point_validation() -> None:
    with pytest.raises(ValueError):
        mq.QuadricPoint(np.array([[2.0, 0, 0, 0], [0, 0, 0, 0]]), 1, 0)
    with pytest.raises(ValueError):
        mq.QuadricPoint(np.zeros((3, 4)), 1, 0)


def test_omega0_frozen_values() -> None:
    xis = mq.xi_fields(X0)
    for a in range(3):
        assert np.array_equal(mq.omega0(X0, xis[a]), np.eye(4)[a + 1])
    assert np.array_equal(mq.omega0(X0, V0), np.zeros(4))
    assert np.array_equal(mq.d_omega0(X0, V0, qmul(V0, IMAG_UNITS[0])), [0.0, 1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        mq.omega0(X0, X0.x)


def test_linear_field_bracket_closed_form() -> None:
    assert np.array_equal(mq.linear_field_bracket(IMAG_UNITS[0], IMAG_UNITS[1]), 2 * IMAG_UNITS[2])


def test_golden_calibration_is_unique() -> None:
    pts = [_pt(1, 0, 1), _pt(0, 1, 2)]
    assert mq.calibrate(pts) == [mq.GOLDEN_CALIBRATION]


def test_n0_structure_equation_does_not_pin_c_wedge() -> None:
    x = mq.random_point(0, 0, 4)
    for c in (0.5, 1.0):
        cal = mq.CalibrationConstants(-1, c, -1.0)
        assert mq.verify_structure_eq(x, None, cal).passed
    assert not mq.verify_structure_eq(x, None, mq.CalibrationConstants(1, 0.5, -1.0)).passed


@settings(max_examples=15, deadline=None)
@given(sigs, seeds)
def test_frame_is_orthonormal_and_in_d(sig: tuple[int, int], seed: int) -> None:
    x, frame = _pt(*sig, seed)
    assert np.max(np.abs(frame.gram() - np.diag(frame.signs))) <= mq.GRAM_TOL
    for v in frame.e:
        assert np.max(np.abs(mq.omega0(x, v))) <= 1e-10


@settings(max_examples=15, deadline=None)
@given(sigs, seeds)
def test_structure_lie_and_lemma(sig: tuple[int, int], seed: int) -> None:
    x, frame = _pt(*sig, seed)
    assert mq.verify_structure_eq(x, frame).max_residual <= 1e-9
    assert mq.canonical_values_residual(x) <= 1e-12
    lie = mq.lie_derivative_check(x, frame)
    assert lie.passed and lie.details["flow_vs_cartan_residual"] <= 1e-10
    assert mq.d_omega_lemma_residual(x, frame) <= 1e-10


def test_build_dframe_needs_positive_dimension() -> None:
    with pytest.raises(ValueError):
        mq.build_dframe(mq.random_point(0, 0, 1), 0)


def test_random_point_deterministic() -> None:
    assert np.array_equal(mq.random_point(1, 1, [3, 4]).x, mq.random_point(1, 1, [3, 4]).x)


@pytest.mark.parametrize("sig", [(1, 0), (0, 1), (1, 1)])
def test_nijenhuis_vanishes(sig: tuple[int, int]) -> None:
    x = mq.random_point(*sig, 11)
    for alpha in range(3):
        r = mq.nijenhuis_check(x, alpha, 2, seed=alpha)
        assert r.passed, r.details


@pytest.mark.parametrize("sig", [(1, 0), (1, 1)])
def test_bracket_type(sig: tuple[int, int]) -> None:
    r = mq.bracket_type_check(mq.random_point(*sig, 12), 2, seed=3)
    assert r.passed and "xi2_coefficient_imag_max" in r.details


def test_fd_bracket_of_linear_fields() -> None:
    x = mq.random_point(1, 0, 5)
    Vi = lambda y: qmul(y, IMAG_UNITS[0])
    Vj = lambda y: qmul(y, IMAG_UNITS[1])
    assert np.max(np.abs(mq.fd_bracket(Vi, Vj, x.x) - 2 * qmul(x.x, IMAG_UNITS[2]))) <= 1e-9


@settings(max_examples=10, deadline=None)
@given(sigs, seeds)
def test_sp_invariance(sig: tuple[int, int], seed: int) -> None:
    x, frame = _pt(*sig, seed)
    A = random_sp(Signature(sig[0] + 1, sig[1]), np.random.default_rng(seed), scale=0.3)
    vecs = mq.chart_basis(x, frame)
    assert mq.sp_pullback_residual(A, x, vecs) <= 1e-9


def test_chart_domain() -> None:
    x, frame = _pt(1, 0, 6)
    basis = mq.chart_basis(x, frame)
    phi = mq.chart(x, basis)
    assert np.array_equal(phi(np.zeros(len(basis))), x.x)
    with pytest.raises(ValueError):
        phi(np.full(len(basis), 0.1))


def test_chart_metric_at_origin_is_frame_gram() -> None:
    x, frame = _pt(1, 1, 7)
    basis = mq.chart_basis(x, frame)
    g = np.array(mq.chart_metric_fn(x, basis)([0.0] * len(basis)))
    assert np.max(np.abs(g - mq.re_form_arr(basis[:, None], basis[None, :], x.eta))) <= 1e-12


def test_load_points_csv(tmp_path: Path) -> None:
    path = tmp_path / "pts.csv"
    good = ",".join(str(v) for v in mq.random_point(1, 0, 8).x.reshape(-1))
    path.write_text(f"# header\n{good}\n1,2,3\n{','.join(['1'] + ['0'] * 6 + ['1'])}\nfoo,1,2,3,4,5,6,7\n")
    pts, problems = mq.load_points_csv(str(path), 1, 0)
    assert len(pts) == 1
    assert [p.split(":")[0] for p in problems] == ["row 3", "row 4", "row 5"]

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcrlab import gauge as gg
from qcrlab.curvature import standard_triple
from qcrlab.indefinite_linear import QMatrix, Signature, qidentity
from qcrlab.quaternion import QI, QJ, Quaternion, UnitQuaternion

fibers = st.sampled_from([(1, 0), (0, 1), (2, 0), (1, 1)])
seeds = st.integers(0, 2**32 - 1)
R45 = UnitQuaternion(math.cos(math.pi / 8), math.sin(math.pi / 8), 0, 0)


def test_transform_omega_frozen() -> None:
    # conjugating by a rotation of 90 degrees about i sends j to k
    a = UnitQuaternion(1 / math.sqrt(2), 1 / math.sqrt(2), 0, 0)
    assert np.allclose(gg.transform_omega([0.0, 1.0, 0.0], 2.0, a), [0.0, 0.0, 2.0], atol=1e-15)
    assert np.allclose(gg.transform_omega([1.0, 0.0, 0.0], 1.0, QJ), [-1.0, 0.0, 0.0], atol=1e-15)
    with pytest.raises(ValueError):
        gg.transform_omega([1.0, 0.0, 0.0], 0.0, QI)


@given(st.floats(0.1, 10.0), seeds)
def test_omega_routes_agree(s: float, seed: int) -> None:
    rng = np.random.default_rng(seed)
    a = UnitQuaternion.random(rng)
    vals = rng.normal(size=(5, 3))
    assert np.max(np.abs(gg.transform_omega(vals, s, a) - gg.transform_omega_matrix(vals, s, a))) <= 1e-12 * s


def test_standard_fiber_sigma_and_metric() -> None:
    g, t = standard_triple(1, 1)
    sigma = gg.sigma_from_triple(g, t)
    for a in range(3):
        assert np.array_equal(gg.metric_from_sigma(sigma, t, a), g)
    f = gg.FiberData(g, sigma, t)
    assert f.dim == 8


def test_fiber_validation() -> None:
    g, t = standard_triple(1, 0)
    sigma = gg.sigma_from_triple(g, t)
    with pytest.raises(ValueError):
        gg.FiberData(g, sigma + np.eye(4), t)
    with pytest.raises(ValueError):
        gg.FiberData(g, np.zeros_like(sigma), t)


@settings(max_examples=20, deadline=None)
@given(fibers, seeds)
def test_j_from_sigma_recovers_triple(sig: tuple[int, int], seed: int) -> None:
    f = gg.random_fiber(*sig, np.random.default_rng(seed))
    J = gg.j_from_sigma(f.sigma)
    assert np.max(np.abs(J.as_array() - f.triple.as_array())) <= 1e-9


def test_j_from_sigma_rejects_generic_forms() -> None:
    rng = np.random.default_rng(0)
    B = rng.normal(size=(3, 8, 8))
    with pytest.raises(gg.NotQuaternionicFiber, match="not a quaternionic-CR fiber"):
        gg.j_from_sigma(B - np.transpose(B, (0, 2, 1)))


@settings(max_examples=15, deadline=None)
@given(fibers, seeds)
def test_gauge_consistency(sig: tuple[int, int], seed: int) -> None:
    f = gg.random_fiber(*sig, np.random.default_rng(seed))
    r = gg.gauge_consistency_check(f, 3, seed)
    assert r.passed, r.details


def test_gauge_pinned_values() -> None:
    g, t = standard_triple(1, 0)
    f = gg.FiberData(g, gg.sigma_from_triple(g, t), t)
    r = gg.gauge_residuals(f, 4.0, R45)
    assert max(r.values()) <= 1e-12
    assert gg.gauge_consistency_check(f, 1, 0, s=4.0, a=R45).passed


def test_build_g_matrix_identity() -> None:
    G = gg.build_g_matrix(1.0, Quaternion(1.0), QMatrix.identity(Signature(1, 1)), None)
    assert np.array_equal(G.matrix(), np.eye(11))
    assert (G.p, G.q) == (1, 1)


def test_build_g_matrix_validation() -> None:
    with pytest.raises(ValueError):
        gg.build_g_matrix(0.0, QI, None, None)
    with pytest.raises(ValueError):
        gg.build_g_matrix(1.0, QI, 2 * qidentity(1), None, 1, 0)
    with pytest.raises(ValueError):
        gg.build_g_matrix(1.0, QI, qidentity(2), None, 1, 0)


def test_g_matrix_blocks_frozen() -> None:
    G = gg.build_g_matrix(2.0, QI, None, None)
    assert np.allclose(G.matrix(), 4.0 * np.diag([1.0, -1.0, -1.0]), atol=1e-15)
    with pytest.raises(ValueError):
        gg.recover_parameters(-G.matrix(), 0, 0)


@settings(max_examples=20, deadline=None)
@given(st.sampled_from([(0, 0), (1, 0), (1, 1), (0, 2)]), seeds)
def test_recover_and_compose(sig: tuple[int, int], seed: int) -> None:
    rng = np.random.default_rng(seed)
    g1, g2 = gg.random_g(*sig, rng), gg.random_g(*sig, rng)
    assert gg.parameter_distance(gg.recover_parameters(g1.matrix(), *sig), g1) <= 1e-10
    M = g1.matrix() @ g2.matrix()
    comp = g1.compose(g2)
    assert np.max(np.abs(comp.matrix() - M)) <= 1e-10
    assert not M[:3, 3:].any()


def test_recover_rejects_nonzero_upper_right() -> None:
    G = gg.random_g(1, 0, np.random.default_rng(2)).matrix()
    G[0, 5] = 1.0
    with pytest.raises(ValueError):
        gg.recover_parameters(G, 1, 0)


def test_sim_image_shape_and_translation() -> None:
    g = gg.random_g(1, 1, np.random.default_rng(3))
    P = gg.sim_image(g)
    assert not P[1:, 0].any()
    _, X, corner = gg.sim_translation(g)
    assert np.array_equal(X, P[1:, 1:]) and np.allclose(corner, [g.lam[0], *(-g.lam[1:])])


@pytest.mark.parametrize("sig", [(0, 0), (1, 0), (1, 1)])
def test_g_closure_check(sig: tuple[int, int]) -> None:
    r = gg.g_closure_check(*sig, 5, 1)
    assert r.passed and r.details["min_det"] > 0, r.details

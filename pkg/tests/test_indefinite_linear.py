from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qcrlab.indefinite_linear import (
    QMatrix,
    QVector,
    Signature,
    derealify,
    herm,
    is_sp,
    qidentity,
    qmatmul,
    random_sp,
    re_form,
    realify,
    sp_algebra_project,
    sp_algebra_residual,
    sp_exp,
    sp_residual,
)
from qcrlab.quaternion import QK, Quaternion

signatures = st.sampled_from([Signature(1, 0), Signature(2, 0), Signature(1, 1), Signature(0, 2), Signature(2, 1)])
seeds = st.integers(0, 2**32 - 1)


def _vec(sig: Signature, rng: np.random.Generator) -> QVector:
    return QVector(rng.normal(size=(sig.m, 4)), sig)


def test_signature_validation() -> None:
    with pytest.raises(ValueError):
        Signature(0, 0)
    with pytest.raises(ValueError):
        Signature(-1, 2)
    assert list(Signature(2, 1).eta) == [1.0, 1.0, -1.0]


def test_herm_examples() -> None:
    sig = Signature(2, 0)
    x = QVector([[1, 0, 0, 0], [0, 0, 0, 0]], sig)
    y = QVector([[0, 0, 1, 0], [0, 0, 0, 0]], sig)
    assert herm(x, y).is_close(Quaternion(0, 0, 1, 0))
    iso = QVector([[1, 0, 0, 0], [1, 0, 0, 0]], Signature(1, 1))
    assert herm(iso, iso).is_close(Quaternion())


def test_herm_dimension_mismatch() -> None:
    with pytest.raises(ValueError):
        herm(QVector(np.zeros((2, 4)), Signature(2, 0)), QVector(np.zeros((2, 4)), Signature(1, 1)))


@given(signatures, seeds)
def test_herm_sesquilinear_and_hermitian(sig: Signature, seed: int) -> None:
    rng = np.random.default_rng(seed)
    x, y = _vec(sig, rng), _vec(sig, rng)
    lam = Quaternion(*rng.normal(size=4))
    h = herm(x, y)
    assert herm(x.scale(lam), y).is_close(lam.conj() * h, 1e-11)
    assert herm(x, y.scale(lam)).is_close(h * lam, 1e-11)
    assert herm(x, y).is_close(herm(y, x).conj(), 1e-12)
    assert herm(x.scale(QK), y).is_close(QK.conj() * h, 1e-12)


@given(signatures, seeds)
def test_re_form_is_real_part_of_herm(sig: Signature, seed: int) -> None:
    rng = np.random.default_rng(seed)
    x, y = _vec(sig, rng), _vec(sig, rng)
    assert re_form(x, y) == pytest.approx(herm(x, y).real, abs=1e-13)


def test_re_form_gram_of_standard_basis() -> None:
    sig = Signature(1, 2)
    basis = np.eye(4 * sig.m).reshape(-1, sig.m, 4)
    gram = np.array([[re_form(QVector(a, sig), QVector(b, sig)) for b in basis] for a in basis])
    assert np.array_equal(gram, np.diag(sig.real_eta))


def test_is_sp_examples() -> None:
    sig = Signature(2, 1)
    assert is_sp(QMatrix.identity(sig))
    diag_j = np.zeros((3, 3, 4))
    diag_j[np.arange(3), np.arange(3), 2] = 1.0
    assert is_sp(QMatrix(diag_j, sig))
    t = 0.8
    boost = np.zeros((2, 2, 4))
    boost[:, :, 0] = [[math.cosh(t), math.sinh(t)], [math.sinh(t), math.cosh(t)]]
    assert is_sp(QMatrix(boost, Signature(1, 1)))
    assert not is_sp(QMatrix(2 * qidentity(2), Signature(1, 1)))


def test_sp_algebra_project_examples() -> None:
    sig = Signature(1, 0)
    zero = QMatrix(np.zeros((1, 1, 4)), sig)
    assert np.array_equal(sp_algebra_project(zero).entries, zero.entries)
    i = QMatrix(np.array([[[0, 1, 0, 0]]], dtype=float), sig)
    assert np.array_equal(sp_algebra_project(i).entries, i.entries)


@given(signatures, seeds)
def test_projection_lands_in_algebra(sig: Signature, seed: int) -> None:
    X = QMatrix(np.random.default_rng(seed).normal(size=(sig.m, sig.m, 4)), sig)
    Y = sp_algebra_project(X)
    assert sp_algebra_residual(Y) <= 1e-14
    assert np.allclose(sp_algebra_project(Y).entries, Y.entries, atol=1e-15)


def test_sp_exp_examples() -> None:
    sig = Signature(1, 0)
    assert np.allclose(sp_exp(QMatrix(np.zeros((1, 1, 4)), sig)).entries, qidentity(1), atol=1e-15)
    t = 0.7
    E = sp_exp(QMatrix(np.array([[[0, t, 0, 0]]]), sig)).entries[0, 0]
    assert np.allclose(E, [math.cos(t), math.sin(t), 0, 0], atol=1e-15)


def test_sp_exp_rejects_non_algebra() -> None:
    with pytest.raises(ValueError):
        sp_exp(QMatrix(qidentity(2), Signature(1, 1)))


@settings(max_examples=30)
@given(signatures, seeds)
def test_sp_exp_matches_scipy(sig: Signature, seed: int) -> None:
    X = sp_algebra_project(QMatrix(np.random.default_rng(seed).uniform(-1, 1, size=(sig.m, sig.m, 4)), sig))
    ours = realify(sp_exp(X).entries)
    ref = scipy.linalg.expm(realify(X.entries))
    assert np.max(np.abs(ours - ref)) <= 1e-12 * max(1.0, np.max(np.abs(ref)))


@settings(max_examples=30)
@given(signatures, seeds)
def test_random_sp_membership_and_closure(sig: Signature, seed: int) -> None:
    rng = np.random.default_rng(seed)
    M, N = random_sp(sig, rng), random_sp(sig, rng)
    assert sp_residual(M) <= 1e-12
    assert is_sp(M @ N, 1e-9)


@given(signatures, seeds)
def test_realify_is_multiplicative(sig: Signature, seed: int) -> None:
    rng = np.random.default_rng(seed)
    A, B = rng.normal(size=(sig.m, sig.m, 4)), rng.normal(size=(sig.m, sig.m, 4))
    assert np.allclose(realify(qmatmul(A, B)), realify(A) @ realify(B), atol=1e-12)
    assert np.array_equal(derealify(realify(A)), A)


def test_matrix_vector_products() -> None:
    sig = Signature(1, 1)
    rng = np.random.default_rng(3)
    M = random_sp(sig, rng)
    x, y = _vec(sig, rng), _vec(sig, rng)
    assert herm(M @ x, M @ y).is_close(herm(x, y), 1e-12)
    assert np.allclose((M @ x).coords, (realify(M.entries) @ x.coords.reshape(-1)).reshape(-1, 4))
    with pytest.raises(ValueError):
        QMatrix(np.zeros((3, 3, 4)), sig)

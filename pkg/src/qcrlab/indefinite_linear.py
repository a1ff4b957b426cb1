"""Quaternionic vectors and matrices with an indefinite Hermitian form.

A vector of H^m is stored as a real array of shape ``(m, 4)`` and a matrix
as ``(m, m, 4)``.  Matrices act on column vectors from the left; scalars act
from the right.  The form of signature (r, s) is

    <x, y> = sum_{i < r} conj(x_i) y_i - sum_{i >= r} conj(x_i) y_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quaternion import Quaternion, left_matrix, qconj, qmul

SERIES_TERMS = 18


@dataclass(frozen=True)
class Signature:
    r: int
    s: int

    def __post_init__(self) -> None:
        if self.r < 0 or self.s < 0 or self.r + self.s < 1:
            raise ValueError(f"invalid signature ({self.r}, {self.s})")

    @property
    def m(self) -> int:
        return self.r + self.s

    @property
    def eta(self) -> np.ndarray:
        return np.concatenate([np.ones(self.r), -np.ones(self.s)])

    @property
    def real_eta(self) -> np.ndarray:
        """Diagonal of the real Gram matrix of Re<,> on the realification."""
        return np.repeat(self.eta, 4)


@dataclass(frozen=True)
class QVector:
    coords: np.ndarray
    sig: Signature

    def __post_init__(self) -> None:
        arr = np.array(self.coords, dtype=float).reshape(-1, 4)
        if arr.shape[0] != self.sig.m:
            raise ValueError("vector length does not match signature")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    def scale(self, q) -> "QVector":
        """Right scalar multiplication x -> x q."""
        qa = q.as_array() if isinstance(q, Quaternion) else np.asarray(q, dtype=float)
        return QVector(qmul(self.coords, qa), self.sig)

    def __add__(self, other: "QVector") -> "QVector":
        _match(self.sig, other.sig)
        return QVector(self.coords + other.coords, self.sig)

    def __sub__(self, other: "QVector") -> "QVector":
        _match(self.sig, other.sig)
        return QVector(self.coords - other.coords, self.sig)


@dataclass(frozen=True)
class QMatrix:
    entries: np.ndarray
    sig: Signature = field(compare=False)

    def __post_init__(self) -> None:
        arr = np.array(self.entries, dtype=float)
        m = self.sig.m
        if arr.shape != (m, m, 4):
            raise ValueError(f"matrix shape {arr.shape} does not match signature")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    def __matmul__(self, other):
        if isinstance(other, QMatrix):
            return QMatrix(qmatmul(self.entries, other.entries), self.sig)
        if isinstance(other, QVector):
            return QVector(qmatvec(self.entries, other.coords), self.sig)
        return qmatvec(self.entries, np.asarray(other, dtype=float))

    def star(self) -> "QMatrix":
        return QMatrix(qstar(self.entries), self.sig)

    def realify(self) -> np.ndarray:
        return realify(self.entries)

    @classmethod
    def identity(cls, sig: Signature) -> "QMatrix":
        return cls(qidentity(sig.m), sig)


def _match(a: Signature, b: Signature) -> None:
    if a != b:
        raise ValueError(f"signature mismatch {a} vs {b}")


def herm_arr(x: np.ndarray, y: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """<x, y> for arrays of shape (..., m, 4); returns (..., 4)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-2] != eta.shape[0] or y.shape[-2] != eta.shape[0]:
        raise ValueError("dimension mismatch")
    return np.einsum("i,...ia->...a", eta, qmul(qconj(x), y))


def re_form_arr(x: np.ndarray, y: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Re<x, y> for arrays of shape (..., m, 4)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-2] != eta.shape[0] or y.shape[-2] != eta.shape[0]:
        raise ValueError("dimension mismatch")
    return np.einsum("i,...ia,...ia->...", eta, x, y)


def herm(x: QVector, y: QVector) -> Quaternion:
    _match(x.sig, y.sig)
    return Quaternion.from_array(herm_arr(x.coords, y.coords, x.sig.eta))


def re_form(x: QVector, y: QVector) -> float:
    _match(x.sig, y.sig)
    return float(re_form_arr(x.coords, y.coords, x.sig.eta))


def qmatvec(M: np.ndarray, v: np.ndarray) -> np.ndarray:
    """(M v)_i = sum_j M_ij v_j with quaternion entries."""
    return qmul(M, v[np.newaxis, :, :]).sum(axis=1)


def qmatmul(M: np.ndarray, N: np.ndarray) -> np.ndarray:
    return qmul(M[:, :, np.newaxis, :], N[np.newaxis, :, :, :]).sum(axis=1)


def qstar(M: np.ndarray) -> np.ndarray:
    return qconj(np.swapaxes(M, 0, 1))


def qidentity(m: int) -> np.ndarray:
    out = np.zeros((m, m, 4))
    out[np.arange(m), np.arange(m), 0] = 1.0
    return out


def realify(M: np.ndarray) -> np.ndarray:
    """4m x 4m real matrix of the left action of M on flattened (m, 4) vectors."""
    m = M.shape[0]
    out = np.zeros((4 * m, 4 * m))
    for i in range(m):
        for j in range(m):
            out[4 * i:4 * i + 4, 4 * j:4 * j + 4] = left_matrix(M[i, j])
    return out


def derealify(R: np.ndarray) -> np.ndarray:
    """Inverse of :func:`realify` (reads the first column of each block)."""
    m = R.shape[0] // 4
    out = np.zeros((m, m, 4))
    for i in range(m):
        for j in range(m):
            out[i, j] = R[4 * i:4 * i + 4, 4 * j]
    return out


def sp_residual(M: QMatrix) -> float:
    eta = M.sig.eta
    lhs = qmatmul(qstar(M.entries), eta[:, None, None] * M.entries)
    target = qidentity(M.sig.m) * eta[:, None, None]
    return float(np.max(np.abs(lhs - target)))


def is_sp(M: QMatrix, tol: float = 1e-10) -> bool:
    """True iff M* eta M = eta entrywise within tol."""
    return sp_residual(M) <= tol


def sp_algebra_residual(X: QMatrix) -> float:
    eta = X.sig.eta
    lhs = qmatmul(qstar(X.entries), eta[:, None, None] * qidentity(X.sig.m))
    lhs = lhs + eta[:, None, None] * X.entries
    return float(np.max(np.abs(lhs)))


def sp_algebra_project(X: QMatrix) -> QMatrix:
    """Y = (X - eta X* eta) / 2, the closest element of sp(r, s)."""
    eta = X.sig.eta
    etaXeta = eta[:, None, None] * qstar(X.entries) * eta[None, :, None]
    return QMatrix(0.5 * (X.entries - etaXeta), X.sig)


def _expm_real(A: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(A, ord=1)
    squarings = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    B = A / (2.0 ** squarings)
    result = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, SERIES_TERMS):
        term = term @ B / k
        result = result + term
    for _ in range(squarings):
        result = result @ result
    return result


def sp_exp(X: QMatrix, tol: float = 1e-12) -> QMatrix:
    """Exponential of an sp(r, s) element by scaling and squaring."""
    if sp_algebra_residual(X) > tol:
        raise ValueError("sp_exp: argument is not in the Lie algebra sp(r, s)")
    return QMatrix(derealify(_expm_real(realify(X.entries))), X.sig)


def random_sp(sig: Signature, rng: np.random.Generator, scale: float = 0.5) -> QMatrix:
    """exp of a projected random algebra element with entries in [-scale, scale]."""
    raw = QMatrix(rng.uniform(-1.0, 1.0, size=(sig.m, sig.m, 4)) * scale, sig)
    return sp_exp(sp_algebra_project(raw))

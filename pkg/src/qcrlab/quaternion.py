"""Quaternion arithmetic, the unit group Sp(1) and its adjoint map to SO(3).

Coefficients are always stored in the order (w, x, y, z), meaning
``w + x*i + y*j + z*k``.  The array helpers (``qmul``, ``qconj`` ...) work on
numpy arrays whose last axis has length 4 and broadcast over leading axes;
the :class:`Quaternion` value type wraps a single quaternion for readable
scalar code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIT_TOL = 1e-9

# Structure constants: (p q)_c = sum_ab p_a q_b MULT[a, b, c].
MULT = np.zeros((4, 4, 4))
_TABLE = {
    (0, 0): (0, 1), (0, 1): (1, 1), (0, 2): (2, 1), (0, 3): (3, 1),
    (1, 0): (1, 1), (1, 1): (0, -1), (1, 2): (3, 1), (1, 3): (2, -1),
    (2, 0): (2, 1), (2, 1): (3, -1), (2, 2): (0, -1), (2, 3): (1, 1),
    (3, 0): (3, 1), (3, 1): (2, 1), (3, 2): (1, -1), (3, 3): (0, -1),
}
for (_a, _b), (_c, _s) in _TABLE.items():
    MULT[_a, _b, _c] = _s
CONJ_SIGNS = np.array([1.0, -1.0, -1.0, -1.0])


def qmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product of quaternion arrays (broadcast over leading axes)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pw, px, py, pz = np.moveaxis(p, -1, 0)
    qw, qx, qy, qz = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + px * qw + py * qz - pz * qy,
            pw * qy - px * qz + py * qw + pz * qx,
            pw * qz + px * qy - py * qx + pz * qw,
        ],
        axis=-1,
    )


def qconj(q: np.ndarray) -> np.ndarray:
    return np.asarray(q, dtype=float) * CONJ_SIGNS


def qnorm2(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.sum(q * q, axis=-1)


def left_matrix(q) -> np.ndarray:
    """4x4 real matrix of v -> q v."""
    q = np.asarray(_coeffs(q), dtype=float)
    return np.einsum("a,abc->cb", q, MULT)


def right_matrix(q) -> np.ndarray:
    """4x4 real matrix of v -> v q."""
    q = np.asarray(_coeffs(q), dtype=float)
    return np.einsum("b,abc->ca", q, MULT)


def _coeffs(q) -> np.ndarray:
    if isinstance(q, Quaternion):
        return q.as_array()
    return np.asarray(q, dtype=float)


@dataclass(frozen=True)
class Quaternion:
    w: float = 0.0
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    @classmethod
    def from_array(cls, arr) -> "Quaternion":
        a = np.asarray(arr, dtype=float).reshape(4)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    def as_array(self) -> np.ndarray:
        return np.array([self.w, self.x, self.y, self.z])

    def __add__(self, other: "Quaternion") -> "Quaternion":
        other = _lift(other)
        return Quaternion(self.w + other.w, self.x + other.x, self.y + other.y, self.z + other.z)

    __radd__ = __add__

    def __sub__(self, other: "Quaternion") -> "Quaternion":
        other = _lift(other)
        return Quaternion(self.w - other.w, self.x - other.x, self.y - other.y, self.z - other.z)

    def __rsub__(self, other) -> "Quaternion":
        return _lift(other) - self

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other) -> "Quaternion":
        if isinstance(other, (int, float)):
            return Quaternion(self.w * other, self.x * other, self.y * other, self.z * other)
        return mul(self, other)

    def __rmul__(self, other) -> "Quaternion":
        if isinstance(other, (int, float)):
            return self * other
        return mul(_lift(other), self)

    def __truediv__(self, other: float) -> "Quaternion":
        return self * (1.0 / other)

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm2(self) -> float:
        return self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def inverse(self) -> "Quaternion":
        n2 = self.norm2()
        if n2 == 0.0:
            raise ZeroDivisionError("zero quaternion has no inverse")
        return self.conj() / n2

    @property
    def real(self) -> float:
        return self.w

    @property
    def imag(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def is_close(self, other: "Quaternion", tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.as_array() - _lift(other).as_array())) <= tol)


def _lift(value) -> Quaternion:
    if isinstance(value, Quaternion):
        return value
    if isinstance(value, (int, float)):
        return Quaternion(float(value))
    return Quaternion.from_array(value)


class UnitQuaternion(Quaternion):
    """Element of Sp(1).

    Inputs within ``UNIT_TOL`` of the unit sphere are renormalized; anything
    further away is rejected so drift cannot accumulate silently.
    """

    def __init__(self, w: float = 1.0, x: float = 0.0, y: float = 0.0, z: float = 0.0):
        n = math.sqrt(w * w + x * x + y * y + z * z)
        if abs(n - 1.0) > UNIT_TOL:
            raise ValueError(f"not a unit quaternion (norm {n!r})")
        super().__init__(w / n, x / n, y / n, z / n)

    @classmethod
    def from_quaternion(cls, q) -> "UnitQuaternion":
        q = _lift(q)
        return cls(q.w, q.x, q.y, q.z)

    @classmethod
    def normalized(cls, q) -> "UnitQuaternion":
        q = _lift(q)
        n = q.norm()
        if n == 0.0:
            raise ValueError("cannot normalize the zero quaternion")
        return cls(q.w / n, q.x / n, q.y / n, q.z / n)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "UnitQuaternion":
        return cls.normalized(rng.normal(size=4))


ONE = Quaternion(1.0)
QI = Quaternion(0.0, 1.0)
QJ = Quaternion(0.0, 0.0, 1.0)
QK = Quaternion(0.0, 0.0, 0.0, 1.0)
IMAG_UNITS = np.eye(4)[1:]


def mul(q: Quaternion, r: Quaternion) -> Quaternion:
    return Quaternion.from_array(qmul(_lift(q).as_array(), _lift(r).as_array()))


def ad_matrix(a) -> np.ndarray:
    """Matrix A with a e_b conj(a) = sum_c A[b, c] e_c for (e_1, e_2, e_3) = (i, j, k).

    Row b holds the image of the b-th imaginary unit.  With this row
    convention ``ad_matrix(a * b) == ad_matrix(b) @ ad_matrix(a)``.
    """
    arr = _coeffs(a)
    n = float(np.linalg.norm(arr))
    if abs(n - 1.0) > UNIT_TOL:
        raise ValueError(f"ad_matrix needs a unit quaternion (norm {n!r})")
    arr = arr / n
    images = qmul(qmul(arr, IMAG_UNITS), qconj(arr))
    return images[:, 1:]


def decompose_polar(lam) -> tuple[float, UnitQuaternion]:
    """Split a nonzero quaternion as lam = u * a with u = |lam| > 0 and |a| = 1."""
    lam = _lift(lam)
    u = lam.norm()
    if u == 0.0:
        raise ValueError("zero quaternion has no polar decomposition")
    return u, UnitQuaternion.normalized(lam)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    return ad_matrix(UnitQuaternion.random(rng))


def unit_from_rotation(A: np.ndarray) -> UnitQuaternion:
    """One of the two unit quaternions a with ad_matrix(a) = A."""
    A = np.asarray(A, dtype=float)
    # ad_matrix(a) is the transpose of the usual rotation matrix of a.
    R = A.T
    tr = np.trace(R)
    cands = [
        np.array([1 + tr, R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]),
        np.array([R[2, 1] - R[1, 2], 1 + R[0, 0] - R[1, 1] - R[2, 2], R[0, 1] + R[1, 0], R[0, 2] + R[2, 0]]),
        np.array([R[0, 2] - R[2, 0], R[0, 1] + R[1, 0], 1 - R[0, 0] + R[1, 1] - R[2, 2], R[1, 2] + R[2, 1]]),
        np.array([R[1, 0] - R[0, 1], R[0, 2] + R[2, 0], R[1, 2] + R[2, 1], 1 - R[0, 0] - R[1, 1] + R[2, 2]]),
    ]
    best = max(cands, key=lambda c: float(np.linalg.norm(c)))
    return UnitQuaternion.normalized(best)

"""Numerical verification toolkit for pseudo-conformal quaternionic CR geometry."""

__version__ = "0.1.0"

from .quaternion import Quaternion, UnitQuaternion, ad_matrix, decompose_polar, mul  # noqa: E402
from .indefinite_linear import QMatrix, QVector, Signature, herm, is_sp, re_form, sp_exp  # noqa: E402
from .report import CheckResult  # noqa: E402

__all__ = [
    "__version__",
    "CheckResult",
    "QMatrix",
    "QVector",
    "Quaternion",
    "Signature",
    "UnitQuaternion",
    "ad_matrix",
    "decompose_polar",
    "herm",
    "is_sp",
    "mul",
    "re_form",
    "sp_exp",
]

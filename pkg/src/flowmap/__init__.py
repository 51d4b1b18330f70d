"""Failure-probability flow maps for recursively simulated fault-tolerant
circuits: exact derivation for the classical repetition code, Monte-Carlo
fault injection for the [[7,1,3]] code, and the fixed-point / pseudothreshold
/ threshold-set analysis built on top."""

from .poly import FailureVector, FlowMap, Monomial, Polynomial
from .io import content_hash, load_flowmap, parse_flowmap, save_flowmap, serialize_flowmap
from .settings import NamedSetting, axis, diagonal, steane

__all__ = [
    "FailureVector",
    "FlowMap",
    "Monomial",
    "Polynomial",
    "content_hash",
    "load_flowmap",
    "parse_flowmap",
    "save_flowmap",
    "serialize_flowmap",
    "NamedSetting",
    "axis",
    "diagonal",
    "steane",
    "__version__",
]

__version__ = "0.1.0"

"""Pauli-frame Monte-Carlo fault injection for level-1 [[7,1,3]] replacements."""

from .circuits import ExRec, KINDS, build_ec, build_exrec
from .frame import propagate_pauli, run_overlay, run_trials, sweep_single_faults
from .mc import (
    McEstimate,
    McTripCurve,
    McTripPoint,
    PseudothresholdFit,
    fit_from_rows,
    fit_pseudothreshold,
    mc_failure,
    mc_trip,
)

__all__ = [
    "ExRec",
    "KINDS",
    "build_ec",
    "build_exrec",
    "propagate_pauli",
    "run_overlay",
    "run_trials",
    "sweep_single_faults",
    "McEstimate",
    "McTripCurve",
    "McTripPoint",
    "PseudothresholdFit",
    "fit_from_rows",
    "fit_pseudothreshold",
    "mc_failure",
    "mc_trip",
]

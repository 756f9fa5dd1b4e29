"""Trapped modes of a string on a Winkler foundation with a mass-spring inclusion.

Closed-form mode quantities and adiabatic invariants, a finite-difference
simulator for fixed and moving inclusions, and measurement tools.
"""

from .invariants import (
    TRACE_COLUMNS,
    EnergyBreakdown,
    InvariantTrace,
    action_fixed,
    action_moving,
    closed_form_energies,
    closed_form_trace,
    false_invariants,
    lab_quasi_energy,
    wkb_amplitude,
)
from .modes import ComplexAmplitude, TrappedMode, c0_fixed, c0_moving, initial_amplitude, mode_profile, solve_frequency
from .params import (
    AdmissibilityError,
    Constant,
    LinearRamp,
    LocalizationError,
    ParameterSchedule,
    ParamSet,
    SmoothstepRamp,
    Tabulated,
    check_localization,
)
from .pulse import PulseSpec, pulse_spectrum
from .simulate import Grid, RunResult, SimulationFailure, run_scenario

__all__ = [
    "TRACE_COLUMNS", "EnergyBreakdown", "InvariantTrace", "action_fixed", "action_moving",
    "closed_form_energies", "closed_form_trace", "false_invariants", "lab_quasi_energy", "wkb_amplitude",
    "ComplexAmplitude", "TrappedMode", "c0_fixed", "c0_moving", "initial_amplitude", "mode_profile",
    "solve_frequency", "AdmissibilityError", "Constant", "LinearRamp", "LocalizationError",
    "ParameterSchedule", "ParamSet", "SmoothstepRamp", "Tabulated", "check_localization", "PulseSpec",
    "pulse_spectrum", "Grid", "RunResult", "SimulationFailure", "run_scenario",
]

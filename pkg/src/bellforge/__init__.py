"""Heralded linear-optical generation of dual-rail Bell states."""

from .fock import FockState, bell_target, enumerate_basis, parse_occupation
from .interferometer import Circuit, Gate, ParameterLayout, compose, identity_circuit
from .permanent import permanent_naive, permanent_ryser, transition_amplitude
from .schemes import SchemeSpec, five_mode_scheme, load_scheme, six_mode_scheme, two_stage_scheme
from .simulate import evolve, herald, run_two_stage, simulate_scheme

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "FockState",
    "Gate",
    "ParameterLayout",
    "SchemeSpec",
    "bell_target",
    "compose",
    "enumerate_basis",
    "evolve",
    "five_mode_scheme",
    "herald",
    "identity_circuit",
    "load_scheme",
    "parse_occupation",
    "permanent_naive",
    "permanent_ryser",
    "run_two_stage",
    "simulate_scheme",
    "six_mode_scheme",
    "transition_amplitude",
    "two_stage_scheme",
]

"""The three heralded Bell-state generator topologies.

Mode order is always ``(q1a, q1b, q2a, q2b, aux...)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .fock import BELL_KINDS, FockState, Occupation, _BELL_ALIASES, bell_target, parse_occupation

SCHEME_TYPES = ("six-mode", "five-mode", "two-stage")

# Default per-scheme cost hyperparameters (probability exponent, sparsity weight).
DEFAULT_MU = {"six-mode": 1e-3, "five-mode": 1e-4, "two-stage": 1e-2}
DEFAULT_EPS = 1e-5


@dataclass(frozen=True)
class SecondStage:
    """Second mesh of a two-stage scheme.

    The logical modes of stage one feed the same logical modes of stage
    two; a fresh photon enters ``fresh_mode`` and ``herald_pattern`` is
    detected on the stage-two aux modes.
    """

    fresh_mode: int = 4
    herald_pattern: Occupation = (1,)


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    n_modes: int
    input_occupation: Occupation
    logical_modes: tuple[int, int, int, int]
    aux_modes: tuple[int, ...]
    herald_pattern: Occupation
    target_kind: str = "phi+"
    second_stage: SecondStage | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_occupation", tuple(int(n) for n in self.input_occupation))
        object.__setattr__(self, "herald_pattern", tuple(int(n) for n in self.herald_pattern))
        key = _BELL_ALIASES.get(self.target_kind, _BELL_ALIASES.get(self.target_kind.lower()))
        if key is None:
            raise ValueError(f"unknown target {self.target_kind!r}; choose from {BELL_KINDS}")
        object.__setattr__(self, "target_kind", key)
        self.validate()

    @property
    def two_stage(self) -> bool:
        return self.second_stage is not None

    @property
    def n_meshes(self) -> int:
        return 2 if self.two_stage else 1

    @property
    def target(self) -> FockState:
        return bell_target(self.target_kind)

    @property
    def total_photons(self) -> int:
        return sum(self.input_occupation) + (1 if self.two_stage else 0)

    @property
    def herald_patterns(self) -> tuple[Occupation, ...]:
        if self.second_stage is None:
            return (self.herald_pattern,)
        return (self.herald_pattern, self.second_stage.herald_pattern)

    def validate(self) -> None:
        n = self.n_modes
        if len(self.input_occupation) != n:
            raise ValueError(f"input occupation {self.input_occupation} does not have {n} modes")
        if any(c < 0 for c in self.input_occupation):
            raise ValueError("negative photon count in input occupation")
        if len(self.logical_modes) != 4:
            raise ValueError("exactly four logical modes are required")
        if sorted(self.logical_modes + self.aux_modes) != list(range(n)):
            raise ValueError(
                f"logical {self.logical_modes} and aux {self.aux_modes} do not partition 0..{n - 1}"
            )
        if len(self.herald_pattern) != len(self.aux_modes):
            raise ValueError(f"herald pattern {self.herald_pattern} vs aux modes {self.aux_modes}")
        photons_in = sum(self.input_occupation)
        if self.second_stage is None:
            if photons_in != 4:
                raise ValueError(f"single-stage schemes take 4 photons, got {photons_in}")
            if sum(self.herald_pattern) != photons_in - 2:
                raise ValueError("herald pattern must leave exactly two photons in logical modes")
        else:
            st = self.second_stage
            if photons_in != 3:
                raise ValueError(f"two-stage schemes take 3 photons in stage one, got {photons_in}")
            if st.fresh_mode not in self.aux_modes:
                raise ValueError("fresh photon must enter an aux mode")
            if len(st.herald_pattern) != len(self.aux_modes):
                raise ValueError("stage-two herald pattern does not match aux modes")
            if sum(self.herald_pattern) + sum(st.herald_pattern) != photons_in + 1 - 2:
                raise ValueError("herald patterns must leave exactly two photons in logical modes")

    def to_config(self) -> dict:
        return {
            "type": self.name,
            "input_occupation": list(self.input_occupation),
            "target": self.target_kind,
        }


def six_mode_scheme(input_occupation: Sequence[int] = (1, 1, 1, 1, 0, 0), target: str = "phi+") -> SchemeSpec:
    """Six modes, four photons, single photons heralded on both aux modes."""
    return SchemeSpec("six-mode", 6, tuple(input_occupation), (0, 1, 2, 3), (4, 5), (1, 1), target)


def five_mode_scheme(input_occupation: Sequence[int] = (1, 1, 1, 1, 0), target: str = "phi+") -> SchemeSpec:
    """Five modes, four photons, two photons heralded on the single aux mode."""
    return SchemeSpec("five-mode", 5, tuple(input_occupation), (0, 1, 2, 3), (4,), (2,), target)


def two_stage_scheme(input_occupation: Sequence[int] = (1, 1, 1, 0, 0), target: str = "phi+") -> SchemeSpec:
    """Two five-mode meshes: three photons, herald one on a1, add one on a2, herald one."""
    return SchemeSpec(
        "two-stage", 5, tuple(input_occupation), (0, 1, 2, 3), (4,), (1,), target, SecondStage(4, (1,))
    )


_BUILDERS = {"six-mode": six_mode_scheme, "five-mode": five_mode_scheme, "two-stage": two_stage_scheme}


def scheme_from_config(config: dict) -> SchemeSpec:
    kind = config.get("type")
    if kind not in _BUILDERS:
        raise ValueError(f"scheme type must be one of {SCHEME_TYPES}, got {kind!r}")
    spec = _BUILDERS[kind]()
    if config.get("input_occupation") is not None:
        occ = config["input_occupation"]
        if isinstance(occ, str):
            occ = parse_occupation(occ)
        spec = replace(spec, input_occupation=tuple(occ))
    if config.get("target") is not None:
        spec = replace(spec, target_kind=config["target"])
    return spec


def load_scheme(ref: str | Path) -> SchemeSpec:
    """Accept a scheme name (``five-mode``) or a path to a JSON config."""
    ref_s = str(ref)
    if ref_s in _BUILDERS:
        return _BUILDERS[ref_s]()
    path = Path(ref_s)
    if not path.exists():
        raise ValueError(f"{ref_s!r} is neither a scheme name {SCHEME_TYPES} nor a file")
    try:
        config = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(config, dict):
        raise ValueError(f"{path}: scheme config must be a JSON object")
    return scheme_from_config(config)

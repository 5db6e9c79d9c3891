"""Reference output-state expansions, encoded as exact coefficient tables.

Each expansion is a sum ``c_j |chi_j>_s |d_j>_a`` over logical states
``chi_j`` and aux patterns ``d_j``.  The tables are kept verbatim,
including the stage-two residual whose weights do not add up to one, so
that consistency checks can be run against them and against simulation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .fock import FockState, bell_target, enumerate_basis, parse_occupation

S3 = math.sqrt(3)
ALPHA = math.pi / 3
E = cmath.exp(1j * ALPHA)
EC = cmath.exp(-1j * ALPHA)

# logical states, occupation -> amplitude (modes q1a q1b q2a q2b)
CHI6 = {
    "00": {"1102": S3 / 4, "1120": -S3 / 4, "1003": -S3 / 4, "0130": -S3 / 4,
           "1021": 0.25, "0112": 0.25, "0031": 0.25, "0013": -0.25},
    "01": {"1101": S3 / (2 * math.sqrt(2)), "0111": 1 / (2 * math.sqrt(2)), "1020": -0.5, "0030": -0.5},
    "10": {"1110": S3 / (2 * math.sqrt(2)), "1011": -1 / (2 * math.sqrt(2)), "0102": 0.5, "0003": -0.5},
    "02": {"1100": S3 / 4, "0011": S3 / 4, "0110": 0.25, "1001": 0.75},
    "20": {"1001": 0.25, "0110": 0.75, "1100": -S3 / 4, "0011": -S3 / 4},
    "12": {"0100": 0.5, "0001": S3 / 2},
    "21": {"1000": -0.5, "0010": S3 / 2},
    "03": {"0010": 0.5, "1000": S3 / 2},
    "30": {"0001": 0.5, "0100": -S3 / 2},
}

_R31 = 1 / math.sqrt(31)
CHI52 = {
    "0": {"3100": math.sqrt(2) * _R31, "0130": -math.sqrt(2) * _R31,
          "3001": 2 * math.sqrt(2) * _R31, "0031": -2 * math.sqrt(2) * _R31,
          "0301": _R31, "0400": -_R31, "1210": -S3 * _R31, "1111": math.sqrt(6) * _R31},
    "1": {"3000": 1 / math.sqrt(7), "0030": -1 / math.sqrt(7),
          "0300": 1 / math.sqrt(14), "0201": -S3 / math.sqrt(14), "1011": -math.sqrt(3 / 7)},
    "3": {"0100": 1 / math.sqrt(2), "0001": 1 / math.sqrt(2)},
}

_H35 = 0.5 * math.sqrt(3 / 5)
CHI_PRIME = {
    "0": {"1110": _H35, "0111": _H35, "0210": _H35, "0021": 1 / math.sqrt(10),
          "1020": -1 / math.sqrt(10), "1011": math.sqrt(3 / 10), "0030": -1 / (2 * math.sqrt(5))},
    "1": {"0101": _H35, "1100": _H35, "0200": _H35, "0020": _H35,
          "1010": 1 / (2 * math.sqrt(5)), "0011": -1 / (2 * math.sqrt(5)), "1001": math.sqrt(3 / 10)},
    "2": {"0001": 1 / math.sqrt(2), "1000": -1 / math.sqrt(2)},
}

CHI511 = {
    "0": {k: v / 4 for k, v in {
        "2100": 1, "0120": 1, "0300": -1j, "0003": -1j,
        "2001": -E, "1002": E, "0201": -E, "0021": E, "0012": -E,
        "1020": EC, "2010": -EC, "1200": -EC, "0210": EC, "0102": EC,
        "3000": -1j * EC, "0030": 1j * EC}.items()},
    "2": {"0100": E / 2, "1000": E / 2, "0010": -E / 2, "0001": EC / 2},
}


@dataclass(frozen=True)
class Term:
    coefficient: complex
    logical: dict | str  # amplitude table, or a single occupation string
    aux: str


@dataclass(frozen=True)
class Expansion:
    """``sum_j c_j |chi_j>|d_j>`` on logical modes 0-3 and the given aux modes."""

    name: str
    n_aux: int
    terms: tuple[Term, ...]

    def weights(self) -> list[float]:
        return [abs(t.coefficient) ** 2 for t in self.terms]

    def weight_sum(self) -> float:
        return math.fsum(self.weights())

    def logical_norms(self) -> list[float]:
        out = []
        for t in self.terms:
            table = {t.logical: 1.0} if isinstance(t.logical, str) else t.logical
            out.append(math.fsum(abs(a) ** 2 for a in table.values()))
        return out

    def state(self) -> FockState:
        """The expansion as one (not renormalized) state on 4 + n_aux modes."""
        amps: dict[tuple, complex] = {}
        for t in self.terms:
            table = {t.logical: 1.0} if isinstance(t.logical, str) else t.logical
            for occ, a in table.items():
                full = parse_occupation(occ) + parse_occupation(t.aux)
                amps[full] = amps.get(full, 0.0) + t.coefficient * a
        n = sum(next(iter(amps)))
        basis = enumerate_basis(n, 4 + self.n_aux)
        vec = np.array([amps.get(b, 0.0) for b in basis], dtype=complex)
        return FockState(n, vec, tuple(range(4 + self.n_aux)))


def _bell_table(kind: str = "phi+") -> dict:
    t = bell_target(kind)
    return {"".join(map(str, occ)): a for occ, a in t.terms()}


R6 = Expansion(
    "R6", 2,
    (
        Term(2 * math.sqrt(2) / 5, CHI6["00"], "00"),
        Term(2 / 5, CHI6["10"], "10"),
        Term(2 / 5, CHI6["01"], "01"),
        Term(math.sqrt(2) / 5, CHI6["20"], "20"),
        Term(math.sqrt(2) / 5, CHI6["02"], "02"),
        Term(1 / 5, CHI6["12"], "12"),
        Term(1 / 5, CHI6["21"], "21"),
        Term(1 / 5, CHI6["30"], "30"),
        Term(1 / 5, CHI6["03"], "03"),
        Term(1 / (5 * math.sqrt(2)), "0000", "13"),
        Term(-1 / (5 * math.sqrt(2)), "0000", "31"),
    ),
)

R52 = Expansion(
    "R52", 1,
    (
        Term(math.sqrt(31 / 3) / 4, CHI52["0"], "0"),
        Term(math.sqrt(14 / 3) / 4, CHI52["1"], "1"),
        Term(math.sqrt(2 / 3) / 4, CHI52["3"], "3"),
        Term(1 / (4 * S3), "0000", "4"),
    ),
)

PSI_PRIME = Expansion(
    "psi_prime", 1,
    (
        Term(math.sqrt(5) / 3, CHI_PRIME["0"], "0"),
        Term(math.sqrt(5 / 2) / 3, CHI_PRIME["1"], "1"),
        Term(1 / 3, CHI_PRIME["2"], "2"),
        Term(1 / (3 * math.sqrt(2)), "0000", "3"),
    ),
)

R511 = Expansion(
    "R511", 1,
    (
        Term(2 * math.sqrt(2 / 11), CHI511["0"], "0"),
        Term(2 * math.sqrt(2 / 11), CHI511["2"], "2"),
        Term(-1j * E / math.sqrt(11), "0000", "3"),
    ),
)

# full output states: heralded Bell term plus weighted residual
PSI6 = Expansion(
    "psi6", 2,
    (Term(math.sqrt(2 / 27), _bell_table(), "11"),)
    + tuple(Term(5 / math.sqrt(27) * t.coefficient, t.logical, t.aux) for t in R6.terms),
)

PSI52 = Expansion(
    "psi52", 1,
    (Term(1 / 3, _bell_table(), "2"),)
    + tuple(Term(2 * math.sqrt(2) / 3 * t.coefficient, t.logical, t.aux) for t in R52.terms),
)

# output-state weights: heralded Bell term and residual
STAGE2_SPLIT = (4 / 15, 11 / 15)
SIX_MODE_SPLIT = (2 / 27, 25 / 27)
FIVE_MODE_SPLIT = (1 / 9, 8 / 9)

NORMALIZED = {"R6": R6, "R52": R52, "psi_prime": PSI_PRIME}
R511_WEIGHT_SUM = 17 / 11


def aux_distribution(expansion: Expansion) -> dict[str, float]:
    """Probability of each aux pattern implied by the expansion."""
    out: dict[str, float] = {}
    for t, w in zip(expansion.terms, expansion.logical_norms()):
        out[t.aux] = out.get(t.aux, 0.0) + abs(t.coefficient) ** 2 * w
    return out


__all__ = [
    "ALPHA",
    "Expansion",
    "FIVE_MODE_SPLIT",
    "NORMALIZED",
    "PSI52",
    "PSI6",
    "PSI_PRIME",
    "R52",
    "R511",
    "R511_WEIGHT_SUM",
    "R6",
    "SIX_MODE_SPLIT",
    "STAGE2_SPLIT",
    "Term",
    "aux_distribution",
]

"""Result rows shared by the evolution loop and the CLI driver."""

from __future__ import annotations

import dataclasses

__all__ = ["ResultRecord", "CSV_COLUMNS", "validate_record"]

# frozen output schema; regression tooling diffs these files byte for byte
CSV_COLUMNS = [
    "h",
    "D",
    "q",
    "m_x",
    "m_z",
    "energy_per_site",
    "lambda2_over_lambda1",
    "xi",
    "discarded_weight_max",
    "steps_used",
    "wall_time_seconds",
]


@dataclasses.dataclass
class ResultRecord:
    """One converged point (or one trajectory step) of an evolution run."""

    h: float
    D: int
    q: int
    m_x: float
    m_z: float
    energy_per_site: float
    lambda2_over_lambda1: float
    xi: float
    discarded_weight_max: float
    steps_used: int
    wall_time_seconds: float = 0.0

    def as_row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]


def validate_record(rec: ResultRecord) -> None:
    """Physical sanity of an emitted record; raises instead of writing junk."""
    slack = 1.0 + 1e-9
    if not -slack <= rec.m_x <= slack:
        raise ValueError(f"m_x = {rec.m_x!r} outside [-1, 1]")
    if not -slack <= rec.m_z <= slack:
        raise ValueError(f"m_z = {rec.m_z!r} outside [-1, 1]")
    if rec.xi < 0.0:
        raise ValueError(f"xi = {rec.xi!r} negative")
    if not 0.0 <= rec.discarded_weight_max <= 1.0:
        raise ValueError(f"discarded_weight_max = {rec.discarded_weight_max!r} outside [0, 1]")

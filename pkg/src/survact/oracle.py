"""Label sources for queried pool records.

Three oracles share one contract (callable: OracleQuery -> OracleAnswer):
ground truth from a synthetic generator's latent times, a stage-conditional
survival table turned into an exponential residual-time model, and a human
behind the HTTP gateway in ``service``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InvariantViolationError, MissingFeatureError, OracleError, ValidationError


@dataclass(frozen=True)
class OracleQuery:
    query_id: int
    candidate_id: object
    original_features: dict
    censoring_time: float
    round: int = 0
    c_index: float | None = None

    def __post_init__(self):
        if self.censoring_time < 0:
            raise ValidationError("censoring_time must be >= 0")


@dataclass(frozen=True)
class OracleAnswer:
    query_id: int
    event_time: float


class GroundTruthOracle:
    """Answers from the synthetic generator's latent (pre-censoring) times."""

    def __init__(self, latent_times: Mapping):
        self.latent_times = dict(latent_times)

    def __call__(self, query: OracleQuery) -> OracleAnswer:
        if query.candidate_id not in self.latent_times:
            raise OracleError(f"no latent time for candidate {query.candidate_id!r}")
        latent = float(self.latent_times[query.candidate_id])
        if latent < query.censoring_time:
            raise InvariantViolationError(
                f"latent time {latent} precedes censoring time {query.censoring_time} "
                f"for candidate {query.candidate_id!r}"
            )
        return OracleAnswer(query.query_id, latent)


@dataclass(frozen=True)
class TableEntry:
    percent: float
    ci_low: float
    ci_high: float

    def __post_init__(self):
        if not 0.0 <= self.percent <= 100.0:
            raise ValidationError(f"survival percent {self.percent} outside [0, 100]")
        if not self.ci_low <= self.percent <= self.ci_high:
            raise ValidationError("confidence interval must bracket the point estimate")


STAGES = ("Local", "Regional", "Distant", "Unstaged")
YEAR_ROWS = (0, 1, 3)


@dataclass(frozen=True)
class ConditionalSurvivalTable:
    """Percent surviving the next 5 years, by stage and years since diagnosis."""

    rows: dict  # (stage, years) -> TableEntry

    def __post_init__(self):
        for (stage, years), entry in self.rows.items():
            if stage not in STAGES or years not in YEAR_ROWS:
                raise ValidationError(f"unknown table key ({stage!r}, {years!r})")
            if not isinstance(entry, TableEntry):
                raise ValidationError("table rows must be TableEntry values")

    def lookup(self, stage: str, years_elapsed: float) -> TableEntry:
        """Nearest row at or below the elapsed time (floored to 0/1/3 years)."""
        if stage not in STAGES:
            raise ValidationError(f"unknown stage {stage!r}")
        eligible = [y for y in YEAR_ROWS if y <= years_elapsed]
        years = max(eligible) if eligible else 0
        return self.rows[(stage, years)]


# 5-year conditional relative survival for prostate cancer (SEER statistics),
# with 95% confidence intervals.
PROSTATE_TABLE = ConditionalSurvivalTable(
    rows={
        ("Local", 0): TableEntry(100.0, 100.0, 100.0),
        ("Local", 1): TableEntry(100.0, 100.0, 100.0),
        ("Local", 3): TableEntry(100.0, 100.0, 100.0),
        ("Regional", 0): TableEntry(100.0, 100.0, 100.0),
        ("Regional", 1): TableEntry(99.3, 98.9, 99.5),
        ("Regional", 3): TableEntry(98.9, 98.4, 99.2),
        ("Distant", 0): TableEntry(29.2, 28.4, 29.9),
        ("Distant", 1): TableEntry(34.1, 33.1, 35.1),
        ("Distant", 3): TableEntry(45.6, 43.9, 47.2),
        ("Unstaged", 0): TableEntry(76.6, 75.6, 77.5),
        ("Unstaged", 1): TableEntry(81.1, 79.8, 82.1),
        ("Unstaged", 3): TableEntry(82.8, 81.4, 84.1),
    }
)

FIVE_YEARS_MONTHS = 60.0
_P_CLAMP = 1e-4


def residual_rate(entry: TableEntry) -> float:
    """Exponential hazard per month matching the 5-year conditional survival."""
    p = min(max(entry.percent / 100.0, _P_CLAMP), 1.0 - _P_CLAMP)
    return -math.log(p) / FIVE_YEARS_MONTHS


class TableOracle:
    """Samples a residual time-to-event from a conditional survival table.

    The stage feature may be a string or a numeric code (0..3 in STAGES
    order); elapsed years come from a second feature. Deterministic given
    (query, table, seed).
    """

    def __init__(
        self,
        table: ConditionalSurvivalTable = PROSTATE_TABLE,
        seed: int = 0,
        stage_feature: str = "stage",
        years_feature: str = "years_since_diagnosis",
    ):
        self.table = table
        self.seed = seed
        self.stage_feature = stage_feature
        self.years_feature = years_feature

    def _stage(self, query: OracleQuery) -> str:
        if self.stage_feature not in query.original_features:
            raise MissingFeatureError(f"query lacks stage feature {self.stage_feature!r}")
        raw = query.original_features[self.stage_feature]
        if isinstance(raw, str):
            return raw
        code = int(round(float(raw)))
        if not 0 <= code < len(STAGES):
            raise ValidationError(f"stage code {raw!r} outside 0..{len(STAGES) - 1}")
        return STAGES[code]

    def _years(self, query: OracleQuery) -> float:
        if self.years_feature in query.original_features:
            return float(query.original_features[self.years_feature])
        # fall back to the censoring time, which is months since baseline
        return query.censoring_time / 12.0

    def __call__(self, query: OracleQuery) -> OracleAnswer:
        entry = self.table.lookup(self._stage(query), self._years(query))
        rate = residual_rate(entry)
        rng = np.random.default_rng((self.seed, query.query_id))
        residual = rng.exponential(1.0 / rate)
        return OracleAnswer(query.query_id, query.censoring_time + residual)


@dataclass
class RecordingOracle:
    """Wraps an oracle and keeps a (query, answer) log for run-scoped audit CSVs."""

    inner: object
    log: list = field(default_factory=list)

    def __call__(self, query: OracleQuery) -> OracleAnswer:
        answer = self.inner(query)
        self.log.append((query, answer))
        return answer

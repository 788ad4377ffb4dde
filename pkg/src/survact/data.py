"""Survival data model, CSV I/O, splitting, and the synthetic generator.

The synthetic generator draws proportional-hazards data with a known
coefficient vector and a known latent event time per record, which is what
lets every downstream result be checked against ground truth.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CalibrationError, DimensionError, SplitError, ValidationError

_TRUE_STRINGS = {"1", "true"}
_FALSE_STRINGS = {"0", "false"}


@dataclass(frozen=True)
class SurvivalRecord:
    """One subject: covariates, observed time (months), and event indicator.

    ``event`` is True when the event was observed at ``time`` and False when
    the record is right-censored at ``time``.
    """

    id: object
    covariates: np.ndarray
    time: float
    event: bool

    def __post_init__(self):
        cov = np.asarray(self.covariates, dtype=np.float64)
        object.__setattr__(self, "covariates", cov)
        if self.time < 0:
            raise ValidationError(f"record {self.id}: negative time {self.time}")
        if not np.all(np.isfinite(cov)):
            raise ValidationError(f"record {self.id}: non-finite covariates")


class Dataset:
    """An ordered collection of survival records with one shared feature space.

    Internally array-backed (ids, covariate matrix, time vector, event
    vector) so model code never touches per-record objects.
    """

    def __init__(
        self,
        ids: Sequence,
        covariates: np.ndarray,
        time: np.ndarray,
        event: np.ndarray,
        feature_names: Sequence[str] | None = None,
    ):
        self.ids = list(ids)
        self.covariates = np.ascontiguousarray(covariates, dtype=np.float64)
        self.time = np.ascontiguousarray(time, dtype=np.float64)
        self.event = np.ascontiguousarray(event, dtype=bool)
        if self.covariates.ndim != 2:
            raise DimensionError("covariates must be a 2-d matrix")
        n, p = self.covariates.shape
        if not (len(self.ids) == n == self.time.shape[0] == self.event.shape[0]):
            raise DimensionError("ids, covariates, time and event lengths differ")
        self.feature_names = (
            list(feature_names) if feature_names is not None else [f"x{j+1}" for j in range(p)]
        )
        if len(self.feature_names) != p:
            raise DimensionError("feature_names length does not match covariate width")
        if len(set(self.ids)) != n:
            raise ValidationError("duplicate record ids")
        if np.any(self.time < 0):
            raise ValidationError("negative observed times")
        if not np.all(np.isfinite(self.covariates)):
            raise ValidationError("non-finite covariates")

    @classmethod
    def from_records(
        cls, records: Iterable[SurvivalRecord], feature_names: Sequence[str] | None = None
    ) -> "Dataset":
        records = list(records)
        if not records:
            raise ValidationError("empty record list")
        p = records[0].covariates.shape[0]
        for r in records:
            if r.covariates.shape[0] != p:
                raise DimensionError(f"record {r.id}: covariate length {r.covariates.shape[0]} != {p}")
        return cls(
            ids=[r.id for r in records],
            covariates=np.stack([r.covariates for r in records]),
            time=np.array([r.time for r in records]),
            event=np.array([r.event for r in records]),
            feature_names=feature_names,
        )

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_features(self) -> int:
        return self.covariates.shape[1]

    @property
    def n_events(self) -> int:
        return int(self.event.sum())

    def record(self, i: int) -> SurvivalRecord:
        return SurvivalRecord(self.ids[i], self.covariates[i].copy(), float(self.time[i]), bool(self.event[i]))

    def records(self) -> list[SurvivalRecord]:
        return [self.record(i) for i in range(len(self))]

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            [self.ids[i] for i in idx],
            self.covariates[idx],
            self.time[idx],
            self.event[idx],
            self.feature_names,
        )

    def with_record(self, record: SurvivalRecord) -> "Dataset":
        """New dataset with ``record`` appended."""
        if record.covariates.shape[0] != self.n_features:
            raise DimensionError("appended record has wrong covariate length")
        return Dataset(
            self.ids + [record.id],
            np.vstack([self.covariates, record.covariates[None, :]]),
            np.append(self.time, record.time),
            np.append(self.event, record.event),
            self.feature_names,
        )

    def without_index(self, i: int) -> "Dataset":
        keep = [k for k in range(len(self)) if k != i]
        return self.subset(keep)


@dataclass(frozen=True)
class SynthConfig:
    """Proportional-hazards generator settings.

    ``baseline`` is ``("exponential", rate)`` or ``("weibull", shape, scale)``.
    ``treatment_betas`` adds Bernoulli(1/2) binary columns with the given log
    hazard ratios, appended after the ``p`` standard-normal covariates.
    """

    n: int
    p: int
    true_beta: tuple[float, ...]
    baseline: tuple = ("exponential", 0.05)
    censoring_rate: float = 0.2
    treatment_betas: dict[str, float] | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.censoring_rate < 1.0:
            raise ValidationError("censoring_rate must be in [0, 1)")
        if len(self.true_beta) != self.p:
            raise DimensionError("true_beta length must equal p")
        kind = self.baseline[0]
        if kind == "exponential":
            if self.baseline[1] <= 0:
                raise ValidationError("exponential rate must be positive")
        elif kind == "weibull":
            if self.baseline[1] <= 0 or self.baseline[2] <= 0:
                raise ValidationError("weibull shape and scale must be positive")
        else:
            raise ValidationError(f"unknown baseline kind {kind!r}")


def _inverse_baseline(config: SynthConfig, u: np.ndarray, risk: np.ndarray) -> np.ndarray:
    # inversion of S(t|x) = exp(-H0(t) * risk): t = H0^{-1}(-log(u) / risk)
    target = -np.log(u) / risk
    if config.baseline[0] == "exponential":
        rate = config.baseline[1]
        return target / rate
    shape, scale = config.baseline[1], config.baseline[2]
    return scale * target ** (1.0 / shape)


def generate(config: SynthConfig) -> tuple[Dataset, dict]:
    """Draw a synthetic dataset; returns it with the latent true event times.

    Covariates are standard normal; latent times follow the configured
    baseline scaled by exp(x.beta); censoring times are exponential with a
    rate calibrated by bisection so the censored fraction lands within 0.02
    of ``censoring_rate``. Latent times are returned keyed by record id for
    use as a ground-truth oracle.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n
    x = rng.standard_normal((n, config.p))
    beta = np.array(config.true_beta, dtype=np.float64)
    feature_names = [f"x{j+1}" for j in range(config.p)]

    if config.treatment_betas:
        t_names = list(config.treatment_betas)
        t_cols = rng.integers(0, 2, size=(n, len(t_names))).astype(np.float64)
        x = np.hstack([x, t_cols])
        beta = np.concatenate([beta, [config.treatment_betas[t] for t in t_names]])
        feature_names += t_names

    risk = np.exp(x @ beta)
    u = rng.uniform(size=n)
    latent = _inverse_baseline(config, u, risk)

    if config.censoring_rate == 0.0:
        observed = latent
        event = np.ones(n, dtype=bool)
    else:
        cens_u = rng.uniform(size=n)
        rate = _calibrate_censoring(latent, cens_u, config.censoring_rate)
        censor = -np.log(cens_u) / rate
        event = latent <= censor
        observed = np.minimum(latent, censor)

    ids = list(range(n))
    data = Dataset(ids, x, observed, event, feature_names)
    return data, {i: float(latent[i]) for i in ids}


def _calibrate_censoring(latent: np.ndarray, cens_u: np.ndarray, target: float) -> float:
    """Bisection on the exponential censoring rate to hit the target fraction."""
    neg_log_u = -np.log(cens_u)

    def censored_fraction(rate: float) -> float:
        return float(np.mean(neg_log_u / rate < latent))

    lo, hi = 1e-12, 1e12
    for _ in range(200):
        mid = np.sqrt(lo * hi)
        if censored_fraction(mid) < target:
            lo = mid
        else:
            hi = mid
    rate = np.sqrt(lo * hi)
    achieved = censored_fraction(rate)
    # the empirical fraction moves in steps of 1/n, so tiny samples get slack
    tol = max(0.02, 2.0 / latent.shape[0])
    if abs(achieved - target) > tol:
        raise CalibrationError(
            f"could not reach censoring rate {target:.3f}: best achievable {achieved:.3f}"
        )
    return rate


def write_csv(data: Dataset, path: str | Path) -> None:
    """Write ``id,time,event,<features...>`` rows (UTF-8, dot decimal)."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "time", "event"] + list(data.feature_names))
        for i in range(len(data)):
            writer.writerow(
                [data.ids[i], repr(float(data.time[i])), int(data.event[i])]
                + [repr(float(v)) for v in data.covariates[i]]
            )


def write_truth_csv(latent_times: dict, path: str | Path) -> None:
    """Write the ``id,latent_time`` sidecar used by the ground-truth oracle."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "latent_time"])
        for rid, t in latent_times.items():
            writer.writerow([rid, repr(float(t))])


def load_truth_csv(path: str | Path) -> dict:
    path = Path(path)
    out: dict = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames or "latent_time" not in reader.fieldnames:
            raise ValidationError(f"{path}: expected header with id,latent_time")
        for row in reader:
            out[_parse_id(row["id"])] = float(row["latent_time"])
    return out


def _parse_id(raw: str):
    try:
        return int(raw)
    except ValueError:
        return raw


def _parse_event(raw: str, path: Path, line: int) -> bool:
    token = raw.strip().lower()
    if token in _TRUE_STRINGS:
        return True
    if token in _FALSE_STRINGS:
        return False
    raise ValidationError(f"{path}, row {line}: event value {raw!r} not in {{0,1,true,false}}")


def load_csv(path: str | Path) -> Dataset:
    """Read a dataset written by :func:`write_csv` (header row required)."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        for column in ("id", "time", "event"):
            if column not in header:
                raise ValidationError(f"{path}: missing required column {column!r}")
        id_col = header.index("id")
        time_col = header.index("time")
        event_col = header.index("event")
        feature_cols = [j for j in range(len(header)) if j not in (id_col, time_col, event_col)]
        feature_names = [header[j] for j in feature_cols]

        ids, times, events, rows = [], [], [], []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValidationError(f"{path}, row {line}: expected {len(header)} cells, got {len(row)}")
            ids.append(_parse_id(row[id_col]))
            try:
                t = float(row[time_col])
            except ValueError:
                raise ValidationError(f"{path}, row {line}: unparseable time {row[time_col]!r}") from None
            if t < 0:
                raise ValidationError(f"{path}, row {line}: negative time {t}")
            times.append(t)
            events.append(_parse_event(row[event_col], path, line))
            try:
                rows.append([float(row[j]) for j in feature_cols])
            except ValueError:
                raise ValidationError(f"{path}, row {line}: unparseable feature value") from None

    if not ids:
        raise ValidationError(f"{path}: no data rows")
    return Dataset(ids, np.array(rows), np.array(times), np.array(events), feature_names)


@dataclass(frozen=True)
class SplitSpec:
    """Sizes for the train/pool/validation/test partition."""

    train_n: int
    pool_n: int
    validation_n: int = 0
    test_n: int = 0
    seed: int = 0
    min_train_events: int = 2
    max_retries: int = 25

    def total(self) -> int:
        return self.train_n + self.pool_n + self.validation_n + self.test_n


@dataclass
class Split:
    train: Dataset
    pool: Dataset
    validation: Dataset | None
    test: Dataset | None
    pool_latent_times: dict = field(default_factory=dict)


def split(data: Dataset, spec: SplitSpec, latent_times: dict | None = None) -> Split:
    """Disjoint train/pool/validation/test split, deterministic given the seed.

    Pool records are re-labeled as censored (event=False, observed time kept
    as the censoring time); their latent truths, when available, are carried
    along for the ground-truth oracle. Resamples with derived seeds until the
    train set (and validation set, when present) contains enough events.
    """
    if spec.total() > len(data):
        raise SplitError(f"split sizes sum to {spec.total()} > dataset size {len(data)}")
    for name in ("train_n", "pool_n", "validation_n", "test_n"):
        if getattr(spec, name) < 0:
            raise SplitError(f"{name} must be >= 0")

    for attempt in range(spec.max_retries):
        rng = np.random.default_rng((spec.seed, attempt))
        perm = rng.permutation(len(data))
        bounds = np.cumsum([spec.train_n, spec.pool_n, spec.validation_n, spec.test_n])
        train_idx = perm[: bounds[0]]
        pool_idx = perm[bounds[0] : bounds[1]]
        val_idx = perm[bounds[1] : bounds[2]]
        test_idx = perm[bounds[2] : bounds[3]]

        train = data.subset(train_idx)
        if train.n_events < spec.min_train_events:
            continue
        validation = data.subset(val_idx) if spec.validation_n else None
        if validation is not None and spec.validation_n >= 2 and validation.n_events < 1:
            continue

        pool_src = data.subset(pool_idx)
        pool = Dataset(
            pool_src.ids,
            pool_src.covariates,
            pool_src.time,
            np.zeros(len(pool_src), dtype=bool),
            pool_src.feature_names,
        )
        pool_latents = {}
        if latent_times is not None:
            pool_latents = {rid: latent_times[rid] for rid in pool.ids if rid in latent_times}
        test = data.subset(test_idx) if spec.test_n else None
        return Split(train, pool, validation, test, pool_latents)

    raise SplitError(
        f"no split with >= {spec.min_train_events} train events found in {spec.max_retries} attempts"
    )

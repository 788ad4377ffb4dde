"""Expected-performance-improvement querying and the active survival loop.

A candidate's score is the hazard-weighted mean, over a grid of hypothetical
event times, of the validation c-index change that labeling the candidate at
that time would cause. Each round the highest-scoring pool record is labeled
by an oracle (queried with the record's original, pre-representation
features), moved into the training set as an observed event, and the model
is refit.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import cox, rsf
from .data import Dataset, SurvivalRecord
from .errors import EmptyPoolError, InvariantViolationError, OracleError, ValidationError
from .oracle import OracleAnswer, OracleQuery

logger = logging.getLogger(__name__)

DELTA_C_FAILED = float("-inf")


@dataclass(frozen=True)
class TimeGrid:
    """Candidate hypothetical event times, strictly increasing and positive."""

    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", times)
        if times.size < 1:
            raise ValidationError("time grid needs at least one time")
        if not np.all(np.isfinite(times)) or np.any(times <= 0):
            raise ValidationError("grid times must be finite and positive")
        if np.any(np.diff(times) <= 0):
            raise ValidationError("grid times must be strictly increasing")

    @property
    def size(self) -> int:
        return int(self.times.size)

    @classmethod
    def from_event_quantiles(cls, data: Dataset, size: int = 10) -> "TimeGrid":
        """Quantiles (5%, 15%, ..., 95% for size 10) of observed event times."""
        event_times = data.time[data.event]
        if event_times.size == 0:
            raise ValidationError("no event times to build a grid from")
        qs = (np.arange(size) + 0.5) / size
        return cls(np.unique(np.quantile(event_times, qs)))

    def adjusted_for(self, censoring_time: float) -> np.ndarray:
        """Push every grid time past the candidate's censoring time.

        A hypothetical event cannot precede the observed censoring, so times
        at or below it are replaced by a value just above it. Duplicates are
        kept: the expectation runs over all grid slots.
        """
        bumped = censoring_time + 1e-9 * max(1.0, abs(censoring_time))
        return np.where(self.times > censoring_time, self.times, bumped)


class CoxModelClass:
    """Cox instantiation of the loop's model contract."""

    name = "cox"

    def __init__(self, config: cox.CoxConfig | None = None):
        self.config = config or cox.CoxConfig()

    def fit(self, train: Dataset, warm=None):
        return cox.fit_cox(train, self.config, init_beta=warm)

    def warm_param(self, model):
        return model.beta

    def risk_scores(self, model, covariates):
        return model.risk_scores(covariates)

    def hazard_at(self, model, t, x):
        return cox.hazard_at(model, t, x)

    def fit_ok(self, model) -> bool:
        return model.converged


class RsfModelClass:
    """Random survival forest instantiation of the loop's model contract."""

    name = "rsf"

    def __init__(self, config: rsf.RsfConfig | None = None):
        self.config = config or rsf.RsfConfig()

    def fit(self, train: Dataset, warm=None):
        return rsf.fit_rsf(train, self.config)

    def warm_param(self, model):
        return None

    def risk_scores(self, model, covariates):
        return model.risk_scores(covariates)

    def hazard_at(self, model, t, x):
        return rsf.hazard_at(model, t, x)

    def fit_ok(self, model) -> bool:
        return True


@dataclass(frozen=True)
class EpiScore:
    candidate_id: object
    expected_delta_c: float
    per_time: list  # (hypothetical time, delta_c, hazard weight)
    uniform_weights: bool = False


@dataclass
class ActiveLearningState:
    """Mutable loop state: labeled train set, censored pool, fixed validation."""

    train: Dataset
    pool: Dataset
    validation: Dataset
    pool_originals: np.ndarray | None = None  # parallel to pool rows, pre-representation
    original_feature_names: list | None = None
    round: int = 0
    max_iter: int = 20
    history: list = field(default_factory=list)  # (round, validation c-index)
    selections: list = field(default_factory=list)  # (round, selected id, expected delta c)
    error: str | None = None

    def __post_init__(self):
        overlap = set(self.train.ids) & set(self.pool.ids)
        if overlap:
            raise ValidationError(f"train and pool share ids: {sorted(overlap)[:5]}")
        if self.pool_originals is not None and len(self.pool_originals) != len(self.pool):
            raise ValidationError("pool_originals must parallel the pool records")


def _validation_c(model_class, model, validation: Dataset) -> float:
    scores = model_class.risk_scores(model, validation.covariates)
    return cox.concordance_index(scores, validation).c_index


def delta_c(
    model_class,
    train: Dataset,
    candidate: SurvivalRecord,
    validation: Dataset,
    current_model=None,
    current_c: float | None = None,
) -> float:
    """Validation c-index change from refitting with ``candidate`` added.

    The candidate must carry its hypothetical event time (event=True). A
    refit that fails to converge yields -inf so the candidate is never
    selected on the strength of a bad fit.
    """
    if not candidate.event:
        raise ValidationError("candidate must carry a hypothetical event (event=True)")
    if current_model is None:
        current_model = model_class.fit(train)
    if current_c is None:
        current_c = _validation_c(model_class, current_model, validation)

    augmented = train.with_record(candidate)
    try:
        new_model = model_class.fit(augmented, warm=model_class.warm_param(current_model))
    except Exception as exc:  # noqa: BLE001 - any refit failure disqualifies the candidate
        logger.warning("refit failed for candidate %s at t=%s: %s", candidate.id, candidate.time, exc)
        return DELTA_C_FAILED
    if not model_class.fit_ok(new_model):
        logger.warning("refit did not converge for candidate %s at t=%s", candidate.id, candidate.time)
        return DELTA_C_FAILED
    return _validation_c(model_class, new_model, validation) - current_c


def epi_score(
    candidate: SurvivalRecord,
    model,
    train: Dataset,
    validation: Dataset,
    grid: TimeGrid,
    model_class,
    current_c: float | None = None,
) -> EpiScore:
    """Hazard-weighted expected c-index change over the hypothetical grid.

    Weights come from the current model's hazard at each (censoring-adjusted)
    grid time; an all-zero weight vector falls back to uniform weights.
    """
    if current_c is None:
        current_c = _validation_c(model_class, model, validation)

    adjusted = grid.adjusted_for(candidate.time)
    weights = np.array([model_class.hazard_at(model, t, candidate.covariates) for t in adjusted])

    deltas = np.empty(len(adjusted))
    cache: dict[float, float] = {}
    for k, t in enumerate(adjusted):
        if t not in cache:
            hypothetical = SurvivalRecord(candidate.id, candidate.covariates, float(t), True)
            cache[t] = delta_c(model_class, train, hypothetical, validation, model, current_c)
        deltas[k] = cache[t]

    total = float(weights.sum())
    uniform = total <= 0.0
    if uniform:
        logger.warning("zero total hazard weight for candidate %s; using uniform weights", candidate.id)
        expected = float(np.mean(deltas))
    else:
        expected = float((weights * deltas).sum() / total)
    per_time = [(float(t), float(d), float(w)) for t, d, w in zip(adjusted, deltas, weights)]
    return EpiScore(candidate.id, expected, per_time, uniform_weights=uniform)


def score_pool(
    pool: Dataset,
    model,
    train: Dataset,
    validation: Dataset,
    grid: TimeGrid,
    model_class,
    current_c: float | None = None,
    candidate_indices=None,
) -> list[EpiScore]:
    if current_c is None:
        current_c = _validation_c(model_class, model, validation)
    indices = range(len(pool)) if candidate_indices is None else candidate_indices
    return [
        epi_score(pool.record(i), model, train, validation, grid, model_class, current_c)
        for i in indices
    ]


def select_query(
    pool: Dataset,
    model,
    train: Dataset,
    validation: Dataset,
    grid: TimeGrid,
    model_class,
    current_c: float | None = None,
):
    """Id of the pool record with the highest expected improvement.

    Ties break toward the lowest id, so selection is deterministic.
    """
    if len(pool) == 0:
        raise EmptyPoolError("cannot select from an empty pool")
    scores = score_pool(pool, model, train, validation, grid, model_class, current_c)
    best = max(scores, key=lambda s: (s.expected_delta_c, _NegatedId(s.candidate_id)))
    return best.candidate_id


class _NegatedId:
    """Orders ids descending so max() prefers the lowest id on score ties."""

    __slots__ = ("id",)

    def __init__(self, id_):
        self.id = id_

    def __lt__(self, other):
        return self.id > other.id

    def __eq__(self, other):
        return self.id == other.id


class EpiSelector:
    """Expected-performance-improvement selection, optionally on a subsample."""

    name = "epi"

    def __init__(self, grid_size: int = 10, subsample: int | None = None, seed: int = 0):
        self.grid_size = grid_size
        self.subsample = subsample
        self._rng = np.random.default_rng(seed)

    def select(self, model_class, model, current_c, state: ActiveLearningState):
        grid = TimeGrid.from_event_quantiles(state.train, self.grid_size)
        indices = None
        if self.subsample is not None and len(state.pool) > self.subsample:
            indices = sorted(self._rng.choice(len(state.pool), size=self.subsample, replace=False))
        scores = score_pool(
            state.pool, model, state.train, state.validation, grid, model_class, current_c, indices
        )
        best = max(scores, key=lambda s: (s.expected_delta_c, _NegatedId(s.candidate_id)))
        return state.pool.ids.index(best.candidate_id), best.expected_delta_c


class RandomSelector:
    """Uniform random selection: the baseline the query strategy is judged against."""

    name = "random"

    def __init__(self, seed: int = 0):
        self._rng = np.random.default_rng(seed)

    def select(self, model_class, model, current_c, state: ActiveLearningState):
        return int(self._rng.integers(0, len(state.pool))), float("nan")


def run_active_loop(
    state: ActiveLearningState,
    oracle,
    model_class,
    selector=None,
    status_sink=None,
) -> ActiveLearningState:
    """Run ``state.max_iter`` query rounds, mutating and returning ``state``.

    Per round: fit on the current train set, pick a pool record, ask the
    oracle for its time-to-event using the record's original features, move
    it into the train set as an observed event, and append the refit model's
    validation c-index to the history. Stops early on an exhausted pool; an
    oracle failure aborts the round and tags the state with the error.
    ``status_sink(round, c_index, history)`` is called after every history
    append (the HTTP gateway uses it to publish run status).
    """
    selector = selector or EpiSelector()
    query_counter = 0

    model = model_class.fit(state.train)
    current_c = _validation_c(model_class, model, state.validation)
    if not state.history:
        state.history.append((state.round, current_c))
    if status_sink is not None:
        status_sink(state.round, current_c, list(state.history))

    while state.round < state.max_iter:
        if len(state.pool) == 0:
            break
        pool_index, expected = selector.select(model_class, model, current_c, state)
        record = state.pool.record(pool_index)

        if state.pool_originals is not None:
            original_row = np.asarray(state.pool_originals[pool_index])
        else:
            original_row = record.covariates
        names = state.original_feature_names or state.pool.feature_names
        query = OracleQuery(
            query_id=query_counter,
            candidate_id=record.id,
            original_features=dict(zip(names, (float(v) for v in original_row))),
            censoring_time=float(record.time),
            round=state.round + 1,
            c_index=current_c,
        )
        query_counter += 1

        try:
            answer = oracle(query)
            _check_answer(query, answer)
        except (OracleError, InvariantViolationError) as exc:
            state.error = str(exc)
            logger.warning("oracle failed on query %s: %s", query.query_id, exc)
            break

        labeled = SurvivalRecord(record.id, record.covariates, float(answer.event_time), True)
        state.train = state.train.with_record(labeled)
        if state.pool_originals is not None:
            keep = [k for k in range(len(state.pool)) if k != pool_index]
            state.pool_originals = np.asarray(state.pool_originals)[keep]
        state.pool = state.pool.without_index(pool_index)

        state.round += 1
        model = model_class.fit(state.train)
        current_c = _validation_c(model_class, model, state.validation)
        state.history.append((state.round, current_c))
        state.selections.append((state.round, record.id, expected))
        if status_sink is not None:
            status_sink(state.round, current_c, list(state.history))

    return state


def _check_answer(query: OracleQuery, answer: OracleAnswer) -> None:
    if answer.query_id != query.query_id:
        raise InvariantViolationError(
            f"answer for query {answer.query_id} does not match pending query {query.query_id}"
        )
    if answer.event_time < query.censoring_time:
        raise InvariantViolationError(
            f"event time {answer.event_time} precedes censoring time {query.censoring_time}"
        )


def build_represented_state(
    parts,
    max_iter: int,
    sae_config=None,
    weights=None,
) -> ActiveLearningState:
    """Assemble loop state from a data split, optionally through an encoder.

    When ``sae_config`` is given the encoder is trained on the union of the
    train and pool covariates (never the validation rows) and all three sets
    are mapped through it; the pool's raw rows are kept as the original
    features for oracle queries. Prefit ``weights`` (e.g. loaded from a
    saved encoder file) take precedence over training a new encoder.
    """
    from .sae import encode, train_sae

    train, pool, validation = parts.train, parts.pool, parts.validation
    pool_originals = pool.covariates.copy()
    original_names = list(pool.feature_names)

    if weights is None and sae_config is not None:
        weights = train_sae(np.vstack([train.covariates, pool.covariates]), sae_config)
    if weights is not None:
        names = [f"z{k+1}" for k in range(weights.latent_dim)]
        train = Dataset(train.ids, encode(weights, train.covariates), train.time, train.event, names)
        pool = Dataset(pool.ids, encode(weights, pool.covariates), pool.time, pool.event, names)
        validation = Dataset(
            validation.ids,
            encode(weights, validation.covariates),
            validation.time,
            validation.event,
            names,
        )

    return ActiveLearningState(
        train=train,
        pool=pool,
        validation=validation,
        pool_originals=pool_originals,
        original_feature_names=original_names,
        max_iter=max_iter,
    )


def write_history_csv(state: ActiveLearningState, path: str | Path) -> None:
    """Per-round history: round, c_index, selected_id, expected_delta_c."""
    selected = {r: (sid, exp) for r, sid, exp in state.selections}
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["round", "c_index", "selected_id", "expected_delta_c"])
        for rnd, c in state.history:
            sid, exp = selected.get(rnd, ("", ""))
            exp_txt = "" if exp == "" or (isinstance(exp, float) and math.isnan(exp)) else repr(exp)
            writer.writerow([rnd, repr(float(c)), sid, exp_txt])

"""Treatment-effect ranking on represented features.

Non-treatment covariates pass through the autoencoder; the binary treatment
flags bypass it untouched so their Cox coefficients stay readable as log
hazard ratios of treated vs untreated. Hazard ratios are averaged
arithmetically over independent active-learning runs.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .active import ActiveLearningState, CoxModelClass, EpiSelector, run_active_loop
from .cox import CoxConfig, fit_cox
from .data import Dataset, SplitSpec, split
from .errors import AllRunsFailedError, SurvactError, ValidationError
from .oracle import GroundTruthOracle
from .sae import SaeConfig, SaeWeights, encode, train_sae

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RecommendConfig:
    runs: int = 10
    rounds: int = 20
    seed: int = 0
    train_n: int = 50
    validation_n: int = 40
    sae: SaeConfig = field(default_factory=SaeConfig)
    cox: CoxConfig = field(default_factory=CoxConfig)
    grid_size: int = 10
    pool_subsample: int | None = None


@dataclass(frozen=True)
class TreatmentReport:
    """Mean hazard ratio per treatment over runs, lowest-risk first.

    ``coefficients`` are the logs of the averaged hazard ratios, so
    exp(coefficient) == hazard_ratio holds exactly.
    """

    treatments: list
    hazard_ratios: dict
    coefficients: dict
    ranking: list
    per_run_coefficients: dict
    runs_completed: int
    runs_failed: int
    rounds: int
    seed: int


def _check_binary(data: Dataset, treatment_columns: list[str]) -> list[int]:
    indices = []
    for name in treatment_columns:
        if name not in data.feature_names:
            raise ValidationError(f"treatment column {name!r} not in dataset")
        j = data.feature_names.index(name)
        values = np.unique(data.covariates[:, j])
        if not np.all(np.isin(values, (0.0, 1.0))):
            raise ValidationError(f"treatment column {name!r} is not binary 0/1")
        indices.append(j)
    return indices


def _column_split(data: Dataset, treatment_columns: list[str]) -> tuple[list[int], list[int]]:
    t_idx = _check_binary(data, treatment_columns)
    other_idx = [j for j in range(data.n_features) if j not in t_idx]
    if not other_idx:
        raise ValidationError("no non-treatment columns to represent")
    return t_idx, other_idx


def build_treatment_features(
    data: Dataset, treatment_columns: list[str], sae: SaeConfig | SaeWeights
) -> Dataset:
    """Encode the non-treatment covariates and append the raw treatment flags.

    The treatment columns bypass the encoder entirely (and therefore any
    standardization), landing bit-identical in the output. Pass an
    :class:`SaeConfig` to train the encoder on ``data`` itself, or prefit
    :class:`SaeWeights` (e.g. trained on a train-plus-pool union) to apply.
    """
    t_idx, other_idx = _column_split(data, treatment_columns)
    weights = train_sae(data.covariates[:, other_idx], sae) if isinstance(sae, SaeConfig) else sae
    latent = encode(weights, data.covariates[:, other_idx])
    covariates = np.hstack([latent, data.covariates[:, t_idx]])
    names = [f"z{k+1}" for k in range(latent.shape[1])] + list(treatment_columns)
    return Dataset(data.ids, covariates, data.time, data.event, names)


def recommend(
    data: Dataset,
    latent_times: dict,
    treatment_columns: list[str],
    config: RecommendConfig | None = None,
) -> TreatmentReport:
    """Run the active survival loop ``runs`` times and average exp(beta_t).

    Each run gets a derived seed for its split and selection; a run whose
    final Cox fit fails is excluded (and counted). All runs failing raises
    AllRunsFailedError.
    """
    config = config or RecommendConfig()
    t_names = list(treatment_columns)
    _column_split(data, t_names)

    per_run: dict[str, list[float]] = {name: [] for name in t_names}
    failed = 0
    for run in range(config.runs):
        run_seed = (config.seed, run)
        try:
            beta = _single_run(data, latent_times, t_names, config, run_seed)
        except SurvactError as exc:
            failed += 1
            logger.warning("treatment run %d failed: %s", run, exc)
            continue
        for name, value in beta.items():
            per_run[name].append(value)

    completed = config.runs - failed
    if completed == 0:
        raise AllRunsFailedError(f"all {config.runs} runs failed")

    hazard_ratios = {
        name: float(np.mean(np.exp(per_run[name]))) for name in t_names
    }
    coefficients = {name: math.log(hazard_ratios[name]) for name in t_names}
    ranking = sorted(t_names, key=lambda name: hazard_ratios[name])
    return TreatmentReport(
        treatments=t_names,
        hazard_ratios=hazard_ratios,
        coefficients=coefficients,
        ranking=ranking,
        per_run_coefficients=per_run,
        runs_completed=completed,
        runs_failed=failed,
        rounds=config.rounds,
        seed=config.seed,
    )


def _single_run(data, latent_times, t_names, config, run_seed) -> dict:
    pool_n = len(data) - config.train_n - config.validation_n
    if pool_n < 1:
        raise ValidationError("dataset too small for the requested train/validation sizes")
    spec = SplitSpec(
        train_n=config.train_n,
        pool_n=pool_n,
        validation_n=config.validation_n,
        seed=run_seed,
    )
    parts = split(data, spec, latent_times)

    # the encoder sees only labeled + pool rows, never the held-out validation
    t_idx, other_idx = _column_split(data, t_names)
    union = np.vstack([parts.train.covariates, parts.pool.covariates])[:, other_idx]
    weights = train_sae(union, config.sae)

    original_rows = parts.pool.covariates.copy()
    train = build_treatment_features(parts.train, t_names, weights)
    pool = build_treatment_features(parts.pool, t_names, weights)
    validation = build_treatment_features(parts.validation, t_names, weights)
    state = ActiveLearningState(
        train=train,
        pool=pool,
        validation=validation,
        pool_originals=original_rows,
        original_feature_names=data.feature_names,
        max_iter=config.rounds,
    )
    oracle = GroundTruthOracle(latent_times)
    selector = EpiSelector(config.grid_size, subsample=config.pool_subsample, seed=run_seed)
    model_class = CoxModelClass(config.cox)
    state = run_active_loop(state, oracle, model_class, selector)
    if state.error:
        raise SurvactError(f"active loop aborted: {state.error}")

    model = fit_cox(state.train, config.cox)
    return {
        name: float(model.beta[state.train.feature_names.index(name)]) for name in t_names
    }


def baseline_hazard_ratios(
    data: Dataset, treatment_columns: list[str], cox_config: CoxConfig | None = None
) -> dict:
    """exp(beta_t) from one plain Cox fit on the raw features (no loop)."""
    _check_binary(data, treatment_columns)
    model = fit_cox(data, cox_config or CoxConfig())
    return {
        name: float(np.exp(model.beta[data.feature_names.index(name)]))
        for name in treatment_columns
    }


def write_report_csv(report: TreatmentReport, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["treatment", "coefficient", "hazard_ratio", "rank", "runs"])
        for name in report.treatments:
            writer.writerow(
                [
                    name,
                    repr(report.coefficients[name]),
                    repr(report.hazard_ratios[name]),
                    report.ranking.index(name) + 1,
                    report.runs_completed,
                ]
            )


def format_report(report: TreatmentReport, baseline: dict | None = None) -> str:
    """Method-by-treatment table of hazard ratios."""
    width = max(12, *(len(t) + 2 for t in report.treatments))
    header = "method".ljust(14) + "".join(t.rjust(width) for t in report.treatments)
    lines = [header]
    if baseline is not None:
        lines.append(
            "cox-baseline".ljust(14)
            + "".join(f"{baseline[t]:.3f}".rjust(width) for t in report.treatments)
        )
    lines.append(
        "cox-active".ljust(14)
        + "".join(f"{report.hazard_ratios[t]:.3f}".rjust(width) for t in report.treatments)
    )
    lines.append(
        f"(hazard ratios averaged over {report.runs_completed} runs, "
        f"{report.rounds} rounds each; {report.runs_failed} failed)"
    )
    return "\n".join(lines)

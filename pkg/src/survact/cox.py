"""Cox proportional-hazards fitting, baseline hazard, and concordance.

Fitting maximizes the Breslow-tie log partial likelihood with Newton-Raphson
plus step-halving, falling back to scaled gradient steps when the Hessian is
unusable. A small ridge penalty (excluded from the reported likelihood)
stabilizes the tiny actively-selected training sets this package lives on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _backend as kernels
from .data import Dataset
from .errors import (
    DimensionError,
    NoComparablePairsError,
    NoEventsError,
    SeparationError,
)

_CONSTANT_VARIANCE = 1e-12


@dataclass(frozen=True)
class CoxConfig:
    tolerance: float = 1e-6
    max_iter: int = 100
    ridge: float = 1e-6
    max_abs_beta: float = 15.0  # crossing this means monotone-likelihood separation


@dataclass(frozen=True)
class BaselineHazard:
    """Breslow baseline: hazard mass at each distinct event time."""

    times: np.ndarray
    increments: np.ndarray
    cumulative: np.ndarray

    def cumulative_at(self, t) -> np.ndarray | float:
        """Cumulative baseline hazard, a right-continuous step function."""
        idx = np.searchsorted(self.times, t, side="right") - 1
        padded = np.concatenate([[0.0], self.cumulative])
        out = padded[np.asarray(idx) + 1]
        return float(out) if np.isscalar(t) else out

    def increment_nearest(self, t: float) -> tuple[float, bool]:
        """Hazard mass at the event time nearest ``t``.

        Returns ``(0.0, True)`` when ``t`` precedes the first event time.
        """
        if t < self.times[0]:
            return 0.0, True
        pos = int(np.searchsorted(self.times, t, side="left"))
        if pos >= len(self.times):
            pos = len(self.times) - 1
        elif pos > 0 and t - self.times[pos - 1] <= self.times[pos] - t:
            pos -= 1
        return float(self.increments[pos]), False


class StepFunction:
    """Right-continuous step function with a fixed value before the first knot."""

    def __init__(self, times: np.ndarray, values: np.ndarray, initial: float):
        self.times = np.asarray(times, dtype=np.float64)
        self.values = np.asarray(values, dtype=np.float64)
        self.initial = float(initial)

    def __call__(self, t):
        idx = np.searchsorted(self.times, t, side="right") - 1
        padded = np.concatenate([[self.initial], self.values])
        out = padded[np.asarray(idx) + 1]
        return float(out) if np.isscalar(t) else out


@dataclass(frozen=True)
class ConcordanceResult:
    c_index: float
    concordant: int
    comparable: int
    ties: int


@dataclass(frozen=True)
class CoxModel:
    beta: np.ndarray
    baseline: BaselineHazard
    log_partial_likelihood: float
    iterations: int
    converged: bool
    gradient_norm: float
    feature_names: list = field(default_factory=list)

    def risk_scores(self, covariates: np.ndarray) -> np.ndarray:
        """Linear predictor x.beta; higher means riskier."""
        covariates = np.asarray(covariates, dtype=np.float64)
        if covariates.shape[-1] != self.beta.shape[0]:
            raise DimensionError(
                f"covariate width {covariates.shape[-1]} != coefficient length {self.beta.shape[0]}"
            )
        return covariates @ self.beta


def _sorted_arrays(data: Dataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    order = np.argsort(data.time, kind="stable")
    return (
        np.ascontiguousarray(data.covariates[order]),
        data.time[order],
        data.event[order],
    )


def _require_events(data: Dataset) -> None:
    if data.n_events == 0:
        raise NoEventsError("dataset has no observed events")


def _check_beta(beta: np.ndarray, data: Dataset) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (data.n_features,):
        raise DimensionError(f"beta length {beta.shape} != feature count {data.n_features}")
    return beta


def partial_log_likelihood(beta: np.ndarray, data: Dataset) -> float:
    """Log partial likelihood of ``beta`` with Breslow handling of ties."""
    beta = _check_beta(beta, data)
    _require_events(data)
    x, t, e = _sorted_arrays(data)
    return kernels.cox_loglik(x, t, e, beta)


def breslow_baseline(beta: np.ndarray, data: Dataset) -> BaselineHazard:
    """Breslow estimate of the baseline hazard mass at each event time."""
    beta = _check_beta(beta, data)
    _require_events(data)
    x, t, e = _sorted_arrays(data)
    times, increments = kernels.breslow_increments(x, t, e, beta)
    return BaselineHazard(times, increments, np.cumsum(increments))


def fit_cox(
    data: Dataset,
    config: CoxConfig | None = None,
    init_beta: np.ndarray | None = None,
) -> CoxModel:
    """Maximize the ridge-stabilized log partial likelihood.

    Constant covariate columns are detected, pinned at zero, and excluded
    from the Newton updates. The reported log partial likelihood excludes
    the ridge penalty. ``init_beta`` warm-starts the solver.
    """
    config = config or CoxConfig()
    _require_events(data)
    x, t, e = _sorted_arrays(data)
    p = x.shape[1]

    active = np.var(x, axis=0) >= _CONSTANT_VARIANCE
    beta_full = np.zeros(p)
    if init_beta is not None:
        beta_full = _check_beta(init_beta, data).copy()
        beta_full[~active] = 0.0

    if active.any():
        beta_act, ll, iters, converged, gnorm = _maximize(
            np.ascontiguousarray(x[:, active]), t, e, beta_full[active], config
        )
        beta_full[active] = beta_act
    else:
        ll = kernels.cox_loglik(x, t, e, beta_full)
        iters, converged, gnorm = 0, True, 0.0

    baseline = breslow_baseline(beta_full, data)
    return CoxModel(
        beta=beta_full,
        baseline=baseline,
        log_partial_likelihood=ll,
        iterations=iters,
        converged=converged,
        gradient_norm=gnorm,
        feature_names=list(data.feature_names),
    )


def _maximize(x, t, e, beta, config) -> tuple[np.ndarray, float, int, bool, float]:
    ridge = config.ridge
    beta = beta.copy()

    def penalized_loglik(b):
        return kernels.cox_loglik(x, t, e, b) - 0.5 * ridge * float(b @ b)

    ll_pen = penalized_loglik(beta)
    if not np.isfinite(ll_pen):
        beta = np.zeros_like(beta)
        ll_pen = penalized_loglik(beta)
    gnorm = np.inf
    iters = 0
    converged = False
    eye = np.eye(x.shape[1])

    for iters in range(1, config.max_iter + 1):
        ll, grad, hess = kernels.cox_grad_hess(x, t, e, beta)
        grad = grad - ridge * beta
        hess = hess - ridge * eye
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= config.tolerance:
            converged = True
            iters -= 1
            break

        delta = None
        if np.all(np.isfinite(hess)):
            try:
                delta = np.linalg.solve(-hess, grad)
            except np.linalg.LinAlgError:
                delta = None
        if delta is None or not np.all(np.isfinite(delta)) or float(delta @ grad) <= 0.0:
            # near-singular Hessian: fall back to a scaled gradient step
            delta = grad / (1.0 + gnorm)

        # accept any step that does not degrade the objective beyond the
        # floating-point noise of evaluating it (scales with |ll|)
        slack = 1e-11 + 64.0 * np.finfo(np.float64).eps * abs(ll_pen)
        step = 1.0
        improved = False
        for _ in range(40):
            candidate = beta + step * delta
            ll_new = penalized_loglik(candidate)
            if np.isfinite(ll_new) and ll_new >= ll_pen - slack:
                beta = candidate
                ll_pen = ll_new
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        if np.max(np.abs(beta)) > config.max_abs_beta:
            raise SeparationError(
                "coefficients diverged (monotone likelihood); add ridge or drop separating columns"
            )
    else:
        iters = config.max_iter

    if not converged:
        _, grad, _ = kernels.cox_grad_hess(x, t, e, beta)
        gnorm = float(np.linalg.norm(grad - ridge * beta))
        converged = gnorm <= config.tolerance

    ll_raw = kernels.cox_loglik(x, t, e, beta)
    return beta, ll_raw, iters, converged, gnorm


def hazard_at(model: CoxModel, t: float, x: np.ndarray, return_flag: bool = False):
    """Hazard mass h(t|x) = h0(t) * exp(x.beta) at the event time nearest ``t``.

    Before the first event time the hazard is 0; `return_flag=True` also
    reports that condition.
    """
    increment, before_first = model.baseline.increment_nearest(float(t))
    value = increment * float(np.exp(model.risk_scores(np.asarray(x, dtype=np.float64))))
    if return_flag:
        return value, before_first
    return value


def survival_function(model: CoxModel, x: np.ndarray) -> StepFunction:
    """S(t|x) = exp(-H0(t) * exp(x.beta)) as a step function with S(0)=1."""
    risk = float(np.exp(model.risk_scores(np.asarray(x, dtype=np.float64))))
    values = np.exp(-model.baseline.cumulative * risk)
    return StepFunction(model.baseline.times, values, initial=1.0)


def concordance_index(scores: np.ndarray, data: Dataset) -> ConcordanceResult:
    """Concordance over comparable pairs; tied scores count one half.

    A pair (i, j) is comparable when i has an observed event and
    time_i < time_j; it is concordant when score_i > score_j.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (len(data),):
        raise DimensionError(f"need one score per record: {scores.shape} vs {len(data)}")
    concordant, tied, comparable = kernels.concordance_counts(data.time, data.event, scores)
    if comparable == 0:
        raise NoComparablePairsError("no comparable (event, later-time) pair in data")
    return ConcordanceResult(
        c_index=(concordant + 0.5 * tied) / comparable,
        concordant=concordant,
        comparable=comparable,
        ties=tied,
    )

"""Pure-numpy kernels: the fallback backend for the hot inner loops.

All functions expect survival data sorted by ascending observed time and
use the Breslow convention for tied event times: every record tied at an
event time shares one risk set, namely all records with time >= that time.

The compiled backend in ``_ckernels.pyx`` mirrors these signatures; the
active-learning loop calls whichever one ``_backend`` selected at import.
"""

from __future__ import annotations

import numpy as np


def cox_loglik(x: np.ndarray, time: np.ndarray, event: np.ndarray, beta: np.ndarray) -> float:
    """Log partial likelihood at ``beta`` (data sorted by ascending time)."""
    eta = x @ beta
    with np.errstate(over="ignore"):
        w = np.exp(eta)
    rcw = np.cumsum(w[::-1])[::-1]
    first = np.searchsorted(time, time, side="left")
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.sum(eta[event] - np.log(rcw[first[event]])))


def cox_grad_hess(
    x: np.ndarray, time: np.ndarray, event: np.ndarray, beta: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Log partial likelihood with gradient and Hessian (w.r.t. ``beta``).

    Returns ``(loglik, grad, hess)`` where ``hess`` is the (negative
    semi-definite) Hessian of the log partial likelihood.
    """
    n, p = x.shape
    eta = x @ beta
    with np.errstate(over="ignore"):
        w = np.exp(eta)
    wx = w[:, None] * x
    wxx = wx[:, :, None] * x[:, None, :]
    rcw = np.cumsum(w[::-1])[::-1]
    rcwx = np.cumsum(wx[::-1], axis=0)[::-1]
    rcwxx = np.cumsum(wxx[::-1], axis=0)[::-1]

    first = np.searchsorted(time, time, side="left")
    ev = first[event]
    s0 = rcw[ev]
    s1 = rcwx[ev]
    s2 = rcwxx[ev]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ll = float(np.sum(eta[event] - np.log(s0)))
        m1 = s1 / s0[:, None]
        grad = (x[event] - m1).sum(axis=0)
        hess = -((s2 / s0[:, None, None]).sum(axis=0) - np.einsum("ki,kj->ij", m1, m1))
    return ll, grad, hess


def breslow_increments(
    x: np.ndarray, time: np.ndarray, event: np.ndarray, beta: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Baseline hazard mass per distinct event time: d_t / sum_{R(t)} exp(x.beta)."""
    w = np.exp(x @ beta)
    rcw = np.cumsum(w[::-1])[::-1]
    event_times, counts = np.unique(time[event], return_counts=True)
    idx = np.searchsorted(time, event_times, side="left")
    return event_times, counts / rcw[idx]


def concordance_counts(
    time: np.ndarray, event: np.ndarray, scores: np.ndarray
) -> tuple[int, int, int]:
    """Count (concordant, score-tied, comparable) pairs.

    A pair (i, j) is comparable when i has an observed event and
    time_i < time_j; it is concordant when scores_i > scores_j.
    """
    comp = event[:, None] & (time[:, None] < time[None, :])
    concordant = int(np.count_nonzero(comp & (scores[:, None] > scores[None, :])))
    tied = int(np.count_nonzero(comp & (scores[:, None] == scores[None, :])))
    return concordant, tied, int(np.count_nonzero(comp))


def best_split_logrank(
    values: np.ndarray, time: np.ndarray, event: np.ndarray, min_leaf_events: int
) -> tuple[float, float]:
    """Best threshold on one feature by the standardized log-rank statistic.

    Scans every boundary between distinct feature values; a split is valid
    when both sides keep at least ``min_leaf_events`` events. Returns
    ``(threshold, statistic)``, or ``(nan, -inf)`` when no split is valid.
    """
    n = values.shape[0]
    order = np.argsort(values, kind="stable")
    v = values[order]
    t = time[order]
    e = event[order]

    ev_times = np.unique(t[e])
    m = ev_times.shape[0]
    if m == 0 or n < 2:
        return float("nan"), float("-inf")

    at_risk = t[:, None] >= ev_times[None, :]
    deaths = e[:, None] & (t[:, None] == ev_times[None, :])
    n1 = np.cumsum(at_risk, axis=0).astype(np.float64)
    d1 = np.cumsum(deaths, axis=0).astype(np.float64)
    n_tot = n1[-1]
    d_tot = d1[-1]

    # row k-1 describes the split with the first k samples on the left
    frac = n1[:-1] / n_tot
    num = (d1[:-1] - d_tot * frac).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        var_t = d_tot * frac * (1.0 - frac) * (n_tot - d_tot) / (n_tot - 1.0)
    var_t[:, n_tot <= 1.0] = 0.0
    var = var_t.sum(axis=1)

    left_events = np.cumsum(e)[:-1]
    total_events = int(e.sum())
    valid = (
        (v[:-1] < v[1:])
        & (left_events >= min_leaf_events)
        & (total_events - left_events >= min_leaf_events)
        & (var > 0.0)
    )
    if not valid.any():
        return float("nan"), float("-inf")

    stat = np.where(valid, np.abs(num) / np.sqrt(np.where(var > 0, var, 1.0)), -np.inf)
    k = int(np.argmax(stat))
    return float(0.5 * (v[k] + v[k + 1])), float(stat[k])

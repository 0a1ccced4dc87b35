"""Maximum-likelihood segmentation of a surprise series into Gaussian epochs.

Each epoch is a run of consecutive positions modeled as i.i.d. Gaussian
with its own mean and variance; a segmentation into n epochs has 3n - 1
free parameters (n - 1 interior break positions, n means, n variances).
The profiled log-likelihood of a segmentation is

    sum_i -(m_i / 2) * (1 + ln(2 * pi * max(var_i, floor)))

with m_i the segment length and var_i the maximum-likelihood variance
(mean squared deviation). Additive prior constants are dropped: every
use is a comparison between segmentations. Natural log throughout, so a
log-likelihood gain dL means exp(dL) times as likely.

`fit` searches all break placements that satisfy the minimum epoch
length with a dynamic program over a segment score table and returns the
global maximum; ties resolve to the lexicographically smallest break
vector. The number of epochs is chosen by AIC = 2*(3n - 1) - 2*loglik.

The minimum epoch length is either a fixed index count or a calendar
duration; the calendar form resolves, for each candidate segment start,
to the smallest index span whose dates cover the duration.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .errors import InputError
from .surprise import _series_values, check_breaks

DAYS_PER_YEAR = 365.25


@dataclass(frozen=True)
class EpochSearchConfig:
    n_max: int = 3
    min_length: int | None = None  # index-count minimum; overrides min_years
    min_years: float | None = 5.0  # calendar minimum, resolved via read dates
    variance_floor: float = 1e-12
    # Normalize the segment mean/variance by (length - 1) instead of length.
    # Off by default: the (length - 1) form is kept only for comparison.
    n_minus_1_norm: bool = False

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.min_length is None and self.min_years is None:
            raise ValueError("set min_length (indices) or min_years (calendar)")
        if self.min_length is not None and self.min_length < 2:
            raise ValueError("min_length must be >= 2")
        if self.min_years is not None and self.min_years <= 0:
            raise ValueError("min_years must be positive")
        if self.variance_floor <= 0:
            raise ValueError("variance_floor must be positive")


@dataclass(frozen=True)
class EpochModel:
    breaks: tuple[int, ...]  # segment start indices; breaks[0] == 0
    means: tuple[float, ...]
    variances: tuple[float, ...]
    log_likelihood: float
    n_params: int  # 3n - 1
    aic: float

    @property
    def n(self) -> int:
        return len(self.breaks)


def _segment_stats(seg: np.ndarray, variance_floor: float, n_minus_1_norm: bool):
    m = len(seg)
    if n_minus_1_norm:
        denom = m - 1
        mu = seg.sum() / denom
        var = float(np.sum((seg - mu) ** 2) / denom)
        mult = denom / 2.0
    else:
        mu = seg.mean()
        var = float(np.mean((seg - mu) ** 2))
        mult = m / 2.0
    return float(mu), max(var, variance_floor), mult


def segment_loglik(
    series,
    breaks,
    *,
    variance_floor: float = 1e-12,
    n_minus_1_norm: bool = False,
) -> float:
    """Profiled Gaussian log-likelihood of a given segmentation."""
    x = _series_values(series)
    if len(x) == 0:
        raise ValueError("empty series")
    bounds = check_breaks(breaks, len(x)) + [len(x)]
    total = 0.0
    for s, e in zip(bounds, bounds[1:]):
        if e - s < 2:
            raise ValueError(f"segment [{s}, {e}) shorter than 2 positions")
        _, var, mult = _segment_stats(x[s:e], variance_floor, n_minus_1_norm)
        total += -mult * (1.0 + math.log(2.0 * math.pi * var))
    return float(total)


def _min_length_by_start(length: int, config: EpochSearchConfig, dates: list[date] | None) -> np.ndarray:
    """Minimum feasible segment length for each candidate start index.
    Entries larger than the remaining span mark starts that cannot open a
    segment at all."""
    big = length + 1
    if config.min_length is not None:
        ml = np.full(length + 1, max(2, config.min_length), dtype=np.int64)
        ml[length] = big
        return ml
    if dates is None:
        raise ValueError("calendar minimum epoch length needs per-position dates")
    if len(dates) != length:
        raise ValueError(f"need one date per series position ({length}), got {len(dates)}")
    t = np.array([d.toordinal() for d in dates], dtype=np.float64)
    if np.any(np.diff(t) < 0):
        raise ValueError("dates must be nondecreasing")
    # Smallest m such that dates[s + m - 1] lies min_years after dates[s].
    target = t + config.min_years * DAYS_PER_YEAR
    first_far = np.searchsorted(t, target, side="left")
    ml = np.where(first_far < length, first_far - np.arange(length) + 1, big)
    ml = np.maximum(ml, 2)
    return np.concatenate([ml, [big]]).astype(np.int64)


def _segment_score_table(
    x: np.ndarray, min_len: np.ndarray, variance_floor: float, n_minus_1_norm: bool
) -> np.ndarray:
    """(L+1) x (L+1) table: entry [a, b] is the segment [a, b) loglik, or
    -inf where the segment is infeasible. Series is centered first so the
    prefix-sum variance stays numerically tame."""
    length = len(x)
    c = x - x.mean()
    cs = np.concatenate([[0.0], np.cumsum(c)])
    css = np.concatenate([[0.0], np.cumsum(c * c)])
    a = np.arange(length + 1)
    m = a[None, :] - a[:, None]
    s = cs[None, :] - cs[:, None]
    ss = css[None, :] - css[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        if n_minus_1_norm:
            denom = m - 1.0
            mu = s / denom
            var = (ss - 2.0 * mu * s + m * mu * mu) / denom
            mult = denom / 2.0
        else:
            mu = s / m
            var = ss / m - mu * mu
            mult = m / 2.0
        var = np.maximum(var, variance_floor)
        table = -mult * (1.0 + np.log(2.0 * np.pi * var))
    table[m < min_len[:, None]] = -np.inf
    return table


def fit(series, n: int, config: EpochSearchConfig, dates: list[date] | None = None) -> EpochModel:
    """Globally optimal n-epoch segmentation under the minimum-length
    constraint. Suffix dynamic program over the segment score table with
    forward reconstruction, which makes ties resolve to the
    lexicographically smallest break vector."""
    x = _series_values(series)
    if len(x) == 0:
        raise ValueError("empty series")
    if n < 1:
        raise ValueError("n must be >= 1")
    length = len(x)
    min_len = _min_length_by_start(length, config, dates)
    if n == 1:  # no search needed, and no quadratic table for long series
        if length < min_len[0]:
            raise InputError(
                f"series of {length} positions is shorter than the minimum epoch length"
            )
        mu, var, _ = _segment_stats(x, config.variance_floor, config.n_minus_1_norm)
        ll = segment_loglik(
            x, [0], variance_floor=config.variance_floor, n_minus_1_norm=config.n_minus_1_norm
        )
        return EpochModel(
            breaks=(0,), means=(mu,), variances=(var,),
            log_likelihood=ll, n_params=2, aic=4.0 - 2.0 * ll,
        )
    table = _segment_score_table(x, min_len, config.variance_floor, config.n_minus_1_norm)

    # best[j][a]: top loglik splitting the suffix [a, L) into j segments.
    best = np.full((n + 1, length + 1), -np.inf)
    best[0, length] = 0.0
    for j in range(1, n + 1):
        best[j] = np.max(table + best[j - 1][None, :], axis=1)
    if not np.isfinite(best[n, 0]):
        raise InputError(
            f"series of {length} positions cannot hold {n} epochs at the configured minimum length"
        )

    breaks = [0]
    a = 0
    for j in range(n, 1, -1):
        cand = table[a] + best[j - 1]
        b = int(np.nonzero(cand == best[j, a])[0][0])
        breaks.append(b)
        a = b

    bounds = breaks + [length]
    means, variances = [], []
    for s, e in zip(bounds, bounds[1:]):
        mu, var, _ = _segment_stats(x[s:e], config.variance_floor, config.n_minus_1_norm)
        means.append(mu)
        variances.append(var)
    ll = segment_loglik(
        x, breaks, variance_floor=config.variance_floor, n_minus_1_norm=config.n_minus_1_norm
    )
    n_params = 3 * n - 1
    return EpochModel(
        breaks=tuple(breaks),
        means=tuple(means),
        variances=tuple(variances),
        log_likelihood=ll,
        n_params=n_params,
        aic=2.0 * n_params - 2.0 * ll,
    )


def select_n(
    series, config: EpochSearchConfig, dates: list[date] | None = None
) -> tuple[EpochModel, list[dict]]:
    """Fit n = 1..n_max and pick the AIC minimum (ties favor fewer epochs).

    Returns the chosen model and a table row per n with the parameter
    count, log-likelihood, AIC, likelihood relative to the AIC winner,
    and the log-likelihood gain over n - 1.
    """
    x = _series_values(series)
    models = [fit(x, n, config, dates) for n in range(1, config.n_max + 1)]
    aic_min = min(m.aic for m in models)
    best = next(m for m in models if m.aic == aic_min)
    table = []
    for i, m in enumerate(models):
        table.append(
            {
                "n": m.n,
                "n_params": m.n_params,
                "log_likelihood": m.log_likelihood,
                "aic": m.aic,
                "relative_likelihood": math.exp((aic_min - m.aic) / 2.0),
                "delta_loglik": None if i == 0 else m.log_likelihood - models[i - 1].log_likelihood,
                "breaks": list(m.breaks),
            }
        )
    return best, table


def break_to_date(model: EpochModel, records) -> list[tuple[int, date]]:
    """Map each break index to the read date of the volume at that index."""
    out = []
    for b in model.breaks:
        if not (0 <= b < len(records)):
            raise IndexError(f"break index {b} out of range for {len(records)} records")
        out.append((b, records[b].read_date))
    return out


def single_break_landscape(
    series, config: EpochSearchConfig, dates: list[date] | None = None
) -> np.ndarray:
    """Two-epoch log-likelihood as a function of the single break
    position; NaN where a position violates the minimum length. Index b
    holds the loglik of segments [0, b) and [b, L)."""
    x = _series_values(series)
    if len(x) == 0:
        raise ValueError("empty series")
    length = len(x)
    min_len = _min_length_by_start(length, config, dates)
    table = _segment_score_table(x, min_len, config.variance_floor, config.n_minus_1_norm)
    out = np.full(length + 1, np.nan)
    for b in range(1, length):
        v = table[0, b] + table[b, length]
        if np.isfinite(v):
            out[b] = v
    return out


def write_landscape_csv(path: Path | str, landscape: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["break_position", "log_likelihood"])
        for b, v in enumerate(landscape):
            if np.isfinite(v):
                w.writerow([b, repr(float(v))])


def write_epoch_report(
    path: Path | str,
    kind: str,
    series_input: str,
    best: EpochModel,
    table: list[dict],
    break_dates: list[tuple[int, date]] | None = None,
    relative_means: list[float] | None = None,
) -> None:
    payload = {
        "format_version": 1,
        "kind": kind,
        "series_input": series_input,  # "raw" | "relative"
        "selected_n": best.n,
        "breaks": list(best.breaks),
        "break_dates": (
            [[b, d.isoformat()] for b, d in break_dates] if break_dates is not None else None
        ),
        "segment_means": list(best.means),
        "segment_variances": list(best.variances),
        "segment_relative_means": relative_means,
        "log_likelihood": best.log_likelihood,
        "aic": best.aic,
        "aic_table": table,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")

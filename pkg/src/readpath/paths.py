"""Greedy low-surprise traversals and rank statistics of consecutive choices.

The divergence matrix is oriented for reading direction: ``m[i, j]`` is
the surprise of moving to document j immediately after document i, so a
greedy walk scans its current row for the smallest unvisited entry. The
matrix is generally asymmetric.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .surprise import _check_distributions


def divergence_matrix(thetas) -> np.ndarray:
    """D x D matrix with m[i, j] = KL(theta_j | theta_i) in bits and an
    exactly-zero diagonal."""
    t = _check_distributions(thetas)
    log_t = np.log2(t)
    negent = np.sum(t * log_t, axis=1)  # sum_x theta_j log2 theta_j
    m = negent[None, :] - log_t @ t.T  # [i, j]
    np.fill_diagonal(m, 0.0)
    return np.maximum(m, 0.0)


@dataclass(frozen=True)
class GreedyPath:
    order: tuple[int, ...]
    step_bits: np.ndarray  # one entry per move, len(order) - 1

    @property
    def mean_bits(self) -> float:
        return float(self.step_bits.mean()) if len(self.step_bits) else 0.0


def greedy_t2t_path(matrix, start_index: int = 0) -> GreedyPath:
    """Visit every document once, always moving to the unvisited document
    with the smallest divergence from the current one; ties break to the
    lowest index."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.size == 0:
        raise ValueError("empty matrix")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    d = m.shape[0]
    if not (0 <= start_index < d):
        raise ValueError(f"start_index {start_index} out of range")
    visited = np.zeros(d, dtype=bool)
    visited[start_index] = True
    order = [start_index]
    steps = np.empty(d - 1, dtype=np.float64)
    cur = start_index
    for s in range(d - 1):
        row = np.where(visited, np.inf, m[cur])
        nxt = int(np.argmin(row))  # argmin takes the first minimum: lowest index
        steps[s] = m[cur, nxt]
        visited[nxt] = True
        order.append(nxt)
        cur = nxt
    return GreedyPath(order=tuple(order), step_bits=steps)


def greedy_t2p_path(thetas, start_index: int = 0) -> GreedyPath:
    """Like the local greedy walk, but each step minimizes the divergence
    from the candidate to the running mean of everything visited so far."""
    t = _check_distributions(thetas)
    d = t.shape[0]
    if d == 0:
        raise ValueError("empty input")
    if not (0 <= start_index < d):
        raise ValueError(f"start_index {start_index} out of range")
    negent = np.sum(t * np.log2(t), axis=1)
    visited = np.zeros(d, dtype=bool)
    visited[start_index] = True
    order = [start_index]
    steps = np.empty(d - 1, dtype=np.float64)
    running = t[start_index].copy()
    for s in range(d - 1):
        past_mean = running / len(order)
        vals = negent - t @ np.log2(past_mean)
        vals = np.where(visited, np.inf, np.maximum(vals, 0.0))
        nxt = int(np.argmin(vals))
        steps[s] = vals[nxt]
        visited[nxt] = True
        order.append(nxt)
        running += t[nxt]
    return GreedyPath(order=tuple(order), step_bits=steps)


def _check_permutation(order, d: int) -> np.ndarray:
    o = np.asarray(order, dtype=np.int64)
    if o.shape != (d,) or not np.array_equal(np.sort(o), np.arange(d)):
        raise ValueError("order must be a permutation of 0..D-1")
    return o


def consecutive_ranks(matrix: np.ndarray, order) -> np.ndarray:
    """Rank of each consecutive move's divergence within its row (1 =
    nearest neighbor), excluding the self entry; equal divergences share
    the minimum (competition) rank."""
    m = np.asarray(matrix, dtype=np.float64)
    d = m.shape[0]
    o = _check_permutation(order, d)
    cur, nxt = o[:-1], o[1:]
    rows = m[cur]
    chosen = m[cur, nxt]
    less = (rows < chosen[:, None]).sum(axis=1)
    less -= (m[cur, cur] < chosen).astype(np.int64)  # self entry never competes
    return (less + 1).astype(np.int64)


@dataclass(frozen=True)
class RankDistribution:
    observed_ranks: np.ndarray
    bin_edges: np.ndarray  # powers of 2: [1, 2, 4, ...]
    observed_counts: np.ndarray
    null_counts: np.ndarray
    observed_props: np.ndarray
    null_props: np.ndarray
    ratio: np.ndarray  # observed/null per bin; nan where the null is empty
    ratio_low: np.ndarray  # 95% band from binomial (Clopper-Pearson) bounds
    ratio_high: np.ndarray


def rank_distribution(matrix, observed_order, null_orders) -> RankDistribution:
    """Log-binned rank histogram of the observed order against the null
    ensemble's orders, with per-bin observed/null ratios and 95% bands."""
    m = np.asarray(matrix, dtype=np.float64)
    d = m.shape[0]
    if d < 2:
        raise ValueError("need at least 2 documents")
    obs_ranks = consecutive_ranks(m, observed_order)
    null_orders = np.asarray(null_orders, dtype=np.int64)
    if null_orders.ndim != 2:
        raise ValueError("null_orders must be a 2-D array of permutations")
    null_ranks = np.concatenate([consecutive_ranks(m, o) for o in null_orders])

    # Every rank in [1, D-1] falls strictly inside [2^b, 2^(b+1)).
    n_bins = int(np.floor(np.log2(d - 1))) + 1
    edges = 2.0 ** np.arange(n_bins + 1)
    obs_counts, _ = np.histogram(obs_ranks, bins=edges)
    null_counts, _ = np.histogram(null_ranks, bins=edges)

    n_obs = len(obs_ranks)
    n_null = len(null_ranks)
    obs_props = obs_counts / n_obs
    null_props = null_counts / n_null

    lo = np.array([_beta_bound(c, n_obs, 0.025) for c in obs_counts])
    hi = np.array([_beta_bound(c, n_obs, 0.975) for c in obs_counts])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(null_props > 0, obs_props / null_props, np.nan)
        ratio_low = np.where(null_props > 0, lo / null_props, np.nan)
        ratio_high = np.where(null_props > 0, hi / null_props, np.nan)
    return RankDistribution(
        observed_ranks=obs_ranks,
        bin_edges=edges,
        observed_counts=obs_counts,
        null_counts=null_counts,
        observed_props=obs_props,
        null_props=null_props,
        ratio=ratio,
        ratio_low=ratio_low,
        ratio_high=ratio_high,
    )


def _beta_bound(count: int, n: int, q: float) -> float:
    """Clopper-Pearson binomial proportion bound."""
    if q < 0.5:
        return 0.0 if count == 0 else float(stats.beta.ppf(q, count, n - count + 1))
    return 1.0 if count == n else float(stats.beta.ppf(q, count + 1, n - count))


def write_path_csv(path: Path | str, gp: GreedyPath, doc_ids: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "doc_id", "step_bits"])
        w.writerow([0, doc_ids[gp.order[0]], ""])
        for s, idx in enumerate(gp.order[1:]):
            w.writerow([s + 1, doc_ids[idx], repr(float(gp.step_bits[s]))])


def write_matrix_csv(path: Path | str, matrix: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        d = matrix.shape[0]
        w.writerow(["row"] + [str(j) for j in range(d)])
        for i in range(d):
            w.writerow([i] + [repr(float(x)) for x in matrix[i]])


def write_rank_json(path: Path | str, rd: RankDistribution) -> None:
    def _clean(a):
        return [None if not np.isfinite(x) else float(x) for x in a]

    payload = {
        "format_version": 1,
        "bin_edges": [float(e) for e in rd.bin_edges],
        "observed_counts": [int(c) for c in rd.observed_counts],
        "null_counts": [int(c) for c in rd.null_counts],
        "observed_props": [float(p) for p in rd.observed_props],
        "null_props": [float(p) for p in rd.null_props],
        "ratio": _clean(rd.ratio),
        "ratio_low": _clean(rd.ratio_low),
        "ratio_high": _clean(rd.ratio_high),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def write_rank_csv(path: Path | str, rd: RankDistribution) -> None:
    def fmt(x):
        return "" if not np.isfinite(x) else repr(float(x))

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["bin_low", "bin_high", "observed_count", "null_count",
             "observed_prop", "null_prop", "ratio", "ratio_low", "ratio_high"]
        )
        for i in range(len(rd.observed_counts)):
            w.writerow(
                [
                    int(rd.bin_edges[i]),
                    int(rd.bin_edges[i + 1]),
                    int(rd.observed_counts[i]),
                    int(rd.null_counts[i]),
                    repr(float(rd.observed_props[i])),
                    repr(float(rd.null_props[i])),
                    fmt(rd.ratio[i]),
                    fmt(rd.ratio_low[i]),
                    fmt(rd.ratio_high[i]),
                ]
            )

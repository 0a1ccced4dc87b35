"""Publication-constrained null model and publication-order baseline.

The null holds the reading dates fixed and redraws which title was read
at each date, restricted to titles already published by that date (year
resolution: pub_year <= year of the slot's read date). Slots are filled
in ascending date order by a uniform choice over the feasible remaining
titles. Because the feasible sets are nested as slot years ascend, and
removing any feasible title shrinks every later slot's feasible count by
exactly one, the number of completions never depends on which feasible
title is chosen, so this sequential procedure is exactly uniform over
all valid permutations.

Sample j of an ensemble draws from its own PCG64 stream seeded by
(seed, j); serial and parallel evaluation therefore produce identical
ensembles.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError
from .surprise import (
    PUBLICATION_ORDER,
    SurpriseSeries,
    _check_distributions,
    _pairwise_values,
    _window_mean_values,
    kl_divergence,
)

ENSEMBLE_KINDS = ("T2T", "T2P")

# Stream tag for within-year shuffles, disjoint from per-sample tags (0..M-1).
_PUBORDER_STREAM = 2**62


@dataclass(frozen=True)
class NullConfig:
    samples: int = 1000
    seed: int = 0
    within_year_exact_threshold: int = 6
    within_year_samples: int = 100

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.within_year_exact_threshold < 1 or self.within_year_samples < 1:
            raise ValueError("within-year settings must be >= 1")


def _series_values(kind: str, thetas: np.ndarray) -> np.ndarray:
    if kind == "T2T":
        return _pairwise_values(thetas)
    if kind == "T2P":
        return _window_mean_values(thetas, None)
    raise ValueError(f"kind must be one of {ENSEMBLE_KINDS}, got {kind!r}")


class ConstrainedPermutationSampler:
    """Uniform sampler over date-feasible assignments of titles to slots.

    ``sample`` returns a permutation ``perm`` where ``perm[t]`` is the
    original index of the title assigned to reading slot t (slots in
    reading order).
    """

    def __init__(self, records):
        if not records:
            raise InputError("cannot sample permutations of an empty reading list")
        dates = [r.read_date for r in records]
        if any(b < a for a, b in zip(dates, dates[1:])):
            raise ValueError("records must be in reading order (nondecreasing dates)")
        self.n = len(records)
        self.slot_years = np.array([r.read_date.year for r in records], dtype=np.int64)
        self.pub_years = np.array([r.pub_year for r in records], dtype=np.int64)
        # Titles enter the candidate pool in (pub_year, index) order.
        self.arrival_order = np.lexsort((np.arange(self.n), self.pub_years))
        sorted_pub = self.pub_years[self.arrival_order]
        self.available_by_slot = np.searchsorted(sorted_pub, self.slot_years, side="right")
        infeasible = np.nonzero(self.available_by_slot < np.arange(1, self.n + 1))[0]
        if len(infeasible):
            t = int(infeasible[0])
            raise InputError(
                f"infeasible reading list: slot {t} (year {self.slot_years[t]}) has only "
                f"{self.available_by_slot[t]} feasible titles for {t + 1} slots"
            )

    def sample_batch(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` independent permutations using ``rng``."""
        u = rng.random((count, self.n)).tolist()  # plain floats: the loop is hot
        out = np.empty((count, self.n), dtype=np.int64)
        arrival = self.arrival_order.tolist()
        avail = self.available_by_slot.tolist()
        for s in range(count):
            us = u[s]
            row = out[s]
            pool: list[int] = []
            ptr = 0
            for t in range(self.n):
                stop = avail[t]
                while ptr < stop:
                    pool.append(arrival[ptr])
                    ptr += 1
                m = len(pool)
                j = int(us[t] * m)
                if j >= m:  # guards the u ~ 1.0 rounding edge
                    j = m - 1
                row[t] = pool[j]
                pool[j] = pool[-1]
                pool.pop()
        return out

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_batch(rng, 1)[0]

    def check(self, perm: np.ndarray) -> None:
        if np.any(self.pub_years[perm] > self.slot_years):
            raise AssertionError("sampled permutation violates the publication constraint")


def sample_constrained_permutation(records, rng: np.random.Generator) -> np.ndarray:
    """One uniform draw over valid title-to-slot assignments."""
    return ConstrainedPermutationSampler(records).sample(rng)


def _sample_rng(seed: int, j: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, j))))


def null_permutations(records, config: NullConfig) -> np.ndarray:
    """The ensemble's M permutations; sample j comes from stream (seed, j),
    so any later consumer regenerates exactly the ensemble's orders."""
    sampler = ConstrainedPermutationSampler(records)
    out = np.empty((config.samples, sampler.n), dtype=np.int64)
    for j in range(config.samples):
        out[j] = sampler.sample(_sample_rng(config.seed, j))
    return out


@dataclass(frozen=True)
class NullEnsemble:
    """Null statistics for one surprise kind over M constrained permutations."""

    kind: str
    position_mean: np.ndarray  # length D-1
    position_std: np.ndarray  # length D-1
    sample_aggregates: np.ndarray  # length M
    observed_aggregate: float
    p_value: float

    def __post_init__(self):
        if self.kind not in ENSEMBLE_KINDS:
            raise ValueError(f"kind must be one of {ENSEMBLE_KINDS}")
        if not (0.0 <= self.p_value <= 1.0):
            raise ValueError("p-value out of [0, 1]")

    @property
    def samples(self) -> int:
        return len(self.sample_aggregates)

    @property
    def aggregate_mean(self) -> float:
        return float(self.sample_aggregates.mean())

    @property
    def aggregate_std(self) -> float:
        return float(self.sample_aggregates.std())

    def aggregate_quantiles(self, qs=(0.025, 0.975)) -> list[float]:
        return [float(x) for x in np.quantile(self.sample_aggregates, qs)]


def build_null(thetas, records, kind: str, config: NullConfig, threads: int = 1) -> NullEnsemble:
    """Sample M constrained permutations, evaluate the surprise series of
    each, and reduce to per-position and aggregate null statistics.

    The one-sided empirical p-value tests for below-null surprise:
    (#{samples with aggregate <= observed} + 1) / (M + 1).
    """
    thetas = _check_distributions(thetas)
    if thetas.shape[0] != len(records):
        raise ValueError("thetas and records must align")
    if thetas.shape[0] < 2:
        raise ValueError("need at least 2 documents")
    if kind not in ENSEMBLE_KINDS:
        raise ValueError(f"kind must be one of {ENSEMBLE_KINDS}, got {kind!r}")
    sampler = ConstrainedPermutationSampler(records)
    m, d = config.samples, thetas.shape[0]
    values = np.empty((m, d - 1), dtype=np.float64)

    def fill(lo: int, hi: int) -> None:
        for j in range(lo, hi):
            perm = sampler.sample(_sample_rng(config.seed, j))
            sampler.check(perm)
            values[j] = _series_values(kind, thetas[perm])

    if threads > 1 and m > 1:
        from concurrent.futures import ThreadPoolExecutor

        bounds = np.linspace(0, m, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda ab: fill(*ab), zip(bounds[:-1], bounds[1:])))
    else:
        fill(0, m)

    observed = float(_series_values(kind, thetas).mean())
    aggregates = values.mean(axis=1)
    p = (int(np.count_nonzero(aggregates <= observed)) + 1) / (m + 1)
    return NullEnsemble(
        kind=kind,
        position_mean=values.mean(axis=0),
        position_std=values.std(axis=0),
        sample_aggregates=aggregates,
        observed_aggregate=observed,
        p_value=p,
    )


def _year_groups(records) -> list[list[int]]:
    """Document indices grouped by publication year, each group in a
    canonical (pub_year, reading-order) sort."""
    order = sorted(range(len(records)), key=lambda i: (records[i].pub_year, records[i].read_seq))
    groups: list[list[int]] = []
    for i in order:
        if groups and records[groups[-1][-1]].pub_year == records[i].pub_year:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _exact_within_year_values(thetas: np.ndarray, groups: list[list[int]], kind: str) -> np.ndarray:
    """Per-position expectation over the product of all within-year orders.

    Positions inside a year group depend only on that group's order; the
    only cross-group term is the local (T2T) value at a group boundary,
    whose expectation factorizes into a uniform pair average because the
    last element of one group and the first of the next are independent
    and uniform under uniform within-group orders.
    """
    d = thetas.shape[0]
    vals = np.zeros(d - 1)
    prefix = np.zeros(thetas.shape[1])
    n_before = 0
    pos = 0
    prev_group: list[int] | None = None
    for g in groups:
        m = len(g)
        acc = np.zeros(m)
        n_perms = 0
        for perm in itertools.permutations(g):
            n_perms += 1
            running = prefix.copy()
            nb = n_before
            for r, doc in enumerate(perm):
                q = thetas[doc]
                if kind == "T2P":
                    if nb > 0:
                        acc[r] += kl_divergence(q, running / nb)
                elif r >= 1:
                    acc[r] += kl_divergence(q, thetas[perm[r - 1]])
                running += q
                nb += 1
        acc /= n_perms
        if kind == "T2T" and prev_group is not None:
            acc[0] = float(
                np.mean([kl_divergence(thetas[b], thetas[a]) for a in prev_group for b in g])
            )
        for r in range(m):
            gp = pos + r
            if gp >= 1:
                vals[gp - 1] = acc[r]
        prefix += thetas[g].sum(axis=0)
        n_before += m
        pos += m
        prev_group = g
    return vals


def publication_order_series(thetas, records, kind: str, config: NullConfig) -> SurpriseSeries:
    """Surprise along publication order, averaged over within-year tie
    orders: exactly (per-group enumeration) when every tie group is at
    most ``within_year_exact_threshold`` documents, otherwise over
    ``within_year_samples`` Monte Carlo shuffles. Positions are ordinal.
    """
    thetas = _check_distributions(thetas)
    if len(records) == 0:
        raise ValueError("empty corpus")
    if thetas.shape[0] != len(records):
        raise ValueError("thetas and records must align")
    if thetas.shape[0] < 2:
        raise ValueError("need at least 2 documents")
    if kind not in ENSEMBLE_KINDS:
        raise ValueError(f"kind must be one of {ENSEMBLE_KINDS}, got {kind!r}")

    groups = _year_groups(records)
    if all(len(g) <= config.within_year_exact_threshold for g in groups):
        vals = _exact_within_year_values(thetas, groups, kind)
    else:
        rng = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((config.seed, _PUBORDER_STREAM)))
        )
        acc = np.zeros(thetas.shape[0] - 1)
        for _ in range(config.within_year_samples):
            order = np.concatenate([rng.permutation(g) for g in groups])
            acc += _series_values(kind, thetas[order])
        vals = acc / config.within_year_samples
    return SurpriseSeries(kind=kind, values=vals, ordering=PUBLICATION_ORDER)


def publication_order_ids(records) -> list[int]:
    """Canonical representative order (pub_year, then reading order);
    within-year averaging makes per-position documents representative
    only, which series metadata should note."""
    return [i for g in _year_groups(records) for i in g]


def write_ensemble_json(path: Path | str, ens: NullEnsemble, config: NullConfig) -> None:
    lo, hi = ens.aggregate_quantiles()
    payload = {
        "format_version": 1,
        "kind": ens.kind,
        "config": {
            "samples": config.samples,
            "seed": config.seed,
            "within_year_exact_threshold": config.within_year_exact_threshold,
            "within_year_samples": config.within_year_samples,
        },
        "observed_aggregate_bits": ens.observed_aggregate,
        "null_aggregate_mean_bits": ens.aggregate_mean,
        "null_aggregate_std_bits": ens.aggregate_std,
        "null_aggregate_q025_bits": lo,
        "null_aggregate_q975_bits": hi,
        "p_value_below_null": ens.p_value,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def write_ensemble_csv(path: Path | str, ens: NullEnsemble) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["position", "null_mean_bits", "null_std_bits"])
        for j in range(len(ens.position_mean)):
            w.writerow([j + 1, repr(float(ens.position_mean[j])), repr(float(ens.position_std[j]))])

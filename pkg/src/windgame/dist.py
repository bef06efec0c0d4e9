"""Binned empirical joint and conditional distributions with sparse-bin merging.

Tables keep the raw member values of every cell, so sampling reproduces
observed values rather than bin midpoints. Sparse bins are folded into their
nearest better-populated neighbour until every retained bin holds at least
``min_count`` observations, which is what makes the sampled chain ergodic;
connectivity of the nonempty cells is checked, not silently repaired.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import DistributionError, ErgodicityError
from .ingest import JointSeries


@dataclass(frozen=True)
class BinSpec:
    """Uniform binning of one variable: [origin, max_edge) in steps of width.

    The closing edge is inclusive: a value exactly at ``max_edge`` falls into
    the last bin.
    """

    width: float
    origin: float
    max_edge: float

    def __post_init__(self):
        if self.width <= 0.0:
            raise DistributionError(f"bin width must be positive, got {self.width}")
        if self.max_edge <= self.origin:
            raise DistributionError(f"max_edge {self.max_edge} must exceed origin {self.origin}")

    @property
    def n_bins(self) -> int:
        return int(math.ceil((self.max_edge - self.origin) / self.width))

    @classmethod
    def covering(cls, lo: float, hi: float, width: float) -> "BinSpec":
        """Smallest spec with the given width whose bins cover [lo, hi]."""
        origin = math.floor(lo / width) * width
        n = max(1, int(math.ceil((hi - origin) / width)))
        while origin + n * width < hi:
            n += 1
        return cls(width=width, origin=origin, max_edge=origin + n * width)

    def index(self, value: float) -> int:
        if value < self.origin or value > self.max_edge:
            raise DistributionError(
                f"value {value} outside binned range [{self.origin}, {self.max_edge}]")
        return min(int((value - self.origin) / self.width), self.n_bins - 1)

    def indices(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        bad = (values < self.origin) | (values > self.max_edge)
        if np.any(bad):
            offender = float(values[bad][0])
            raise DistributionError(
                f"value {offender} outside binned range [{self.origin}, {self.max_edge}]")
        idx = ((values - self.origin) / self.width).astype(np.int64)
        return np.minimum(idx, self.n_bins - 1)


@dataclass(frozen=True)
class DiscreteDistribution:
    """A finite distribution over observed values."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if support.size == 0:
            raise DistributionError("distribution support is empty")
        if support.shape != weights.shape:
            raise DistributionError("support and weights must align 1:1")
        if np.any(weights < 0.0):
            raise DistributionError("weights must be nonnegative")
        total = float(weights.sum())
        if abs(total - 1.0) > 1e-12:
            raise DistributionError(f"weights sum to {total}, expected 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", weights)

    def sample(self, rng: np.random.Generator) -> float:
        cdf = np.cumsum(self.weights)
        return float(self.support[np.searchsorted(cdf, rng.random(), side="right")])

    def mean(self) -> float:
        return float(np.dot(self.support, self.weights))


def _merge_groups(marginals: np.ndarray, min_count: int) -> np.ndarray:
    """Fold sparse bins into neighbours until all groups hold >= min_count.

    Each round merges the single sparsest group (ties to the lowest index)
    into its better-populated adjacent group; edge groups fold inward, and a
    neighbour tie folds toward the lower index. Empty bins are absorbed the
    same way, so every original bin maps to a populated group. Returns the
    original-bin -> group assignment.
    """
    sums = [int(c) for c in marginals]
    groups: list[list[int]] = [[i] for i in range(len(sums))]
    while len(groups) > 1:
        k = min(range(len(sums)), key=lambda i: (sums[i], i))
        if sums[k] >= min_count:
            break
        if k == 0:
            target = 1
        elif k == len(groups) - 1:
            target = k - 1
        else:
            target = k - 1 if sums[k - 1] >= sums[k + 1] else k + 1
        lo, hi = min(k, target), max(k, target)
        groups[lo] = groups[lo] + groups[hi]
        sums[lo] = sums[lo] + sums[hi]
        del groups[hi]
        del sums[hi]
    if sums[0] < min_count and len(groups) == 1:
        raise DistributionError(
            f"cannot reach min_count={min_count} with only {sums[0]} observations")
    assignment = np.empty(len(marginals), dtype=np.int64)
    for g, members in enumerate(groups):
        for m in members:
            assignment[m] = g
    return assignment


@dataclass(frozen=True)
class JointTable:
    """Binned empirical joint distribution of the two wind-speed series.

    ``counts`` is indexed by retained (merged) bins; ``merged_map_*`` take an
    original bin index to its retained bin. Raw per-record values plus their
    retained bin indices are kept so conditional slices emit observed values.
    """

    spec1: BinSpec
    spec2: BinSpec
    counts: np.ndarray
    merged_map_1: np.ndarray
    merged_map_2: np.ndarray
    w1_values: np.ndarray = field(repr=False)
    w2_values: np.ndarray = field(repr=False)
    row_of: np.ndarray = field(repr=False)
    col_of: np.ndarray = field(repr=False)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_rows(self) -> int:
        return self.counts.shape[0]

    @property
    def n_cols(self) -> int:
        return self.counts.shape[1]

    def row_index(self, w1: float) -> int:
        """Retained row bin for a raw w1 value."""
        return int(self.merged_map_1[self.spec1.index(w1)])

    def col_index(self, w2: float) -> int:
        """Retained column bin for a raw w2 value."""
        return int(self.merged_map_2[self.spec2.index(w2)])

    @cached_property
    def row_records(self) -> list[np.ndarray]:
        """Record indices grouped by retained row."""
        order = np.argsort(self.row_of, kind="stable")
        return [order[self.row_of[order] == i] for i in range(self.n_rows)]

    @cached_property
    def col_records(self) -> list[np.ndarray]:
        """Record indices grouped by retained column."""
        order = np.argsort(self.col_of, kind="stable")
        return [order[self.col_of[order] == j] for j in range(self.n_cols)]


def build_joint_wind_table(series: JointSeries, spec1: BinSpec, spec2: BinSpec) -> JointTable:
    """Histogram the (w1, w2) pairs of a joint series onto a 2-D grid.

    Every observation must fall inside the specs' ranges; the raw member
    values of each cell are retained for sampling.
    """
    rows = spec1.indices(series.w1)
    cols = spec2.indices(series.w2)
    counts = np.zeros((spec1.n_bins, spec2.n_bins), dtype=np.int64)
    np.add.at(counts, (rows, cols), 1)
    return JointTable(
        spec1=spec1, spec2=spec2, counts=counts,
        merged_map_1=np.arange(spec1.n_bins, dtype=np.int64),
        merged_map_2=np.arange(spec2.n_bins, dtype=np.int64),
        w1_values=np.asarray(series.w1, dtype=np.float64),
        w2_values=np.asarray(series.w2, dtype=np.float64),
        row_of=rows, col_of=cols)


def merge_sparse_bins(table: JointTable, min_count: int) -> JointTable:
    """Fold sparse bins along both axes until marginals reach ``min_count``.

    Merging preserves the total count and records the original-bin to
    retained-bin assignment. Row merges cannot change column marginals, so
    the two axes are folded independently.
    """
    if min_count < 1:
        raise DistributionError(f"min_count must be >= 1, got {min_count}")
    if min_count > table.total:
        raise DistributionError(
            f"min_count={min_count} exceeds total observation count {table.total}")

    assign1 = _merge_groups(table.counts.sum(axis=1), min_count)
    assign2 = _merge_groups(table.counts.sum(axis=0), min_count)

    row_of = assign1[table.row_of]
    col_of = assign2[table.col_of]
    n_rows = int(assign1.max()) + 1
    n_cols = int(assign2.max()) + 1
    counts = np.zeros((n_rows, n_cols), dtype=np.int64)
    np.add.at(counts, (row_of, col_of), 1)

    return JointTable(
        spec1=table.spec1, spec2=table.spec2, counts=counts,
        merged_map_1=assign1[table.merged_map_1],
        merged_map_2=assign2[table.merged_map_2],
        w1_values=table.w1_values, w2_values=table.w2_values,
        row_of=row_of, col_of=col_of)


def _aggregate(values: np.ndarray) -> DiscreteDistribution:
    support, counts = np.unique(values, return_counts=True)
    return DiscreteDistribution(support=support, weights=counts / counts.sum())


def conditional_slice(table: JointTable, axis: int, given_bin: int) -> DiscreteDistribution:
    """Conditional distribution of one wind variable given the other's bin.

    ``axis`` names the conditioning variable (1 = w1 fixed, sample w2;
    2 = w2 fixed, sample w1); ``given_bin`` is a retained bin of that axis.
    Weights are proportional to record counts over raw member values.
    """
    if axis == 1:
        if not 0 <= given_bin < table.n_rows:
            raise DistributionError(f"row bin {given_bin} out of range 0..{table.n_rows - 1}")
        members = table.row_records[given_bin]
        values = table.w2_values
    elif axis == 2:
        if not 0 <= given_bin < table.n_cols:
            raise DistributionError(f"column bin {given_bin} out of range 0..{table.n_cols - 1}")
        members = table.col_records[given_bin]
        values = table.w1_values
    else:
        raise DistributionError(f"axis must be 1 or 2, got {axis}")
    if len(members) == 0:
        raise ErgodicityError(
            f"empty conditional slice at axis {axis}, bin {given_bin}; "
            f"this should be impossible after sparse-bin merging")
    return _aggregate(values[members])


@dataclass(frozen=True)
class DemandConditional:
    """Demand distribution conditioned on the binned mean of the two winds.

    Rows are retained mean-wind bins after the same sparse-merge policy as
    the joint table, applied along the mean-wind axis; every original
    mean-wind bin maps to a populated retained row, so any mean value the
    sampler can produce resolves to a nonempty demand slice.
    """

    mean_spec: BinSpec
    demand_spec: BinSpec
    counts: np.ndarray
    merged_map: np.ndarray
    demand_values: np.ndarray = field(repr=False)
    row_of: np.ndarray = field(repr=False)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def n_rows(self) -> int:
        return self.counts.shape[0]

    def row_for_mean(self, mean_wind: float) -> int:
        return int(self.merged_map[self.mean_spec.index(mean_wind)])

    @cached_property
    def row_records(self) -> list[np.ndarray]:
        order = np.argsort(self.row_of, kind="stable")
        return [order[self.row_of[order] == i] for i in range(self.n_rows)]

    def demand_slice(self, row: int) -> DiscreteDistribution:
        """Distribution over raw demand values for one retained mean-wind row."""
        if not 0 <= row < self.n_rows:
            raise DistributionError(f"mean-wind row {row} out of range 0..{self.n_rows - 1}")
        members = self.row_records[row]
        if len(members) == 0:
            raise ErgodicityError(f"empty demand slice at mean-wind row {row}")
        return _aggregate(self.demand_values[members])


def build_demand_conditional(series: JointSeries, mean_spec: BinSpec,
                             demand_spec: BinSpec, min_count: int = 10) -> DemandConditional:
    """Bin demand against mean wind, then fold sparse mean-wind rows.

    The mean-wind spec must cover every mean the sampler can produce, i.e.
    [(min w1 + min w2) / 2, (max w1 + max w2) / 2]: resampling the winds
    independently within bins can pair values never observed together.
    """
    safe_lo = (float(series.w1.min()) + float(series.w2.min())) / 2.0
    safe_hi = (float(series.w1.max()) + float(series.w2.max())) / 2.0
    if mean_spec.origin > safe_lo or mean_spec.max_edge < safe_hi:
        raise DistributionError(
            f"mean-wind spec [{mean_spec.origin}, {mean_spec.max_edge}] does not cover "
            f"the reachable mean range [{safe_lo}, {safe_hi}]; "
            f"use BinSpec.covering({safe_lo}, {safe_hi}, width)")

    means = (series.w1 + series.w2) / 2.0
    raw_rows = mean_spec.indices(means)
    demand_cols = demand_spec.indices(series.p_d)

    marginals = np.bincount(raw_rows, minlength=mean_spec.n_bins)
    if min_count < 1:
        raise DistributionError(f"min_count must be >= 1, got {min_count}")
    if min_count > len(series):
        raise DistributionError(
            f"min_count={min_count} exceeds total observation count {len(series)}")
    assign = _merge_groups(marginals, min_count)

    row_of = assign[raw_rows]
    counts = np.zeros((int(assign.max()) + 1, demand_spec.n_bins), dtype=np.int64)
    np.add.at(counts, (row_of, demand_cols), 1)

    return DemandConditional(
        mean_spec=mean_spec, demand_spec=demand_spec, counts=counts,
        merged_map=assign,
        demand_values=np.asarray(series.p_d, dtype=np.float64),
        row_of=row_of)


def count_cell_components(table: JointTable) -> int:
    """Connected components of the bipartite graph of nonempty cells.

    Rows and columns are nodes; a nonempty cell is an edge. One component
    means the chain can reach every retained state from any start.
    """
    n_rows, n_cols = table.counts.shape
    visited_rows = np.zeros(n_rows, dtype=bool)
    visited_cols = np.zeros(n_cols, dtype=bool)
    components = 0
    for start in range(n_rows):
        if visited_rows[start] or not table.counts[start].any():
            continue
        components += 1
        stack_rows = [start]
        visited_rows[start] = True
        while stack_rows:
            row = stack_rows.pop()
            for col in np.nonzero(table.counts[row])[0]:
                if not visited_cols[col]:
                    visited_cols[col] = True
                    for nxt in np.nonzero(table.counts[:, col])[0]:
                        if not visited_rows[nxt]:
                            visited_rows[nxt] = True
                            stack_rows.append(int(nxt))
    return components


def assert_ergodic(table: JointTable) -> None:
    """Raise :class:`ErgodicityError` unless the nonempty cells are connected."""
    components = count_cell_components(table)
    if components != 1:
        raise ErgodicityError(
            f"joint table splits into {components} disconnected blocks; the chain "
            f"cannot visit all states. Increase min_count or the bin width.")


def dump_joint_csv(table: JointTable, path: str | Path) -> None:
    """Write (bin_i, bin_j, count) triples for nonempty cells."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin_i", "bin_j", "count"])
        for i, j in zip(*np.nonzero(table.counts)):
            writer.writerow([int(i), int(j), int(table.counts[i, j])])


def dump_merged_map_csv(table: JointTable, path: str | Path) -> None:
    """Write original-bin to retained-bin pairs for both axes."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["axis", "original_bin", "retained_bin"])
        for axis, mapping in ((1, table.merged_map_1), (2, table.merged_map_2)):
            for orig, kept in enumerate(mapping):
                writer.writerow([axis, orig, int(kept)])

"""Experimental design: full factorial, D-optimal fraction, blocking, sizing.

The D-criterion uses a main-effects model matrix in effects coding (one
column per non-reference level, the reference level coded -1 across its
attribute's columns, plus an intercept).  Candidate rows are exchanged
one at a time (Fedorov) using the rank-two determinant update, restarted
from several seeded random subsets.

Blocking splits the fraction into equal blocks while keeping each
attribute level's per-block frequency close to its share of the whole
fraction, via seeded restarts and pairwise-swap hill climbing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .model import AttributeSpec, ChoiceTask


class DesignError(ValueError):
    """A design request that cannot be satisfied (infeasible or malformed)."""


@dataclass(frozen=True)
class DesignTable:
    """Profile rows (attribute values in spec order) plus model matrix."""

    attributes: tuple[AttributeSpec, ...]
    rows: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if len(set(self.rows)) != len(self.rows):
            raise DesignError("design rows must be unique")
        for row in self.rows:
            if len(row) != len(self.attributes):
                raise DesignError(
                    f"row width {len(row)} != {len(self.attributes)} attributes")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def level_indices(self) -> np.ndarray:
        """(n, n_attrs) integer matrix of level positions per attribute."""
        idx = np.empty((len(self.rows), len(self.attributes)), dtype=np.int64)
        for a, spec in enumerate(self.attributes):
            lookup = {lvl: i for i, lvl in enumerate(spec.levels)}
            for r, row in enumerate(self.rows):
                if row[a] not in lookup:
                    raise DesignError(
                        f"value {row[a]} is not a level of attribute {spec.name}")
                idx[r, a] = lookup[row[a]]
        return idx

    @property
    def model_matrix(self) -> np.ndarray:
        """Intercept + effects-coded main effects, one row per profile."""
        idx = self.level_indices
        cols = [np.ones((len(self.rows), 1))]
        for a, spec in enumerate(self.attributes):
            m = spec.n_levels
            block = np.zeros((len(self.rows), m - 1))
            for j in range(m - 1):
                block[:, j] = (idx[:, a] == j).astype(float)
            block[idx[:, a] == m - 1, :] = -1.0
            cols.append(block)
        return np.hstack(cols)


def enumerate_full_factorial(specs: Sequence[AttributeSpec]) -> DesignTable:
    """Every level combination exactly once, in lexicographic spec order."""
    if not specs:
        raise DesignError("at least one attribute spec is required")
    rows = tuple(product(*(spec.levels for spec in specs)))
    return DesignTable(tuple(specs), rows)


def normalized_log_det(table: DesignTable) -> float:
    """log det of the normalized information matrix X'X / n."""
    x = table.model_matrix
    sign, logdet = np.linalg.slogdet(x.T @ x / table.n_rows)
    return logdet if sign > 0 else -math.inf


def _exchange_deltas(dinv: np.ndarray, x_in: np.ndarray,
                     x_cand: np.ndarray) -> np.ndarray:
    """det growth factor minus one for every (drop row i, add row j) pair.

    det(D') / det(D) = 1 + d_j - d_i - (d_i d_j - d_ij^2).
    """
    di = np.einsum("ip,pq,iq->i", x_in, dinv, x_in)
    dj = np.einsum("jp,pq,jq->j", x_cand, dinv, x_cand)
    dij = x_in @ dinv @ x_cand.T
    return dj[None, :] - di[:, None] - (di[:, None] * dj[None, :] - dij ** 2)


def _fedorov_exchange(full_x: np.ndarray, selected: np.ndarray,
                      max_iter: int) -> tuple[np.ndarray, list[float]]:
    """Monotone single-row exchange from an initial selection.

    Returns the improved selection (row indices into ``full_x``) and the
    log-det trace across accepted exchanges.
    """
    n = full_x.shape[0]
    selected = np.array(sorted(selected), dtype=np.int64)
    in_design = np.zeros(n, dtype=bool)
    in_design[selected] = True

    def logdet_of(idx):
        sign, val = np.linalg.slogdet(full_x[idx].T @ full_x[idx])
        return val if sign > 0 else -math.inf

    current = logdet_of(selected)
    trace = [current]
    for _ in range(max_iter):
        x_in = full_x[selected]
        dinv = np.linalg.inv(x_in.T @ x_in)
        cand = np.nonzero(~in_design)[0]
        deltas = _exchange_deltas(dinv, x_in, full_x[cand])
        i, j = np.unravel_index(np.argmax(deltas), deltas.shape)
        if deltas[i, j] <= 1e-10:
            break
        in_design[selected[i]] = False
        in_design[cand[j]] = True
        selected[i] = cand[j]
        selected.sort()
        current += math.log1p(deltas[i, j])
        trace.append(current)
    return selected, trace


def select_d_optimal(full: DesignTable, k: int, seed: int = 0,
                     max_iter: int = 200, n_restarts: int = 10) -> DesignTable:
    """Best k-row fraction found by restarted Fedorov exchange."""
    x = full.model_matrix
    n, p = x.shape
    if k < p:
        raise DesignError(
            f"cannot build a k={k} design: the model matrix has {p} columns")
    if k > n:
        raise DesignError(f"k={k} exceeds the {n} candidate rows")
    if k == n:
        return full

    best_idx: Optional[np.ndarray] = None
    best_logdet = -math.inf
    for restart in range(n_restarts):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(restart,)))
        start = None
        for _ in range(50):
            trial = rng.choice(n, size=k, replace=False)
            sign, _ = np.linalg.slogdet(x[trial].T @ x[trial])
            if sign > 0:
                start = trial
                break
        if start is None:
            continue
        idx, trace = _fedorov_exchange(x, start, max_iter)
        if trace[-1] > best_logdet + 1e-12:
            best_logdet = trace[-1]
            best_idx = idx
    if best_idx is None:
        raise DesignError("no non-singular starting design found")
    return DesignTable(full.attributes, tuple(full.rows[i] for i in sorted(best_idx)))


@dataclass(frozen=True)
class BlockSet:
    """Partition of a fraction into equal, level-balanced blocks."""

    fraction: DesignTable
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        flat = [i for block in self.blocks for i in block]
        if sorted(flat) != list(range(self.fraction.n_rows)):
            raise DesignError("blocks must partition the fraction's rows")
        sizes = {len(b) for b in self.blocks}
        if len(sizes) > 1:
            raise DesignError(f"blocks must have equal sizes, got {sorted(sizes)}")

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def to_choice_tasks(self) -> list[ChoiceTask]:
        """Render blocks as ChoiceTask rows (block_id and task_id are 1-based)."""
        by_name = {spec.name: a for a, spec in enumerate(self.fraction.attributes)}
        required = {"cs_cost", "cs_time", "cs_co2", "cs_flex", "cc_cost", "cc_time"}
        missing = required - set(by_name)
        if missing:
            raise DesignError(f"attributes missing for choice tasks: {sorted(missing)}")
        tasks = []
        for b, block in enumerate(self.blocks, start=1):
            for t, row_idx in enumerate(block, start=1):
                row = self.fraction.rows[row_idx]
                tasks.append(ChoiceTask(
                    block_id=b, task_id=t,
                    cs_cost=row[by_name["cs_cost"]],
                    cs_time=row[by_name["cs_time"]],
                    cs_co2=int(row[by_name["cs_co2"]]),
                    cs_flex=int(row[by_name["cs_flex"]]),
                    cc_cost=row[by_name["cc_cost"]],
                    cc_time=row[by_name["cc_time"]]))
        return tasks


class _BlockBalancer:
    """Per-block level counts with O(attributes) swap evaluation.

    Counts live in an (attrs, blocks, max_levels) array padded with zeros;
    padded cells have zero target so they never affect the objective.
    """

    def __init__(self, level_idx: np.ndarray, assignment: np.ndarray, n_blocks: int):
        self.level_idx = level_idx
        self.assignment = assignment
        n, n_attrs = level_idx.shape
        max_levels = int(level_idx.max()) + 1
        self.counts = np.zeros((n_attrs, n_blocks, max_levels))
        self._attr_range = np.arange(n_attrs)
        for i in range(n):
            self.counts[self._attr_range, assignment[i], level_idx[i]] += 1.0
        self.target = self.counts.sum(axis=1, keepdims=True) / n_blocks

    def objective(self) -> tuple[float, float]:
        dev = np.abs(self.counts - self.target)
        return float(dev.max()), float((dev ** 2).sum())

    def _move(self, i: int, j: int, sign: float) -> None:
        bi, bj = self.assignment[i], self.assignment[j]
        self.counts[self._attr_range, bi, self.level_idx[i]] -= sign
        self.counts[self._attr_range, bi, self.level_idx[j]] += sign
        self.counts[self._attr_range, bj, self.level_idx[j]] -= sign
        self.counts[self._attr_range, bj, self.level_idx[i]] += sign

    def try_swap(self, i: int, j: int, score: tuple[float, float]) -> bool:
        """Swap rows i and j if it strictly improves the objective."""
        self._move(i, j, 1.0)
        trial = self.objective()
        if trial < score:
            self.assignment[i], self.assignment[j] = self.assignment[j], self.assignment[i]
            return True
        self._move(i, j, -1.0)
        return False


def partition_blocks(fraction: DesignTable, n_blocks: int, seed: int = 0,
                     n_restarts: int = 4, max_sweeps: int = 40) -> BlockSet:
    """Split the fraction into equal blocks balancing level frequencies."""
    n = fraction.n_rows
    if n_blocks < 1 or n % n_blocks != 0:
        raise DesignError(f"{n} rows cannot be split into {n_blocks} equal blocks")
    if n_blocks == 1:
        return BlockSet(fraction, (tuple(range(n)),))
    size = n // n_blocks
    level_idx = fraction.level_indices

    best_assign = None
    best_score = (math.inf, math.inf)
    for restart in range(n_restarts):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(restart,)))
        order = rng.permutation(n)
        assignment = np.empty(n, dtype=np.int64)
        assignment[order] = np.repeat(np.arange(n_blocks), size)
        state = _BlockBalancer(level_idx, assignment, n_blocks)
        score = state.objective()
        for _ in range(max_sweeps):
            improved = False
            for i in range(n):
                for j in range(i + 1, n):
                    if assignment[i] == assignment[j]:
                        continue
                    if state.try_swap(i, j, score):
                        score = state.objective()
                        improved = True
            if not improved:
                break
        if score < best_score:
            best_score = score
            best_assign = assignment.copy()
        if best_score[0] <= 1.0 and restart >= 0:
            break

    blocks = tuple(tuple(int(i) for i in np.nonzero(best_assign == b)[0])
                   for b in range(n_blocks))
    return BlockSet(fraction, blocks)


def orme_minimum_sample(c: int, t: int, a: int) -> int:
    """Minimum respondents: ceil(500 c / (t a)) for c max levels, t tasks,
    a analyzable alternatives per task."""
    for name, v in (("c", c), ("t", t), ("a", a)):
        if int(v) != v or v < 1:
            raise DesignError(f"{name} must be a positive integer, got {v!r}")
    c, t, a = int(c), int(t), int(a)
    return -(-500 * c // (t * a))

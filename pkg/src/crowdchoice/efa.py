"""Exploratory factor analysis of the attitude statements.

Pipeline: Pearson correlation of the Likert scores, principal-component
extraction keeping factors with eigenvalue >= 1 (boundary kept), Kaiser-
normalized varimax rotation, pruning of loadings below |0.4| (boundary
kept), and mapping factors to their surviving statements.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import permutations
from typing import Optional, Sequence

import numpy as np

from .model import STATEMENTS, ValidationError


class DegenerateInputError(ValueError):
    """Input cannot support the analysis (e.g. a constant column)."""


@dataclass(frozen=True)
class FactorSolution:
    """Eigen spectrum plus retained-factor loadings and communalities."""

    eigenvalues: tuple[float, ...]
    n_retained: int
    loadings: np.ndarray      # W x F
    communalities: np.ndarray  # length W

    def __post_init__(self):
        if any(self.eigenvalues[i] < self.eigenvalues[i + 1]
               for i in range(len(self.eigenvalues) - 1)):
            raise ValidationError("eigenvalues must be sorted descending")
        if self.loadings.shape != (len(self.eigenvalues), self.n_retained):
            raise ValidationError(
                f"loadings shape {self.loadings.shape} does not match "
                f"W={len(self.eigenvalues)}, F={self.n_retained}")
        if np.any(self.communalities < -1e-9) or np.any(self.communalities > 1 + 1e-9):
            raise ValidationError("communalities must lie in [0, 1]")


def pearson_correlation(scores: np.ndarray,
                        statements: Optional[Sequence[str]] = None) -> np.ndarray:
    """Correlation matrix of an N x W score matrix.

    A zero-variance column is an error naming the offending statement.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[0] < 2:
        raise DegenerateInputError(
            f"need a 2-D matrix with at least 2 rows, got shape {scores.shape}")
    n, w = scores.shape
    names = list(statements) if statements is not None else [
        f"column {i + 1}" for i in range(w)]
    if len(names) != w:
        raise ValidationError(f"{len(names)} names for {w} columns")
    variances = scores.var(axis=0)
    for i, v in enumerate(variances):
        if v == 0:
            raise DegenerateInputError(
                f"{names[i]} is constant; its correlations are undefined")
    corr = np.corrcoef(scores, rowvar=False)
    np.fill_diagonal(corr, 1.0)
    return np.clip(corr, -1.0, 1.0)


def _fix_column_signs(loadings: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    out = loadings.copy()
    for j in range(out.shape[1]):
        k = int(np.argmax(np.abs(out[:, j])))
        if out[k, j] < 0:
            out[:, j] = -out[:, j]
    return out


def extract_principal_factors(corr: np.ndarray,
                              kaiser_threshold: float = 1.0) -> FactorSolution:
    """Principal-component extraction with the Kaiser retention rule."""
    corr = np.asarray(corr, dtype=np.float64)
    w = corr.shape[0]
    if corr.shape != (w, w) or not np.allclose(corr, corr.T, atol=1e-10):
        raise ValidationError("correlation matrix must be square and symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-8):
        raise ValidationError("correlation matrix must have a unit diagonal")
    eigvals, eigvecs = np.linalg.eigh(corr)
    if eigvals[0] < -1e-10:
        raise ValidationError(
            f"correlation matrix is not positive semi-definite (min eigenvalue {eigvals[0]:.3e})")
    order = np.argsort(-eigvals)
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    retained = eigvals >= kaiser_threshold - 1e-12
    n_retained = int(retained.sum())
    loadings = eigvecs[:, :n_retained] * np.sqrt(np.maximum(eigvals[:n_retained], 0.0))
    loadings = _fix_column_signs(loadings)
    communalities = (loadings ** 2).sum(axis=1)
    return FactorSolution(tuple(float(v) for v in eigvals), n_retained,
                          loadings, communalities)


def varimax_criterion(loadings: np.ndarray) -> float:
    """Sum over factors of the variance of squared loadings."""
    sq = np.asarray(loadings) ** 2
    w = sq.shape[0]
    return float((sq ** 2).sum(axis=0).sum() / w - ((sq.sum(axis=0) / w) ** 2).sum())


def rotate_varimax(loadings: np.ndarray, tol: float = 1e-8,
                   max_iter: int = 1000,
                   _sweep_trace: Optional[list] = None) -> np.ndarray:
    """Kaiser-normalized varimax rotation (orthogonal, pairwise sweeps).

    Rows are scaled to unit communality before rotation and scaled back
    after, so each row's sum of squared loadings is preserved.  Every
    planar rotation maximizes the criterion exactly within its column
    pair, so the criterion never decreases across sweeps.  Columns of the
    result are sign-fixed and ordered by explained variance.
    """
    loadings = np.asarray(loadings, dtype=np.float64)
    w, f = loadings.shape
    if f < 1:
        raise ValidationError("need at least one factor to rotate")
    if f == 1:
        return _fix_column_signs(loadings)

    h = np.sqrt((loadings ** 2).sum(axis=1))
    scale = np.where(h > 0, h, 1.0)
    x = loadings / scale[:, None]

    converged = False
    criterion = varimax_criterion(x)
    for _ in range(max_iter):
        for p in range(f - 1):
            for q in range(p + 1, f):
                lp, lq = x[:, p].copy(), x[:, q].copy()
                u = lp ** 2 - lq ** 2
                v = 2.0 * lp * lq
                a, b = u.sum(), v.sum()
                num = 2.0 * (u * v).sum() - 2.0 * a * b / w
                den = (u ** 2 - v ** 2).sum() - (a * a - b * b) / w
                phi = 0.25 * np.arctan2(num, den)
                if abs(phi) < 1e-14:
                    continue
                cp, sp = np.cos(phi), np.sin(phi)
                x[:, p] = cp * lp + sp * lq
                x[:, q] = -sp * lp + cp * lq
        new_criterion = varimax_criterion(x)
        if _sweep_trace is not None:
            _sweep_trace.append(new_criterion)
        if new_criterion - criterion <= tol * max(1.0, abs(new_criterion)):
            converged = True
            break
        criterion = new_criterion
    if not converged:
        warnings.warn(f"varimax did not converge in {max_iter} sweeps; "
                      "returning the best iterate", RuntimeWarning, stacklevel=2)

    rotated = x * scale[:, None]
    rotated = _fix_column_signs(rotated)
    order = np.argsort(-(rotated ** 2).sum(axis=0), kind="stable")
    return rotated[:, order]


@dataclass(frozen=True)
class PrunedLoadings:
    """Rotated loadings with sub-cutoff entries blanked (None)."""

    statements: tuple[str, ...]
    loadings: tuple[tuple[Optional[float], ...], ...]  # W rows x F factors
    cutoff: float

    @property
    def n_factors(self) -> int:
        return len(self.loadings[0]) if self.loadings else 0


def prune_loadings(rotated: np.ndarray, cutoff: float = 0.4,
                   statements: Optional[Sequence[str]] = None) -> PrunedLoadings:
    """Blank loadings with absolute value strictly below the cutoff."""
    rotated = np.asarray(rotated, dtype=np.float64)
    w = rotated.shape[0]
    if statements is None:
        if w != len(STATEMENTS):
            raise ValidationError(
                f"statement names required for a {w}-row table")
        statements = STATEMENTS
    if len(statements) != w:
        raise ValidationError(f"{len(statements)} names for {w} rows")
    table = tuple(
        tuple(float(v) if abs(v) >= cutoff else None for v in row)
        for row in rotated)
    return PrunedLoadings(tuple(statements), table, cutoff)


def indicators_for_factor(table: PrunedLoadings, factor_id: int,
                          excluded: Sequence[str] = ()) -> list[str]:
    """Statements loading on a (1-based) factor, minus exclusions."""
    if not 1 <= factor_id <= table.n_factors:
        raise ValidationError(
            f"factor {factor_id} does not exist; table has {table.n_factors}")
    drop = set(excluded)
    return [name for name, row in zip(table.statements, table.loadings)
            if row[factor_id - 1] is not None and name not in drop]


# --- factor matching (used by recovery checks) --------------------------------

def tucker_congruence(a: np.ndarray, b: np.ndarray) -> float:
    """Congruence coefficient between two loading vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0:
        raise ValidationError("cannot compare zero loading vectors")
    return float(a @ b / denom)


def congruence_after_matching(estimated: np.ndarray,
                              reference: np.ndarray) -> np.ndarray:
    """Best per-factor |congruence| over column permutations and signs.

    Columns of ``estimated`` are permuted to maximize the total match with
    ``reference``; returns the matched factors' absolute congruences in
    reference column order.
    """
    estimated = np.asarray(estimated, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if estimated.shape != reference.shape:
        raise ValidationError(
            f"shape mismatch: {estimated.shape} vs {reference.shape}")
    f = reference.shape[1]
    cross = np.zeros((f, f))
    for i in range(f):
        for j in range(f):
            cross[i, j] = abs(tucker_congruence(estimated[:, i], reference[:, j]))
    best_perm = None
    best_total = -np.inf
    for perm in permutations(range(f)):
        total = sum(cross[perm[j], j] for j in range(f))
        if total > best_total:
            best_total = total
            best_perm = perm
    return np.array([cross[best_perm[j], j] for j in range(f)])


def analyze_likert(scores: np.ndarray,
                   statements: Optional[Sequence[str]] = None,
                   kaiser_threshold: float = 1.0,
                   cutoff: float = 0.4) -> dict:
    """Full pipeline returning a JSON-ready report."""
    scores = np.asarray(scores, dtype=np.float64)
    if statements is None:
        statements = STATEMENTS if scores.shape[1] == len(STATEMENTS) else [
            f"column {i + 1}" for i in range(scores.shape[1])]
    corr = pearson_correlation(scores, statements)
    solution = extract_principal_factors(corr, kaiser_threshold)
    rotated = rotate_varimax(solution.loadings)
    pruned = prune_loadings(rotated, cutoff, statements)
    factor_map = {
        f"Factor {k}": indicators_for_factor(pruned, k)
        for k in range(1, pruned.n_factors + 1)}
    return {
        "eigenvalues": list(solution.eigenvalues),
        "n_retained": solution.n_retained,
        "communalities": {name: float(c) for name, c
                          in zip(statements, solution.communalities)},
        "rotated_loadings": {name: [float(v) for v in row] for name, row
                             in zip(statements, rotated)},
        "pruned_loadings": {name: list(row) for name, row
                            in zip(statements, pruned.loadings)},
        "factor_indicators": factor_map,
        "kaiser_threshold": kaiser_threshold,
        "cutoff": cutoff,
    }

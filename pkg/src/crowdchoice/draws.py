"""Simulation draws: Halton and pseudo-random standard-normal matrices.

Each respondent gets R rows by 2 columns of standard normals: column 0
feeds the latent-variable structural noise, column 1 the agent (panel)
effect.  Draw blocks are assigned by respondent rank in sorted-id order,
so estimates do not depend on file order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .model import DrawConfig

HALTON_BASES = (2, 3)
HALTON_SKIP = 10


def halton_sequence(base: int, start: int, count: int) -> np.ndarray:
    """Radical-inverse (van der Corput) points for 1-based indices.

    Index 1 maps to 1/base, so ``halton_sequence(2, 1, 3)`` is
    [1/2, 1/4, 3/4].
    """
    indices = np.arange(start, start + count, dtype=np.int64)
    values = np.zeros(count, dtype=np.float64)
    denom = np.float64(base)
    while indices.any():
        indices, digits = np.divmod(indices, base)
        values += digits / denom
        denom *= base
    return values


@dataclass(frozen=True)
class DrawMatrix:
    """Standard-normal draws, shape (n_respondents, R, 2)."""

    values: np.ndarray
    config: DrawConfig

    def __post_init__(self):
        if self.values.ndim != 3 or self.values.shape[2] != 2:
            raise ValueError(f"expected (n, R, 2) draws, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("draws must be finite")

    @property
    def n_respondents(self) -> int:
        return self.values.shape[0]

    @property
    def n_draws(self) -> int:
        return self.values.shape[1]

    def for_respondent(self, rank: int) -> np.ndarray:
        """R x 2 block for the respondent at the given sorted-id rank."""
        return self.values[rank]


def generate_draws(config: DrawConfig, n_respondents: int) -> DrawMatrix:
    """Draw matrix for a dataset; identical for identical configs.

    The Halton scheme uses bases 2 and 3, skips the first 10 points of the
    raw sequence, and maps to normals by the inverse CDF.  The pseudo
    scheme uses a seeded generator.
    """
    if n_respondents < 0:
        raise ValueError("n_respondents must be >= 0")
    total = n_respondents * config.n_draws
    if config.scheme == "halton":
        uniform = np.stack(
            [halton_sequence(base, HALTON_SKIP + 1, total) for base in HALTON_BASES],
            axis=1,
        )
        normals = ndtri(uniform)
    else:
        rng = np.random.default_rng(config.seed)
        normals = rng.standard_normal((total, 2))
    return DrawMatrix(
        values=normals.reshape(n_respondents, config.n_draws, 2),
        config=config,
    )

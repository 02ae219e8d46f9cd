"""Resampling schemes that turn centered residuals into bootstrap innovations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidSpecError

KINDS = ("iid", "wild", "bwb", "bb")
WEIGHT_LAWS = ("rademacher", "normal")
BLOCK_RULES = ("H", "1.5H")


@dataclass(frozen=True)
class ResampleScheme:
    """How bootstrap innovations are drawn.

    Attributes
    ----------
    kind : {"iid", "wild", "bwb", "bb"}
        Draw with replacement, wild, block wild, or moving blocks.
    block_length : int
        Block length for "bwb" and "bb"; ignored otherwise.
    weight_law : {"rademacher", "normal"}
        Distribution of the wild weights.
    """

    kind: str = "bwb"
    block_length: int = 1
    weight_law: str = "rademacher"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown resampling scheme {self.kind!r}; choose from {KINDS}")
        if self.weight_law not in WEIGHT_LAWS:
            raise InvalidSpecError(f"unknown weight law {self.weight_law!r}; choose from {WEIGHT_LAWS}")
        if int(self.block_length) != self.block_length or self.block_length < 1:
            raise InvalidSpecError(f"block_length must be a positive integer, got {self.block_length!r}")


def default_block_length(H: int, rule: str = "H") -> int:
    """Block length tied to the horizon: H or floor(1.5 H), at least 1."""
    if rule == "H":
        return max(1, int(H))
    if rule == "1.5H":
        return max(1, int(math.floor(1.5 * H)))
    raise InvalidSpecError(f"unknown block rule {rule!r}; choose from {BLOCK_RULES}")


def draw_weights(n: int, law: str, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. weights with mean 0 and variance 1."""
    if law == "rademacher":
        return rng.integers(0, 2, size=n).astype(float) * 2.0 - 1.0
    if law == "normal":
        return rng.standard_normal(n)
    raise InvalidSpecError(f"unknown weight law {law!r}")


def block_weights(L: int, block_length: int, law: str, rng: np.random.Generator) -> np.ndarray:
    """Per-observation weights, constant over consecutive blocks; the last block may be short."""
    n_blocks = -(-L // block_length)
    return np.repeat(draw_weights(n_blocks, law, rng), block_length)[:L]


def draw_innovations(residuals, L: int, scheme: ResampleScheme, rng: np.random.Generator) -> np.ndarray:
    """Draw ``L`` bootstrap innovations from centered residuals.

    Wild schemes reuse residuals in order, wrapping around cyclically when
    ``L`` exceeds their count, and multiply them by random weights. The
    "wild" scheme is "bwb" with blocks of length one and consumes the
    generator identically.

    Parameters
    ----------
    residuals : array_like
        ``(n,)`` or ``(n, m)`` centered residuals; rows are resampled jointly.
    L : int
    scheme : ResampleScheme
    rng : numpy.random.Generator

    Returns
    -------
    ndarray
        ``(L,)`` or ``(L, m)``.
    """
    e = np.asarray(residuals, dtype=float)
    n = e.shape[0] if e.ndim else 0
    if n == 0:
        raise InvalidInputError("no residuals to resample")
    if L < 0:
        raise InvalidInputError("L must be non-negative")
    kind = scheme.kind
    if kind == "iid":
        return e[rng.integers(0, n, size=L)]
    if kind in ("wild", "bwb"):
        l = 1 if kind == "wild" else scheme.block_length
        w = block_weights(L, l, scheme.weight_law, rng)
        cyc = e[np.arange(L) % n]
        return cyc * (w if e.ndim == 1 else w[:, None])
    # moving blocks
    l = min(scheme.block_length, n)
    n_blocks = -(-L // l)
    starts = rng.integers(0, n - l + 1, size=n_blocks)
    idx = (starts[:, None] + np.arange(l)).ravel()[:L]
    return e[idx]

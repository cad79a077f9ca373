"""Memory-footprint model for the compression schemes.

Footprints count stored matrix elements, not bits.  A raw rows x cols image
stores rows*cols values; a direct rank-k encoding stores the two factors,
k*(rows+cols) values; a patched encoding at patch size p and rank khat stores
khat*(p^2 + rows*cols/p^2) values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

FOOTPRINT_KINDS = ("raw", "direct", "patched")


def _check_patch_count(rows, cols, p):
    # planning arithmetic needs only an integral patch count; encoding itself
    # additionally requires p to divide each dimension (enforced by reorder)
    if p < 1:
        raise ValueError(f"patch size must be positive, got {p}")
    if (rows * cols) % (p * p):
        raise ValueError(
            f"patch size {p} infeasible: {p}^2 does not divide {rows}*{cols}"
        )


def per_rank_footprint(p: int, rows: int, cols: int) -> int:
    """Elements stored per unit rank by the patched encoding: p^2 + rows*cols/p^2."""
    _check_patch_count(rows, cols, p)
    return p * p + (rows * cols) // (p * p)


def footprint(kind: str, rows: int, cols: int, k: int = 0, khat: int = 0, p: int = 0) -> int:
    """Exact element count of one representation ("raw", "direct" or "patched")."""
    if kind == "raw":
        return rows * cols
    if kind == "direct":
        if k < 1:
            raise ValueError(f"rank must be positive, got {k}")
        return k * (rows + cols)
    if kind == "patched":
        if khat < 1:
            raise ValueError(f"rank must be positive, got {khat}")
        return khat * per_rank_footprint(p, rows, cols)
    raise ValueError(f"unknown footprint kind {kind!r}; choose from {FOOTPRINT_KINDS}")


@dataclass(frozen=True)
class FootprintReport:
    """Element counts of all three representations for one parameter choice."""

    rows: int
    cols: int
    k: int
    khat: int
    p: int
    footprint_raw: int
    footprint_direct: int
    footprint_patched: int


def footprint_report(rows: int, cols: int, k: int, khat: int, p: int) -> FootprintReport:
    return FootprintReport(
        rows, cols, k, khat, p,
        footprint("raw", rows, cols),
        footprint("direct", rows, cols, k=k),
        footprint("patched", rows, cols, khat=khat, p=p),
    )


def optimal_patch_size(rows: int, cols: int) -> tuple[float, float]:
    """Real-valued minimizer of the per-rank footprint and its minimum value.

    The per-rank footprint p^2 + rows*cols/p^2 is minimized at
    p = (rows*cols)^(1/4) where it equals 2*sqrt(rows*cols).  Callers round
    the first component to a feasible divisor.
    """
    if rows < 1 or cols < 1:
        raise ValueError("dimensions must be positive")
    area = rows * cols
    return area ** 0.25, 2.0 * math.sqrt(area)


def feasible_patch_sizes(rows: int, cols: int) -> list[int]:
    """All patch sizes dividing both dimensions, ascending."""
    g = math.gcd(rows, cols)
    return [d for d in range(1, g + 1) if g % d == 0]


def best_patch_size(rows: int, cols: int) -> int:
    """Feasible patch size with the smallest per-rank footprint (ties: smaller p).

    The per-rank footprint is unimodal in p, so this is the feasible divisor
    closest to (rows*cols)^(1/4) in log scale.
    """
    return min(feasible_patch_sizes(rows, cols),
               key=lambda p: (per_rank_footprint(p, rows, cols), p))


def select_khat(rows: int, cols: int, p: int, k: int) -> int:
    """Largest patched rank whose footprint fits the direct rank-k budget.

    Returns floor(k*(rows+cols) / (p^2 + rows*cols/p^2)), clamped to the
    maximal rank of the patch-column matrix.  A return of 0 means the budget
    admits no rank at all and the configuration should be skipped.
    """
    _check_patch_count(rows, cols, p)
    if k < 1:
        raise ValueError(f"rank must be positive, got {k}")
    khat = (k * (rows + cols)) // per_rank_footprint(p, rows, cols)
    return min(khat, p * p, (rows * cols) // (p * p))


class FootprintInequality(NamedTuple):
    lhs: float
    rhs: float
    holds: bool
    equality: bool


def check_footprint_inequality(rows: int, cols: int, k: int, khat: int) -> FootprintInequality:
    """Compare the patched footprint at the ideal real-valued patch size
    against the rank-scaled direct budget.

    lhs = 2*khat*sqrt(rows*cols) and rhs = (khat/k)*k*(rows+cols) =
    khat*(rows+cols).  By the AM-GM inequality lhs <= rhs always, with
    equality exactly when rows == cols.
    """
    if min(rows, cols, k, khat) < 1:
        raise ValueError("all arguments must be positive")
    lhs = 2.0 * khat * math.sqrt(rows * cols)
    rhs = float(khat * (rows + cols))
    return FootprintInequality(lhs, rhs, lhs <= rhs, lhs == rhs)

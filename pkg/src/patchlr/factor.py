"""Rank-k matrix factorizations: truncated SVD and multiplicative-update NMF.

Both backends produce a pair (W, H) with W holding k columns and H holding k
rows, so W @ H is the rank-k approximation of the input.  SVD truncation is
Frobenius-optimal; NMF constrains both factors to be nonnegative and is fit
by the classical multiplicative update iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rmx

BACKENDS = ("svd", "nmf")

# trace entries may rise by at most this much per step before the
# factorization is considered invalid
TRACE_TOLERANCE = 1e-10

_FACTOR_SIDECAR = "factor.txt"
_W_FILE = "w.rmx"
_H_FILE = "h.rmx"


@dataclass(frozen=True, eq=False)
class Factorization:
    """A rank-k approximation W @ H of some matrix.

    objective_trace holds the Frobenius error after every NMF iteration and
    is empty for SVD.  final_error is the Frobenius error of W @ H against
    the input at the time of factorization.
    """

    w: np.ndarray
    h: np.ndarray
    rank: int
    backend: str
    objective_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    final_error: float = 0.0
    rank_deficient: bool = False

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")
        w = np.asarray(self.w, dtype=np.float64)
        h = np.asarray(self.h, dtype=np.float64)
        if w.ndim != 2 or h.ndim != 2:
            raise ValueError("factors must be 2-D matrices")
        if w.shape[1] != self.rank or h.shape[0] != self.rank:
            raise ValueError(
                f"factor shapes {w.shape}, {h.shape} do not match rank {self.rank}"
            )
        if self.backend == "nmf":
            if w.size and w.min() < 0 or h.size and h.min() < 0:
                raise ValueError("nmf factors must be entrywise nonnegative")
        trace = np.asarray(self.objective_trace, dtype=np.float64)
        if trace.size > 1 and np.any(np.diff(trace) > TRACE_TOLERANCE):
            raise ValueError("objective trace increases beyond tolerance")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "objective_trace", trace)

    def reconstruct(self) -> np.ndarray:
        return self.w @ self.h


@dataclass(frozen=True)
class NmfConfig:
    """Knobs for the multiplicative-update NMF solver."""

    max_iters: int = 500
    rel_tol: float = 1e-5
    seed: int = 0
    epsilon_guard: float = 1e-12

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if not self.epsilon_guard > 0:
            raise ValueError(f"epsilon_guard must be positive, got {self.epsilon_guard}")


def _check_rank(a, k):
    n, m = a.shape
    if not 1 <= k <= min(n, m):
        raise ValueError(f"rank {k} outside [1, {min(n, m)}] for a {n}x{m} matrix")


def _thin_svd(a):
    """Dense thin SVD; strongly rectangular inputs go through a QR step first.

    Reducing a wide/tall matrix to its square triangular factor before the
    SVD is backward stable and substantially faster than a direct
    decomposition when one dimension dominates.
    """
    n, m = a.shape
    if m > 2 * n:
        q, r = np.linalg.qr(a.T)          # a = r.T @ q.T
        u, s, vt = np.linalg.svd(r.T, full_matrices=False)
        return u, s, (q @ vt.T).T
    if n > 2 * m:
        q, r = np.linalg.qr(a)            # a = q @ r
        u, s, vt = np.linalg.svd(r, full_matrices=False)
        return q @ u, s, vt
    return np.linalg.svd(a, full_matrices=False)


def svd_truncate(a: np.ndarray, k: int) -> Factorization:
    """Frobenius-optimal rank-k factorization via truncated SVD.

    W gets the leading k left singular vectors scaled by their singular
    values and H the matching right singular vectors transposed.  If the
    numerical rank of the input falls short of k, the surplus columns of W
    and rows of H are zeroed and the result is flagged rank-deficient.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("input must be a 2-D matrix")
    _check_rank(a, k)
    u, s, vt = _thin_svd(a)
    tol = s[0] * max(a.shape) * np.finfo(np.float64).eps if s.size else 0.0
    effective = min(k, int(np.count_nonzero(s > tol)))
    s_used = s[:k].copy()
    s_used[effective:] = 0.0
    w = u[:, :k] * s_used
    h = vt[:k].copy()
    h[effective:] = 0.0
    final_error = float(np.sqrt(np.sum(s[k:] ** 2)))
    return Factorization(w, h, k, "svd", final_error=final_error,
                         rank_deficient=effective < k)


def nmf_factor(a: np.ndarray, k: int, cfg: NmfConfig | None = None) -> Factorization:
    """Nonnegative rank-k factorization by multiplicative updates.

    Starting from seeded uniform (0, 1] factors, each iteration rescales
        H <- H * (W'A) / (W'WH + eps)
        W <- W * (AH') / (WHH' + eps)
    which keeps both factors nonnegative and never increases the Frobenius
    error.  Iteration stops at max_iters or once the relative error
    improvement drops below rel_tol.  Deterministic given cfg.seed.
    """
    cfg = cfg or NmfConfig()
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("input must be a 2-D matrix")
    if a.size and a.min() < 0:
        raise ValueError("nmf input must be entrywise nonnegative")
    _check_rank(a, k)
    n, m = a.shape
    rng = np.random.default_rng(cfg.seed)
    # 1 - random() lies in (0, 1]: strictly positive init avoids absorbing zeros
    w = 1.0 - rng.random((n, k))
    h = 1.0 - rng.random((k, m))
    eps = cfg.epsilon_guard
    trace = []
    prev = None
    for _ in range(cfg.max_iters):
        h *= (w.T @ a) / ((w.T @ w) @ h + eps)
        w *= (a @ h.T) / (w @ (h @ h.T) + eps)
        err = float(np.linalg.norm(a - w @ h))
        trace.append(err)
        if prev is not None:
            if prev <= 0.0 or (prev - err) / prev < cfg.rel_tol:
                break
        prev = err
    return Factorization(w, h, k, "nmf", objective_trace=np.array(trace),
                         final_error=trace[-1])


def write_factorization(fact: Factorization, directory) -> None:
    """Store a factorization as two raw matrices plus a one-line text sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / _W_FILE).write_bytes(rmx.pack_matrix(fact.w, 0, *fact.w.shape))
    (directory / _H_FILE).write_bytes(rmx.pack_matrix(fact.h, 0, *fact.h.shape))
    iters = int(fact.objective_trace.size)
    line = (f"backend={fact.backend} rank={fact.rank} iters={iters} "
            f"final_error={fact.final_error!r}\n")
    (directory / _FACTOR_SIDECAR).write_text(line, encoding="ascii")


def read_factorization(directory) -> Factorization:
    """Load a factorization written by write_factorization.

    The iteration trace is not persisted; only its length and the final error
    survive the round trip via the sidecar.
    """
    directory = Path(directory)
    w, _ = rmx.unpack_matrix((directory / _W_FILE).read_bytes())
    h, _ = rmx.unpack_matrix((directory / _H_FILE).read_bytes())
    fields = dict(item.split("=", 1)
                  for item in (directory / _FACTOR_SIDECAR).read_text().split())
    backend = fields["backend"]
    rank = int(fields["rank"])
    return Factorization(w, h, rank, backend, final_error=float(fields["final_error"]))

"""Time-coupled diffusion: products of per-time operators and their SVD.

A :class:`ChainOperator` holds ``(P_1, ..., P_t)`` and represents the product
``P^(t) = P_t ... P_1`` without forming it. Acting on column vectors the
product applies ``P_1`` first; acting on row vectors (distributions) it
applies ``P_t^T`` first.

The embedding comes from the singular value decomposition of
``A = Pi^{1/2} P^(t) Pi^{-1/2}`` where ``Pi`` is the diagonal matrix of the
stationary distribution of ``P^(t)``. ``A`` has operator norm one, attained
at ``pi^{1/2}``, and the rows of ``Pi^{-1/2} U S`` reproduce the
``1/pi``-weighted L2 distances between posterior rows of ``P^(t)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    NoConvergenceError,
    NonPositiveEntryError,
    RankDeficientWarning,
    TooLargeError,
)
from .kernels import DiffusionOperator

__all__ = [
    "ChainOperator", "SpectralDecomposition", "stationary_distribution", "decompose",
    "embedding", "tc_distance", "tc_distance_matrix", "materialize", "pairwise_distances",
    "DENSE_LIMIT", "STATIONARY_TOL", "STATIONARY_MAX_ITERS", "SVD_TOL", "SVD_MAX_ITERS",
    "SVD_OVERSAMPLE",
]

DENSE_LIMIT = 4096
STATIONARY_TOL = 1e-12
STATIONARY_MAX_ITERS = 100_000
MIN_STATIONARY = 1e-30
SVD_TOL = 1e-9
SVD_MAX_ITERS = 20_000
SVD_OVERSAMPLE = 4
START_SEED = 20_170_601


class ChainOperator:
    """Ordered sequence of diffusion operators over the same ``n`` points."""

    def __init__(self, operators: Sequence[DiffusionOperator]):
        ops = tuple(operators)
        if not ops:
            raise ValueError("a chain needs at least one operator")
        n = ops[0].n
        for i, op in enumerate(ops, start=1):
            if op.n != n:
                raise DimensionMismatchError(f"operator {i} has n={op.n}, expected {n}")
            if op.time_index != i:
                raise ValueError(f"operator at position {i} has time_index {op.time_index}")
        self._ops = ops

    @classmethod
    def from_matrices(cls, matrices) -> "ChainOperator":
        return cls([DiffusionOperator.from_matrix(w, i) for i, w in enumerate(matrices, start=1)])

    @property
    def operators(self):
        return self._ops

    @property
    def n(self) -> int:
        return self._ops[0].n

    @property
    def t(self) -> int:
        return len(self._ops)

    def __len__(self):
        return len(self._ops)

    def prefix(self, t: int) -> "ChainOperator":
        """The chain ``(P_1, ..., P_t)``."""
        if not 1 <= t <= self.t:
            raise ValueError(f"prefix length {t} outside 1..{self.t}")
        return ChainOperator(self._ops[:t])

    def _check(self, v):
        v = np.asarray(v)
        if v.dtype.kind not in "fc":
            v = v.astype(float)
        if v.shape[0] != self.n:
            raise DimensionMismatchError(f"vector of length {v.shape[0]} for an operator of size {self.n}")
        if not np.all(np.isfinite(v)):
            raise ValueError("input vector must be finite")
        return v

    def apply(self, f: np.ndarray) -> np.ndarray:
        """``P^(t) f``: apply ``P_1``, then ``P_2``, ... Accepts vectors or ``(n, b)`` blocks."""
        out = self._check(f)
        for op in self._ops:
            out = op.matvec(out)
        return np.asarray(out)

    def apply_transpose(self, mu: np.ndarray) -> np.ndarray:
        """``(P^(t))^T mu``: apply ``P_t^T``, then ``P_{t-1}^T``, ..."""
        out = self._check(mu)
        for op in reversed(self._ops):
            out = op.rmatvec(out)
        return np.asarray(out)


def materialize(chain: ChainOperator, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense ``P_t ... P_1``."""
    if chain.n > dense_limit:
        raise TooLargeError(f"n={chain.n} exceeds the dense limit {dense_limit}")
    return chain.apply(np.eye(chain.n))


def stationary_distribution(chain: ChainOperator, tol: float = STATIONARY_TOL,
                            max_iters: int = STATIONARY_MAX_ITERS, return_info: bool = False):
    """Left fixed vector of ``P^(t)`` by power iteration from the uniform distribution.

    Convergence is measured by the l1 residual ``|pi^T P^(t) - pi^T|_1``.
    """
    n = chain.n
    pi = np.full(n, 1.0 / n)
    residual = np.inf
    for it in range(1, max_iters + 1):
        nxt = chain.apply_transpose(pi)
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual < tol:
            break
    else:
        raise NoConvergenceError(
            f"stationary distribution residual {residual:.3g} after {max_iters} iterations",
            residual, max_iters)
    if pi.min() < MIN_STATIONARY:
        raise NonPositiveEntryError(
            f"stationary distribution has entry {pi.min():.3g}; the chain is effectively disconnected")
    if return_info:
        return pi, {"iterations": it, "residual": residual}
    return pi


@dataclass
class SpectralDecomposition:
    """Leading singular triplets of ``A = Pi^{1/2} P^(t) Pi^{-1/2}``.

    ``left_vectors`` and ``right_vectors`` are ``(n, rank)`` with orthonormal
    columns; ``embedding`` is ``Pi^{-1/2} U S`` with its constant first column
    dropped.
    """

    stationary: np.ndarray
    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    rank_deficient: bool = False
    info: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return self.singular_values.size

    @property
    def embedding(self) -> np.ndarray:
        return embedding(self)

    def full_map(self) -> np.ndarray:
        """``Pi^{-1/2} U S`` including the constant column."""
        return self.left_vectors * self.singular_values / np.sqrt(self.stationary)[:, None]


def _orth(z):
    q, _ = np.linalg.qr(z)
    return q


def _canonical_signs(u, v):
    """Make each left vector's largest-magnitude entry positive; flip ``v`` with it."""
    idx = np.argmax(np.abs(u), axis=0)
    s = np.sign(u[idx, np.arange(u.shape[1])])
    s[s == 0] = 1.0
    return u * s, v * s


def _tie_order(sigma, u, rtol=1e-12):
    """Descending order of ``sigma``; equal values ordered lexicographically by ``u`` columns."""
    order = list(np.argsort(-sigma, kind="stable"))
    out, i = [], 0
    while i < len(order):
        j = i + 1
        while j < len(order) and abs(sigma[order[j]] - sigma[order[i]]) <= rtol * max(sigma[order[i]], 1e-300):
            j += 1
        group = order[i:j]
        if len(group) > 1:
            group = sorted(group, key=lambda c: tuple(np.round(-u[:, c], 12)))
        out.extend(group)
        i = j
    return np.array(out, dtype=int)


def decompose(chain: ChainOperator, rank: int, stationary: Optional[np.ndarray] = None,
              tol: float = SVD_TOL, max_iters: int = SVD_MAX_ITERS,
              oversample: int = SVD_OVERSAMPLE, stationary_tol: float = STATIONARY_TOL,
              stationary_max_iters: int = STATIONARY_MAX_ITERS) -> SpectralDecomposition:
    """Top ``rank`` singular triplets of ``A`` by blocked subspace iteration.

    Only ``chain.apply`` and ``chain.apply_transpose`` are used. Each sweep
    orthonormalizes ``A Q_v`` and ``A^T Q_u`` and extracts Ritz triplets from
    the small projected matrix; the loop stops once every requested triplet
    has ``|A v_k - s_k u_k| < tol``.

    Parameters
    ----------
    chain : ChainOperator
    rank : int
        Number of triplets, i.e. embedding dimension plus one.
    stationary : array, optional
        Stationary distribution of the chain; computed when omitted.
    """
    n = chain.n
    if not 1 <= rank <= n:
        raise ValueError(f"rank must lie in 1..{n}, got {rank}")
    info = {}
    if stationary is None:
        stationary, sinfo = stationary_distribution(chain, stationary_tol, stationary_max_iters,
                                                    return_info=True)
        info["stationary"] = sinfo
    pi = np.asarray(stationary, dtype=float)
    if pi.shape != (n,):
        raise DimensionMismatchError(f"stationary vector has shape {pi.shape}, expected ({n},)")
    if np.any(~(pi > 0)):
        raise NonPositiveEntryError("stationary distribution must be strictly positive")
    sq = np.sqrt(pi)
    isq = 1.0 / sq

    def a_mul(x):
        return sq[:, None] * chain.apply(isq[:, None] * x)

    def at_mul(y):
        return isq[:, None] * chain.apply_transpose(sq[:, None] * y)

    b = min(rank + oversample, n)
    rng = np.random.default_rng(START_SEED)
    start = rng.standard_normal((n, b))
    start[:, 0] = sq
    qv = _orth(start)
    z = a_mul(qv)
    residuals = np.full(rank, np.inf)
    for it in range(1, max_iters + 1):
        qu = _orth(z)
        w = at_mul(qu)
        qv = _orth(w)
        z = a_mul(qv)
        # Rayleigh-Ritz on span(qu) x span(qv)
        ub, s, vbt = np.linalg.svd(qu.T @ z, full_matrices=False)
        u = qu @ ub
        v = qv @ vbt.T
        av = z @ vbt.T
        res = np.linalg.norm(av - u * s, axis=0)
        residuals = res[:rank]
        if np.all(residuals < tol):
            break
    else:
        raise NoConvergenceError(
            f"subspace iteration: max triplet residual {residuals.max():.3g} after {max_iters} sweeps",
            float(residuals.max()), max_iters)

    u, v = _canonical_signs(u, v)
    order = _tie_order(s, u)[:rank]
    s, u, v, res = s[order], u[:, order], v[:, order], res[order]
    numerical_floor = max(n, 1) * np.finfo(float).eps * max(s[0], 1.0)
    deficient = bool(s[-1] <= numerical_floor) and rank > 1
    if deficient:
        warnings.warn(f"requested rank {rank} exceeds the numerical rank "
                      f"({int(np.sum(s > numerical_floor))})", RankDeficientWarning, stacklevel=2)
    info.update({"block_size": b, "max_residual": float(res.max())})
    return SpectralDecomposition(pi, s, u, v, res, it, deficient, info)


def embedding(decomp: SpectralDecomposition) -> np.ndarray:
    """Rows are embedded points; the constant leading coordinate is dropped."""
    return decomp.full_map()[:, 1:]


def tc_distance(chain: ChainOperator, stationary: np.ndarray, j: int, k: int) -> float:
    """Weighted L2 distance ``|delta_j^T P^(t) - delta_k^T P^(t)|_{L2(1/pi)}``."""
    n = chain.n
    for idx in (j, k):
        if not 0 <= idx < n:
            raise IndexOutOfRangeError(f"point index {idx} outside 0..{n - 1}")
    pi = np.asarray(stationary, dtype=float)
    if np.any(~(pi > 0)):
        raise NonPositiveEntryError("stationary distribution must be strictly positive")
    if j == k:
        return 0.0
    dj = np.zeros(n)
    dj[j] = 1.0
    dk = np.zeros(n)
    dk[k] = 1.0
    diff = chain.apply_transpose(dj) - chain.apply_transpose(dk)
    return float(np.sqrt(np.sum(diff * diff / pi)))


def tc_distance_matrix(chain: ChainOperator, stationary: np.ndarray) -> np.ndarray:
    """All pairwise time-coupled distances (posterior rows computed in one block)."""
    pi = np.asarray(stationary, dtype=float)
    if np.any(~(pi > 0)):
        raise NonPositiveEntryError("stationary distribution must be strictly positive")
    rows = chain.apply_transpose(np.eye(chain.n)).T  # row j = delta_j^T P^(t)
    scaled = rows / np.sqrt(pi)[None, :]
    return pairwise_distances(scaled)


def pairwise_distances(x: np.ndarray) -> np.ndarray:
    """Euclidean distances between rows of ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(x))

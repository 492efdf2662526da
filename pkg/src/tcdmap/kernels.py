"""Density-invariant diffusion operators built from a single snapshot.

The pipeline is

    K(j, k)  = exp(-|x_j - x_k|^2 / (4 eps))        gaussian_kernel
    (optional sparsification of K, diagonal kept)    sparsify_kernel
    q(j)     = sum_k K(j, k)                         density_estimate
    Kt(j, k) = K(j, k) / (q(j) q(k))                 density_normalize
    P(j, k)  = Kt(j, k) / sum_l Kt(j, l)             row_normalize

so that ``P`` is row-stochastic and reversible with respect to the row sums
of ``Kt``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.spatial.distance import pdist, squareform

from .errors import DisconnectedRowError, ZeroDensityError
from .tensor_store import Snapshot

__all__ = [
    "KernelParams", "DiffusionOperator", "squared_distances", "gaussian_kernel",
    "sparsify_kernel", "density_estimate", "density_normalize", "operator_from_kernel",
    "build_operator", "build_operators", "default_epsilon",
]

Matrix = Union[np.ndarray, sparse.csr_matrix]


@dataclass(frozen=True)
class KernelParams:
    """Kernel bandwidth and optional sparsification.

    ``epsilon`` is in squared ambient-distance units. At most one of ``knn``
    (symmetrized k-nearest-neighbour union graph) and ``threshold`` (drop raw
    kernel values below it) may be given. ``strict`` turns an isolated row
    after sparsification into an error.
    """

    epsilon: float
    knn: Optional[int] = None
    threshold: Optional[float] = None
    strict: bool = False

    def __post_init__(self):
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.knn is not None and self.threshold is not None:
            raise ValueError("give either knn or threshold, not both")
        if self.knn is not None and int(self.knn) < 1:
            raise ValueError(f"knn must be >= 1, got {self.knn}")
        if self.threshold is not None and not 0 < self.threshold < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {self.threshold}")


@dataclass(frozen=True)
class DiffusionOperator:
    """Row-stochastic ``n x n`` transition matrix.

    ``degrees`` holds the row sums of the normalized kernel (``None`` when the
    operator was supplied directly rather than built from a kernel).
    """

    weights: Matrix
    degrees: Optional[np.ndarray] = None
    time_index: int = 1
    epsilon: Optional[float] = None
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.weights)

    def dense(self) -> np.ndarray:
        return self.weights.toarray() if self.is_sparse else np.array(self.weights)

    def matvec(self, f: np.ndarray) -> np.ndarray:
        return self.weights @ f

    def rmatvec(self, mu: np.ndarray) -> np.ndarray:
        return self.weights.T @ mu

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.weights.sum(axis=1)).ravel()

    @classmethod
    def from_matrix(cls, weights, time_index: int = 1, atol: float = 1e-12) -> "DiffusionOperator":
        """Wrap an arbitrary row-stochastic matrix, validating it."""
        w = weights.tocsr() if sparse.issparse(weights) else np.array(weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"operator must be square, got {w.shape}")
        vals = w.data if sparse.issparse(w) else w
        if np.any(vals < 0):
            raise ValueError("operator entries must be nonnegative")
        rs = np.asarray(w.sum(axis=1)).ravel()
        if np.max(np.abs(rs - 1.0)) > atol:
            raise ValueError(f"rows must sum to 1 (max deviation {np.max(np.abs(rs - 1.0)):.3g})")
        return cls(w, None, time_index)


def squared_distances(points: np.ndarray) -> np.ndarray:
    """Dense symmetric matrix of squared Euclidean distances, exact zero diagonal."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] == 1:
        return np.zeros((1, 1))
    return squareform(pdist(points, "sqeuclidean"))


def default_epsilon(snapshots: Sequence[Snapshot]) -> float:
    """Half the median squared pairwise distance, pooled over ``snapshots``.

    Falls back to 1.0 when every pairwise distance is zero (any positive
    bandwidth then gives the same uniform operator).
    """
    pooled = [pdist(s.points, "sqeuclidean") for s in snapshots if s.n > 1]
    if not pooled:
        return 1.0
    med = float(np.median(np.concatenate(pooled)))
    return 0.5 * med if med > 0 else 1.0


def gaussian_kernel(snapshot, epsilon: float, scale: float = 4.0) -> np.ndarray:
    """``exp(-|x_j - x_k|^2 / (scale * epsilon))`` for all pairs.

    ``scale=4`` is the per-time operator convention; the concatenated-data
    baseline uses ``scale=1``.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    points = snapshot.points if isinstance(snapshot, Snapshot) else snapshot
    return np.exp(-squared_distances(points) / (scale * epsilon))


def sparsify_kernel(kernel: np.ndarray, knn: Optional[int] = None,
                    threshold: Optional[float] = None) -> Matrix:
    """Sparsify a dense kernel, keeping it symmetric and its diagonal intact.

    ``knn`` keeps ``(j, k)`` whenever ``k`` is among the ``knn`` nearest
    neighbours of ``j`` or vice versa. ``threshold`` keeps entries ``>=
    threshold``. With neither, the kernel is returned unchanged.
    """
    if knn is None and threshold is None:
        return kernel
    n = kernel.shape[0]
    if knn is not None:
        k = min(int(knn), n - 1)
        keep = np.zeros((n, n), dtype=bool)
        if k > 0:
            # rank neighbours by kernel value, self excluded; stable sort for determinism
            order = np.argsort(-kernel + 2.0 * np.eye(n), axis=1, kind="stable")[:, :k]
            keep[np.repeat(np.arange(n), k), order.ravel()] = True
        keep |= keep.T
    else:
        keep = kernel >= threshold
    np.fill_diagonal(keep, True)
    return sparse.csr_matrix(np.where(keep, kernel, 0.0))


def density_estimate(kernel: Matrix) -> np.ndarray:
    """Row sums of the kernel."""
    return np.asarray(kernel.sum(axis=1), dtype=float).ravel()


def density_normalize(kernel: Matrix, q: np.ndarray) -> Matrix:
    """``K(j, k) / (q(j) q(k))``."""
    q = np.asarray(q, dtype=float)
    if np.any(~(q > 0)):
        raise ZeroDensityError(f"density estimate has {int(np.sum(~(q > 0)))} nonpositive entries")
    inv = 1.0 / q
    # form inv(j) inv(k) first so the result stays exactly symmetric
    if sparse.issparse(kernel):
        coo = kernel.tocoo()
        data = coo.data * (inv[coo.row] * inv[coo.col])
        return sparse.csr_matrix((data, (coo.row, coo.col)), shape=coo.shape)
    return kernel * np.outer(inv, inv)


def _row_normalize(kt: Matrix):
    degrees = density_estimate(kt)
    if np.any(~(degrees > 0)):
        raise ZeroDensityError("normalized kernel has an empty row")
    if sparse.issparse(kt):
        return (sparse.diags(1.0 / degrees) @ kt).tocsr(), degrees
    return kt / degrees[:, None], degrees


def operator_from_kernel(kernel: Matrix, time_index: int = 1, epsilon: Optional[float] = None,
                         strict: bool = False) -> DiffusionOperator:
    """Density-normalize and row-normalize an (already sparsified) kernel."""
    if strict and sparse.issparse(kernel):
        nnz = np.diff(kernel.indptr)
        if np.any(nnz <= 1):
            raise DisconnectedRowError(
                f"{int(np.sum(nnz <= 1))} rows keep only their diagonal after sparsification")
    q = density_estimate(kernel)
    kt = density_normalize(kernel, q)
    weights, degrees = _row_normalize(kt)
    meta = {"min_density": float(q.min()), "max_density": float(q.max()),
            "min_degree": float(degrees.min()), "max_degree": float(degrees.max())}
    return DiffusionOperator(weights, degrees, time_index, epsilon, meta)


def build_operator(snapshot: Snapshot, params: KernelParams) -> DiffusionOperator:
    """Build the diffusion operator of one snapshot."""
    k = gaussian_kernel(snapshot, params.epsilon)
    k = sparsify_kernel(k, params.knn, params.threshold)
    return operator_from_kernel(k, snapshot.time_index, params.epsilon, params.strict)


def build_operators(snapshots: Sequence[Snapshot], epsilon: Union[float, str, None] = "auto",
                    knn: Optional[int] = None, threshold: Optional[float] = None,
                    per_snapshot: bool = False, strict: bool = False):
    """Build one operator per snapshot.

    With ``epsilon="auto"`` the bandwidth is :func:`default_epsilon` pooled over
    all snapshots (one shared bandwidth), or computed per snapshot when
    ``per_snapshot`` is set. Returns ``(operators, epsilons)``.
    """
    snapshots = list(snapshots)
    if epsilon in (None, "auto"):
        if per_snapshot:
            eps = [default_epsilon([s]) for s in snapshots]
        else:
            eps = [default_epsilon(snapshots)] * len(snapshots)
    else:
        eps = [float(epsilon)] * len(snapshots)
    ops = [build_operator(s, KernelParams(e, knn, threshold, strict)) for s, e in zip(snapshots, eps)]
    return ops, eps

"""Comparison embeddings: the static diffusion map and the concatenated-data map.

Both reuse the kernel pipeline of :mod:`tcdmap.kernels` and the subspace
iteration of :mod:`tcdmap.chain` on a one-operator chain. For a single
reversible operator ``A = D^{1/2} P D^{-1/2}`` is symmetric, so its singular
triplets are eigenpairs up to sign: ``lambda_k = s_k * sign(u_k . v_k)`` and
the right eigenvectors of ``P`` are ``D^{-1/2} v_k``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .chain import ChainOperator, SpectralDecomposition, decompose
from .kernels import KernelParams, build_operator, operator_from_kernel, squared_distances
from .tensor_store import DataTensor, Snapshot

__all__ = ["StaticDiffusionMap", "static_map", "static_map_from_operator", "concat_kernel",
           "concat_map"]


@dataclass
class StaticDiffusionMap:
    """Eigen-decomposition of one diffusion operator and its ``steps``-step map.

    ``right_eigenvectors`` has the constant eigenvector in column 0 and columns
    orthonormal in the ``stationary``-weighted inner product.
    """

    eigenvalues: np.ndarray
    right_eigenvectors: np.ndarray
    steps: int
    stationary: np.ndarray
    decomposition: SpectralDecomposition
    method: str = "static"

    @property
    def embedding(self) -> np.ndarray:
        """``Phi Lambda^steps`` without the constant coordinate."""
        lam = self.eigenvalues[1:] ** self.steps
        return self.right_eigenvectors[:, 1:] * lam


def static_map_from_operator(op, steps: int, rank: int, method: str = "static", **solver) -> StaticDiffusionMap:
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    op = dataclasses.replace(op, time_index=1)
    chain = ChainOperator([op])
    if op.degrees is not None:
        pi = op.degrees / op.degrees.sum()
    else:
        pi = None
    dec = decompose(chain, rank, stationary=pi, **solver)
    u, v, s = dec.left_vectors, dec.right_vectors, dec.singular_values
    sign = np.sign(np.einsum("ij,ij->j", u, v))
    sign[sign == 0] = 1.0
    lam = s * sign
    phi = v / np.sqrt(dec.stationary)[:, None]
    return StaticDiffusionMap(lam, phi, int(steps), dec.stationary, dec, method)


def static_map(snapshot: Snapshot, params: KernelParams, steps: int = 1, rank: int = 3,
               **solver) -> StaticDiffusionMap:
    """Diffusion map of one snapshot; ``rank`` counts the constant eigenvector."""
    return static_map_from_operator(build_operator(snapshot, params), steps, rank, **solver)


def concat_kernel(tensor: DataTensor, upto: int, epsilon: float) -> np.ndarray:
    """``exp(-|trajectory_j - trajectory_k|^2 / epsilon)`` over times ``1..upto``.

    Note the bandwidth convention: ``epsilon`` here, ``4 epsilon`` for the
    per-time operators.
    """
    if not 1 <= upto <= tensor.m:
        raise ValueError(f"upto must lie in 1..{tensor.m}, got {upto}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    traj = np.concatenate([tensor.snapshot(i).points for i in range(1, upto + 1)], axis=1)
    return np.exp(-squared_distances(traj) / epsilon)


def concat_map(tensor: DataTensor, upto: int, epsilon: float, rank: int = 3, **solver) -> StaticDiffusionMap:
    """Diffusion map (one step) of the points' concatenated trajectories."""
    op = operator_from_kernel(concat_kernel(tensor, upto, epsilon), 1, epsilon)
    return static_map_from_operator(op, 1, rank, method="concat", **solver)

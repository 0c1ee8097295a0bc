"""Dense linear-algebra kernel: SVD, structured unitaries, seeded sampling.

Everything is plain numpy.  Randomness always flows through :func:`rng`,
a counter-based Philox generator keyed by an explicit 64-bit seed, so every
experiment in the package is reproducible from its seed alone.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = [
    "SvdResult",
    "dft_matrix",
    "hadamard_matrix",
    "haar_random_unitary",
    "kron",
    "numerical_rank",
    "random_state",
    "rng",
    "svd",
]


def rng(seed: int) -> np.random.Generator:
    """Counter-based generator for a 64-bit seed (same seed, same stream)."""
    return np.random.Generator(np.random.Philox(key=seed))


class SvdResult(NamedTuple):
    """Thin SVD ``a = (u * s) @ vh`` with ``s`` non-increasing and >= 0."""

    u: np.ndarray
    s: np.ndarray
    vh: np.ndarray


def svd(a: np.ndarray) -> SvdResult:
    """Thin singular value decomposition of a 2-D array.

    Returns factors with orthonormal columns (``u``) / rows (``vh``) and the
    singular values sorted in non-increasing order.  Raises
    ``numpy.linalg.LinAlgError`` if the underlying iteration fails to
    converge.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={a.ndim}")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return SvdResult(u, s, vh)


def numerical_rank(a: np.ndarray, tol: float = 1e-10) -> int:
    """Number of singular values above ``tol`` times the largest one."""
    s = svd(a).s
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def hadamard_matrix(k: int) -> np.ndarray:
    """Sylvester-Hadamard matrix of size ``k`` (power of two), scaled by 1/sqrt(k).

    The result is real symmetric orthogonal with all entries +-1/sqrt(k) and an
    all-positive first row/column.
    """
    if k < 1 or k & (k - 1):
        raise ValueError(f"order must be a power of two, got {k}")
    h = np.array([[1.0]])
    while h.shape[0] < k:
        h = np.block([[h, h], [h, -h]])
    return h / np.sqrt(k)


def dft_matrix(k: int) -> np.ndarray:
    """Unitary DFT matrix ``F[j, t] = exp(2i*pi*j*t/k) / sqrt(k)``."""
    if k < 1:
        raise ValueError(f"order must be positive, got {k}")
    idx = np.arange(k)
    return np.exp(2j * np.pi * np.outer(idx, idx) / k) / np.sqrt(k)


def _as_generator(seed: int | np.random.Generator) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else rng(seed)


def haar_random_unitary(dim: int, seed: int | np.random.Generator) -> np.ndarray:
    """Haar-distributed random unitary via QR of a complex Gaussian matrix.

    The R-factor's diagonal phases are divided out, which makes the
    distribution exactly Haar rather than merely orthonormal.  ``seed`` may
    be an integer or an already-running generator.
    """
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    gen = _as_generator(seed)
    z = (gen.standard_normal((dim, dim)) + 1j * gen.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_state(dim: int, seed: int | np.random.Generator) -> np.ndarray:
    """Normalized complex Gaussian vector (uniform on the unit sphere)."""
    if dim < 1:
        raise ValueError(f"dimension must be positive, got {dim}")
    gen = _as_generator(seed)
    z = gen.standard_normal(dim) + 1j * gen.standard_normal(dim)
    return z / np.linalg.norm(z)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product ``(a kron b)[i*p + k, j*q + l] = a[i, j] * b[k, l]``."""
    return np.kron(a, b)

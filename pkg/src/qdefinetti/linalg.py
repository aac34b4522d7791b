"""Dense complex linear algebra on tensor-product spaces.

Conventions used throughout the package:

* matrices are plain square ``numpy`` arrays of dtype ``complex128``;
* for a product space with factor dimensions ``(d_0, ..., d_{N-1})`` the
  factor with index 0 is the slowest-varying one, i.e. the basis vector
  ``|i_0 i_1 ... i_{N-1}>`` sits at the row-major flat index of
  ``(i_0, ..., i_{N-1})``. This is the ordering produced by ``np.kron``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

TOL_HERM = 1e-10
TOL_EIG = 1e-9
MAX_DIM = 4096


class DimensionError(ValueError):
    """Raised when operand shapes do not match the declared tensor structure."""


class DimensionCapError(DimensionError):
    """Raised when a construction would exceed :data:`MAX_DIM`."""


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class TensorSpace:
    """Ordered list of subsystem dimensions."""

    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise DimensionError(f"factor dimensions must be positive, got {dims}")
        object.__setattr__(self, "factor_dims", dims)

    @classmethod
    def homogeneous(cls, d: int, n: int) -> "TensorSpace":
        return cls((d,) * n)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factor_dims))

    @property
    def num_factors(self) -> int:
        return len(self.factor_dims)

    def is_homogeneous(self) -> bool:
        return len(set(self.factor_dims)) == 1

    def subspace(self, keep: Iterable[int]) -> "TensorSpace":
        return TensorSpace(tuple(self.factor_dims[i] for i in sorted(keep)))


SpaceLike = Union[TensorSpace, Sequence[int]]


def as_space(space: SpaceLike) -> TensorSpace:
    return space if isinstance(space, TensorSpace) else TensorSpace(tuple(space))


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{0, ..., N-1}``; ``images[i]`` is the image of ``i``."""

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"not a permutation of 0..{len(images) - 1}: {images}")
        object.__setattr__(self, "images", images)

    def __len__(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def transposition(cls, n: int, i: int, j: int | None = None) -> "Permutation":
        """Swap ``i`` and ``j`` (default ``i + 1``) inside ``{0, ..., n-1}``."""
        j = i + 1 if j is None else j
        images = list(range(n))
        images[i], images[j] = images[j], images[i]
        return cls(tuple(images))

    @classmethod
    def cycle(cls, n: int) -> "Permutation":
        """The cyclic shift ``i -> i + 1 mod n``."""
        return cls(tuple((i + 1) % n for i in range(n)))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self)
        for i, p in enumerate(self.images):
            inv[p] = i
        return Permutation(tuple(inv))

    def compose(self, other: "Permutation") -> "Permutation":
        """Return ``self o other``, i.e. ``i -> self(other(i))``."""
        if len(other) != len(self):
            raise ValueError("cannot compose permutations of different length")
        return Permutation(tuple(self.images[other.images[i]] for i in range(len(self))))

    def is_identity(self) -> bool:
        return self.images == tuple(range(len(self)))


def adjacent_transpositions(n: int) -> list[Permutation]:
    """The ``n - 1`` generators of the symmetric group on ``n`` letters."""
    return [Permutation.transposition(n, i) for i in range(n - 1)]


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; ``a`` indexes the slow factor."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != a.shape[1] or b.shape[0] != b.shape[1]:
        raise DimensionError("kron expects two square matrices")
    return np.kron(a, b)


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    return reduce(kron, mats)


def _check_on_space(m: np.ndarray, space: TensorSpace) -> np.ndarray:
    m = np.asarray(m)
    n = space.total_dim
    if m.shape != (n, n):
        raise DimensionError(f"matrix of shape {m.shape} does not live on space {space.factor_dims}")
    return m


def partial_trace(m: np.ndarray, space: SpaceLike, keep: Iterable[int]) -> np.ndarray:
    """Trace out every factor of ``space`` not listed in ``keep``.

    Kept factors retain their relative order. Keeping nothing returns the
    scalar trace as a ``1 x 1`` matrix.
    """
    space = as_space(space)
    m = _check_on_space(m, space)
    keep = sorted(set(keep))
    nf = space.num_factors
    if any(k < 0 or k >= nf for k in keep):
        raise DimensionError(f"factor indices {keep} out of range for {nf} factors")
    drop = [i for i in range(nf) if i not in keep]
    dims = space.factor_dims
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    dt = int(np.prod([dims[i] for i in drop])) if drop else 1
    t = m.reshape(dims + dims)
    order = keep + drop
    t = t.transpose(order + [nf + i for i in order]).reshape(dk, dt, dk, dt)
    return np.trace(t, axis1=1, axis2=3)


def permute_factors(m: np.ndarray, space: SpaceLike, order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: factor ``order[i]`` of the input becomes factor ``i``.

    This is the plain index remap used for bookkeeping (e.g. moving between
    interleaved and grouped Choi orderings); factors may have unequal size.
    """
    space = as_space(space)
    m = _check_on_space(m, space)
    nf = space.num_factors
    order = list(order)
    if sorted(order) != list(range(nf)):
        raise ValueError(f"{order} is not a reordering of {nf} factors")
    dims = space.factor_dims
    t = m.reshape(dims + dims).transpose(order + [nf + i for i in order])
    return t.reshape(m.shape)


def permutation_operator(p: Permutation, d: int) -> np.ndarray:
    """The ``d**N`` 0/1 unitary moving the factor at position ``i`` to ``p(i)``.

    ``P (v_0 x ... x v_{N-1}) = v_{p^-1(0)} x ... x v_{p^-1(N-1)}`` and
    ``P(p1 o p2) = P(p1) P(p2)``.
    """
    n = len(p)
    dim = d**n
    inv = p.inverse().images
    # column index = input basis label j, row index = output label j' with j'_i = j_{p^-1(i)}
    labels = np.indices((d,) * n).reshape(n, -1)
    out = labels[list(inv)]
    rows = np.ravel_multi_index(tuple(out), (d,) * n)
    P = np.zeros((dim, dim), dtype=complex)
    P[rows, np.arange(dim)] = 1.0
    return P


def hermitian_deviation(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.abs(m - m.conj().T).max()) if m.size else 0.0


def hermitian_eigenvalues(m: np.ndarray, tol_herm: float = TOL_HERM) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix.

    Raises :class:`NotHermitianError` when ``max|m - m^dagger|`` exceeds ``tol_herm``.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    dev = hermitian_deviation(m)
    if dev > tol_herm:
        raise NotHermitianError(f"matrix deviates from Hermitian by {dev:.3e} > {tol_herm:.1e}")
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))


def check_dim_cap(dim: int, cap: int = MAX_DIM) -> None:
    if dim > cap:
        raise DimensionCapError(f"dimension {dim} exceeds the cap of {cap}")


def max_abs(m: np.ndarray) -> float:
    m = np.asarray(m)
    return float(np.abs(m).max()) if m.size else 0.0

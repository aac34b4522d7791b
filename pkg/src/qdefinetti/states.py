"""Density operators on multipartite spaces and state-level exchangeability."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import (
    MAX_DIM,
    TOL_HERM,
    DimensionError,
    Permutation,
    SpaceLike,
    TensorSpace,
    adjacent_transpositions,
    as_space,
    check_dim_cap,
    hermitian_deviation,
    hermitian_eigenvalues,
    kron_all,
    max_abs,
    partial_trace,
    permute_factors,
)

TOL_TRACE = 1e-10
TOL_PSD = 1e-9


class InvalidStateError(ValueError):
    pass


class Check(NamedTuple):
    """Outcome of a tolerance check: pass flag and the measured quantity."""

    passed: bool
    value: float


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated density matrix with explicit subsystem structure.

    The matrix is copied and frozen on construction. Validation uses the
    module tolerances unless ``validate=False`` is passed, which is meant for
    internal results already known to be states (mixtures, marginals).
    """

    space: TensorSpace
    matrix: np.ndarray

    def __init__(self, matrix, space: SpaceLike | None = None, validate: bool = True):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        space = TensorSpace((m.shape[0],)) if space is None else as_space(space)
        if space.total_dim != m.shape[0]:
            raise DimensionError(f"space {space.factor_dims} does not match matrix size {m.shape[0]}")
        m.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", m)
        if validate:
            self._validate()

    def _validate(self):
        m = self.matrix
        dev = hermitian_deviation(m)
        if dev > TOL_HERM:
            raise InvalidStateError(f"not Hermitian (deviation {dev:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TOL_TRACE:
            raise InvalidStateError(f"trace {tr!r} differs from 1")
        lo = hermitian_eigenvalues(m)[0]
        if lo < -TOL_PSD:
            raise InvalidStateError(f"minimum eigenvalue {lo:.3e} is negative")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_factors(self) -> int:
        return self.space.num_factors

    def local_dim(self) -> int:
        if not self.space.is_homogeneous():
            raise DimensionError(f"factor dimensions {self.space.factor_dims} are not all equal")
        return self.space.factor_dims[0]

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def marginal(self, keep) -> "DensityOperator":
        keep = sorted(set(keep))
        return DensityOperator(partial_trace(self.matrix, self.space, keep),
                               self.space.subspace(keep), validate=False)

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        return DensityOperator(np.kron(self.matrix, other.matrix),
                               self.space.factor_dims + other.space.factor_dims, validate=False)

    def power(self, n: int) -> "DensityOperator":
        check_dim_cap(self.dim**n)
        return DensityOperator(kron_all([self.matrix] * n), self.space.factor_dims * n, validate=False)


@dataclass(frozen=True)
class StateEnsemble:
    weights: tuple[float, ...]
    states: tuple[DensityOperator, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.states) or len(w) == 0:
            raise ValueError("weights and states must be non-empty and of equal length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > TOL_TRACE:
            raise ValueError(f"weights {w} are not a probability vector")
        spaces = {s.space for s in self.states}
        if len(spaces) != 1:
            raise DimensionError("ensemble states live on different spaces")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "states", tuple(self.states))


def pure_state(ket) -> DensityOperator:
    v = np.asarray(ket, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return DensityOperator(np.outer(v, v.conj()))


def basis_state(d: int, k: int) -> DensityOperator:
    m = np.zeros((d, d), dtype=complex)
    m[k, k] = 1.0
    return DensityOperator(m)


def maximally_mixed(d: int) -> DensityOperator:
    return DensityOperator(np.eye(d) / d)


def max_entangled(d: int) -> DensityOperator:
    """Projector onto ``sum_k |k>_R |k>_Q / sqrt(d)`` on the space ``(R, Q)``."""
    if d < 2:
        raise ValueError(f"max_entangled needs d >= 2, got {d}")
    idx = np.arange(d) * (d + 1)
    m = np.zeros((d * d, d * d), dtype=complex)
    m[np.ix_(idx, idx)] = 1.0 / d
    return DensityOperator(m, (d, d), validate=False)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Ginibre-distributed random density matrix (full rank by default)."""
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    m = g @ g.conj().T
    return DensityOperator(m / np.trace(m).real)


def permute_state(rho: DensityOperator, p: Permutation) -> DensityOperator:
    """Relabel subsystems: the factor at position ``i`` moves to ``p(i)``.

    Equal to ``P rho P^dagger`` with ``P = permutation_operator(p, d)``.
    """
    if len(p) != rho.num_factors:
        raise DimensionError(f"permutation of length {len(p)} on a {rho.num_factors}-factor state")
    rho.local_dim()
    out = permute_factors(rho.matrix, rho.space, p.inverse().images)
    return DensityOperator(out, rho.space, validate=False)


def is_symmetric_state(rho: DensityOperator, tol: float = TOL_TRACE) -> Check:
    """Check invariance under every adjacent transposition of the factors."""
    dev = 0.0
    for t in adjacent_transpositions(rho.num_factors):
        dev = max(dev, max_abs(permute_state(rho, t).matrix - rho.matrix))
    return Check(dev <= tol, dev)


def is_extension_of(rho_k: DensityOperator, rho_k1: DensityOperator, tol: float = TOL_TRACE) -> Check:
    """Check that tracing the last factor of ``rho_k1`` gives ``rho_k``."""
    if rho_k1.num_factors != rho_k.num_factors + 1:
        raise DimensionError(
            f"expected {rho_k.num_factors + 1} factors in the extension, got {rho_k1.num_factors}")
    if rho_k1.space.factor_dims[:-1] != rho_k.space.factor_dims:
        raise DimensionError("leading factors of the extension do not match")
    marg = partial_trace(rho_k1.matrix, rho_k1.space, range(rho_k.num_factors))
    dev = max_abs(marg - rho_k.matrix)
    return Check(dev <= tol, dev)


def state_mixture_power(ens: StateEnsemble, n: int, cap: int = MAX_DIM) -> DensityOperator:
    """``sum_i w_i rho_i^{(x) n}``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    first = ens.states[0]
    check_dim_cap(first.dim**n, cap)
    total = sum(w * kron_all([s.matrix] * n) for w, s in zip(ens.weights, ens.states))
    return DensityOperator(total, first.space.factor_dims * n, validate=False)

"""Quantum operations on N copies of a D-level system, stored as Choi matrices.

A :class:`Channel` keeps the trace-one Choi matrix

    J(Phi) = D^-N * sum_{j,k} |j><k|_R (x) Phi(|j><k|)_Q

on the *interleaved* space ``(R_1, Q_1, ..., R_N, Q_N)``: each reference
system sits next to the system it is entangled with, so permuting copies is a
permutation of ``(R_i, Q_i)`` pairs. Internally, :func:`grouped_choi` moves to
the ``(R_1..R_N, Q_1..Q_N)`` ordering where the action of the map reads off
directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .linalg import (
    MAX_DIM,
    TOL_HERM,
    DimensionError,
    Permutation,
    adjacent_transpositions,
    check_dim_cap,
    hermitian_deviation,
    hermitian_eigenvalues,
    kron_all,
    max_abs,
    partial_trace,
    permutation_operator,
    permute_factors,
)
from ._random import make_rng
from .states import TOL_PSD, TOL_TRACE, Check, DensityOperator, InvalidStateError

TOL_TP = 1e-9
TOL_SYM = 1e-9
TOL_EXT = 1e-9


class NotCompletelyPositiveError(ValueError):
    pass


def _interleave_order(n: int) -> list[int]:
    # grouped (R_1..R_N, Q_1..Q_N) -> interleaved (R_1, Q_1, ..., R_N, Q_N)
    return [i // 2 + (i % 2) * n for i in range(2 * n)]


def _group_order(n: int) -> list[int]:
    return [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]


@dataclass(frozen=True, eq=False)
class Channel:
    """Linear map on ``n`` systems of dimension ``d`` given by its Choi matrix.

    The Choi matrix must be Hermitian with unit trace; CP and TP are *not*
    required, they are properties checked by :func:`is_cp` and :func:`is_tp`.
    """

    d: int
    n: int
    choi: np.ndarray

    def __init__(self, d: int, n: int, choi):
        d, n = int(d), int(n)
        m = np.array(choi, dtype=complex)
        size = d ** (2 * n)
        if m.shape != (size, size):
            raise DimensionError(f"choi of shape {m.shape} does not match d={d}, n={n}")
        dev = hermitian_deviation(m)
        if dev > TOL_HERM:
            raise InvalidStateError(f"choi matrix is not Hermitian (deviation {dev:.3e})")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TOL_TRACE:
            raise InvalidStateError(f"choi trace {tr!r} differs from 1")
        m.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "choi", m)

    @property
    def space(self) -> tuple[int, ...]:
        return (self.d,) * (2 * self.n)

    def __repr__(self):
        return f"Channel(d={self.d}, n={self.n})"


def grouped_choi(c: Channel) -> np.ndarray:
    """Choi matrix reordered to ``(R_1..R_N, Q_1..Q_N)``."""
    return permute_factors(c.choi, c.space, _group_order(c.n))


def from_grouped_choi(d: int, n: int, grouped: np.ndarray) -> Channel:
    return Channel(d, n, permute_factors(grouped, (d,) * (2 * n), _interleave_order(n)))


def action_tensor(c: Channel) -> np.ndarray:
    """``T[j, k] = Phi(|j><k|)`` for all basis patterns, shape ``(D^N,)*4``."""
    big = c.d**c.n
    g = grouped_choi(c).reshape(big, big, big, big)  # [j, l, k, m]
    return big * g.transpose(0, 2, 1, 3)


def channel_from_action(d: int, n: int, action: Callable[[np.ndarray], np.ndarray]) -> Channel:
    """Assemble the Choi matrix of a linear map from its values on ``|j><k|``.

    ``action`` receives each ``D^N x D^N`` matrix unit and must return the
    image as a ``D^N x D^N`` matrix. Linearity is assumed.
    """
    big = d**n
    check_dim_cap(big * big)
    grouped = np.zeros((big, big, big, big), dtype=complex)  # [j, l, k, m]
    for j in range(big):
        for k in range(big):
            e = np.zeros((big, big), dtype=complex)
            e[j, k] = 1.0
            out = np.asarray(action(e), dtype=complex)
            if out.shape != (big, big):
                raise DimensionError(f"action returned shape {out.shape}, expected {(big, big)}")
            grouped[j, :, k, :] = out
    return from_grouped_choi(d, n, grouped.reshape(big * big, big * big) / big)


def channel_from_kraus(kraus: Sequence[np.ndarray]) -> Channel:
    """Single-system channel ``rho -> sum_a K_a rho K_a^dagger``.

    The Kraus list only needs to satisfy ``sum_a tr(K_a^dagger K_a) = d`` (unit
    Choi trace); trace preservation is not enforced.
    """
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    d = ks[0].shape[0]
    # sqrt(d) |v_a> = (I (x) K_a) sum_k |k k>, row index (j_R, l_Q)
    vecs = [k.T.reshape(-1) for k in ks]
    return Channel(d, 1, sum(np.outer(v, v.conj()) for v in vecs) / d)


def unitary_channel(u: np.ndarray) -> Channel:
    return channel_from_kraus([u])


def identity_channel(d: int) -> Channel:
    return unitary_channel(np.eye(d))


def bit_flip(d: int = 2) -> Channel:
    """Conjugation by the cyclic shift ``|k> -> |k+1 mod d>`` (Pauli X for d=2)."""
    return unitary_channel(np.roll(np.eye(d), 1, axis=0))


def depolarizing(d: int) -> Channel:
    """Completely depolarizing map ``rho -> tr(rho) I/d``."""
    return Channel(d, 1, np.eye(d * d) / (d * d))


def pinching(d: int) -> Channel:
    """Measure in the computational basis and re-prepare: ``rho -> sum_k <k|rho|k> |k><k|``."""
    kraus = []
    for k in range(d):
        p = np.zeros((d, d))
        p[k, k] = 1.0
        kraus.append(p)
    return channel_from_kraus(kraus)


def transpose_map(d: int) -> Channel:
    """``|j><k| -> |k><j|``; positive but not completely positive."""
    return channel_from_action(d, 1, lambda e: e.T)


def swap_channel(d: int) -> Channel:
    """Two-system channel conjugating by SWAP."""
    s = permutation_operator(Permutation((1, 0)), d)
    return channel_from_action(d, 2, lambda e: s @ e @ s.conj().T)


def reprepare_on_outcome(d: int, sigma, outcome: int = 0) -> Channel:
    """``rho -> d <outcome|rho|outcome> sigma``.

    CP with unit Choi trace but not trace preserving: the output trace is
    ``d`` on ``|outcome>`` and ``0`` on the other basis states.
    """
    sigma = np.asarray(sigma.matrix if isinstance(sigma, DensityOperator) else sigma, dtype=complex)
    proj = np.zeros((d, d))
    proj[outcome, outcome] = 1.0
    return Channel(d, 1, np.kron(proj, sigma))


def random_cptp(d: int, kraus_rank: int, seed) -> Channel:
    """Random CPTP map from a Gaussian isometry ``C^d -> C^(d*r)``.

    ``seed`` is either an integer or a ``numpy.random.Generator``; the
    generated Kraus operators are the ``d x d`` blocks of the isometry.
    """
    if not 1 <= kraus_rank <= d * d:
        raise ValueError(f"kraus_rank must lie in [1, {d * d}], got {kraus_rank}")
    rng = make_rng(seed)
    g = rng.standard_normal((d * kraus_rank, d)) + 1j * rng.standard_normal((d * kraus_rank, d))
    q, r = np.linalg.qr(g)
    # fix the phase ambiguity of QR so the output is a well-defined function of g
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return channel_from_kraus([q[a * d:(a + 1) * d, :] for a in range(kraus_rank)])


def jamiolkowski(c: Channel, tol_psd: float = TOL_PSD) -> DensityOperator:
    """The Choi matrix as a density operator on ``(R_1, Q_1, ..., R_N, Q_N)``."""
    ok, lo = is_cp(c, tol_psd)
    if not ok:
        raise NotCompletelyPositiveError(f"choi matrix has eigenvalue {lo:.3e}")
    return DensityOperator(c.choi, c.space, validate=False)


def apply(c: Channel, rho) -> np.ndarray:
    """``Phi(rho) = D^N tr_R[(rho^T (x) I) J]`` with ``J`` in grouped ordering."""
    m = np.asarray(rho.matrix if isinstance(rho, DensityOperator) else rho, dtype=complex)
    big = c.d**c.n
    if m.shape != (big, big):
        raise DimensionError(f"input of shape {m.shape} for a channel on {big} dimensions")
    g = grouped_choi(c).reshape(big, big, big, big)
    return big * np.einsum("jk,jlkm->lm", m, g)


def tensor_product(a: Channel, b: Channel) -> Channel:
    """``Phi_a (x) Phi_b``; in interleaved ordering the Choi matrices just kron."""
    if a.d != b.d:
        raise DimensionError("tensor factors must share the local dimension")
    check_dim_cap(a.choi.shape[0] * b.choi.shape[0])
    return Channel(a.d, a.n + b.n, np.kron(a.choi, b.choi))


def tensor_power(c: Channel, n_copies: int, cap: int = MAX_DIM) -> Channel:
    if c.n != 1:
        raise DimensionError("tensor_power expects a single-system channel")
    if n_copies < 1:
        raise ValueError("n_copies must be at least 1")
    check_dim_cap(c.d ** (2 * n_copies), cap)
    return Channel(c.d, n_copies, kron_all([c.choi] * n_copies))


def is_cp(c: Channel, tol_psd: float = TOL_PSD) -> Check:
    lo = float(hermitian_eigenvalues(c.choi)[0])
    return Check(lo >= -tol_psd, lo)


def is_tp(c: Channel, tol_tp: float = TOL_TP) -> Check:
    """``tr_Q J == I / D^N`` on the reference systems."""
    r_factors = range(0, 2 * c.n, 2)
    marg = partial_trace(c.choi, c.space, r_factors)
    big = c.d**c.n
    dev = max_abs(marg - np.eye(big) / big)
    return Check(dev <= tol_tp, dev)


def permute_channel(c: Channel, p: Permutation) -> Channel:
    """``pi o Phi o pi^-1``: permute the ``(R_i, Q_i)`` pairs of the Choi matrix."""
    if len(p) != c.n:
        raise DimensionError(f"permutation of length {len(p)} for a channel on {c.n} systems")
    inv = p.inverse().images
    order = [2 * inv[i // 2] + i % 2 for i in range(2 * c.n)]
    return Channel(c.d, c.n, permute_factors(c.choi, c.space, order))


def is_symmetric_channel(c: Channel, tol: float = TOL_SYM) -> Check:
    dev = 0.0
    for t in adjacent_transpositions(c.n):
        dev = max(dev, max_abs(permute_channel(c, t).choi - c.choi))
    return Check(dev <= tol, dev)


class ExtensionCheck(NamedTuple):
    passed: bool
    value: float
    choi_marginal_passed: bool
    choi_marginal_deviation: float


def is_channel_extension(ck: Channel, ck1: Channel, tol: float = TOL_EXT) -> ExtensionCheck:
    """Compare ``Phi_k o tr_{k+1}`` with ``tr_{k+1} o Phi_{k+1}`` on every basis pattern.

    The pass flag refers to that superoperator identity. The Choi marginal
    identity ``tr_{R_{k+1} Q_{k+1}} J(Phi_{k+1}) == J(Phi_k)`` is evaluated
    and reported separately; neither is inferred from the other.
    """
    if ck1.n != ck.n + 1 or ck1.d != ck.d:
        raise DimensionError(f"cannot compare (d={ck.d}, n={ck.n}) with (d={ck1.d}, n={ck1.n})")
    d = ck.d
    small = d**ck.n
    t_k = action_tensor(ck).reshape(small, small, small, small)
    t_k1 = action_tensor(ck1).reshape(small, d, small, d, small, d, small, d)
    # tr_{k+1} of Phi_{k+1}(|j a><k b|): trace the last output factor
    lhs = np.einsum("jakblcmc->jakblm", t_k1)
    # Phi_k(tr_{k+1}|j a><k b|) = delta_ab Phi_k(|j><k|)
    rhs = np.einsum("jklm,ab->jakblm", t_k, np.eye(d))
    dev = max_abs(lhs - rhs)
    marg = partial_trace(ck1.choi, ck1.space, range(2 * ck.n))
    mdev = max_abs(marg - ck.choi)
    return ExtensionCheck(dev <= tol, dev, mdev <= tol, mdev)


@dataclass(frozen=True, eq=False)
class SVector:
    """The ``D^4`` coefficients ``S[l, j, m, k]`` with ``Phi(|j><k|) = sum S[l,j,m,k] |l><m|``."""

    d: int
    coeffs: np.ndarray

    def __init__(self, d: int, coeffs):
        c = np.array(coeffs, dtype=complex).reshape((d,) * 4)
        c.setflags(write=False)
        object.__setattr__(self, "d", int(d))
        object.__setattr__(self, "coeffs", c)

    def choi(self) -> np.ndarray:
        """Reassembled matrix ``(1/D) sum S[l,j,m,k] |j><k|_R (x) |l><m|_Q``."""
        d = self.d
        return (self.coeffs.transpose(1, 0, 3, 2) / d).reshape(d * d, d * d)

    def in_domain(self, tol_psd: float = TOL_PSD) -> Check:
        """Membership in the set of S whose reassembled matrix is a density operator."""
        m = self.choi()
        if hermitian_deviation(m) > TOL_HERM or abs(np.trace(m).real - 1.0) > TOL_TRACE:
            return Check(False, float("nan"))
        lo = float(hermitian_eigenvalues(m)[0])
        return Check(lo >= -tol_psd, lo)


def phi_from_svector(s: SVector, tol_psd: float = TOL_PSD) -> Channel:
    ok, lo = s.in_domain(tol_psd)
    if not ok:
        raise InvalidStateError(f"S vector lies outside the density-operator domain (min eig {lo})")
    return Channel(s.d, 1, s.choi())


def svector_from_phi(c: Channel) -> SVector:
    if c.n != 1:
        raise DimensionError("S vectors describe single-system channels")
    d = c.d
    return SVector(d, (d * c.choi.reshape(d, d, d, d)).transpose(1, 0, 3, 2))

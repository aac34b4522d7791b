"""Exchangeable channel sequences built from finite ensembles.

A finite :class:`MixtureEnsemble` stands in for a prior density over
single-system operations; ``mixture_power(ens, n)`` is the n-system member of
the sequence it generates. The rest of the module checks exchangeability,
evaluates output-trace moments, and inverts the mixture on a dictionary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import (
    TOL_EXT,
    TOL_SYM,
    Channel,
    apply,
    is_channel_extension,
    is_cp,
    is_symmetric_channel,
    is_tp,
    tensor_power,
)
from .linalg import MAX_DIM, DimensionError, check_dim_cap, kron_all
from .states import TOL_TRACE, DensityOperator, basis_state

TOL_MOMENT = 1e-10
RANK_TOL = 1e-8
PGD_MAX_ITER = 10_000
PGD_STEP_TOL = 1e-12


class ConvergenceError(RuntimeError):
    """The simplex solver hit its iteration limit; ``weights``/``residual`` hold the last iterate."""

    def __init__(self, message, weights=None, residual=None):
        super().__init__(message)
        self.weights = weights
        self.residual = residual


@dataclass(frozen=True, eq=False)
class MixtureEnsemble:
    weights: tuple[float, ...]
    members: tuple[Channel, ...]
    tp_required: bool = True

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        members = tuple(self.members)
        if len(w) == 0 or len(w) != len(members):
            raise ValueError("weights and members must be non-empty and of equal length")
        if np.any(w < 0) or abs(w.sum() - 1.0) > TOL_TRACE:
            raise ValueError(f"weights {w.tolist()} are not a probability vector")
        if len({m.d for m in members}) != 1 or any(m.n != 1 for m in members):
            raise DimensionError("members must be single-system channels of one dimension")
        for i, m in enumerate(members):
            ok, lo = is_cp(m)
            if not ok:
                raise ValueError(f"member {i} is not completely positive (min eig {lo:.3e})")
            if self.tp_required:
                ok, dev = is_tp(m)
                if not ok:
                    raise ValueError(f"member {i} is not trace preserving (deviation {dev:.3e})")
        object.__setattr__(self, "weights", tuple(float(x) for x in w))
        object.__setattr__(self, "members", members)

    @property
    def d(self) -> int:
        return self.members[0].d

    def __len__(self):
        return len(self.members)


def mixture_power(ens: MixtureEnsemble, n: int, cap: int = MAX_DIM) -> Channel:
    """Channel with Choi matrix ``sum_i w_i J(Phi_i)^{(x) n}`` (interleaved ordering)."""
    check_dim_cap(ens.d ** (2 * n), cap)
    choi = sum(w * kron_all([m.choi] * n) for w, m in zip(ens.weights, ens.members))
    return Channel(ens.d, n, choi)


@dataclass
class ExchangeabilityReport:
    levels: list[int]
    symmetry_deviations: list[float]
    extension_deviations: list[float]
    choi_marginal_deviations: list[float]
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        devs = self.symmetry_deviations + self.extension_deviations
        self.passed = all(x <= self.tolerance for x in devs)

    def to_dict(self) -> dict:
        return {
            "schema": "qdefinetti.exchangeability-report/1",
            "passed": self.passed,
            "tolerance": self.tolerance,
            "levels": [
                {
                    "n": n,
                    "symmetry_deviation": self.symmetry_deviations[i],
                    # pair (n, n+1); absent on the last level
                    "extension_deviation": (self.extension_deviations[i]
                                            if i < len(self.extension_deviations) else None),
                    "choi_marginal_deviation": (self.choi_marginal_deviations[i]
                                                if i < len(self.choi_marginal_deviations) else None),
                }
                for i, n in enumerate(self.levels)
            ],
        }


def check_sequence(chain: Sequence[Channel], tol: float = max(TOL_SYM, TOL_EXT)) -> ExchangeabilityReport:
    """Run the symmetry check on each level and the extension check on consecutive pairs.

    ``chain[i]`` must act on ``chain[0].n + i`` systems.
    """
    sym, ext, marg = [], [], []
    for i, c in enumerate(chain):
        sym.append(is_symmetric_channel(c, tol).value)
        if i + 1 < len(chain):
            res = is_channel_extension(c, chain[i + 1], tol)
            ext.append(res.value)
            marg.append(res.choi_marginal_deviation)
    return ExchangeabilityReport([c.n for c in chain], sym, ext, marg, tol)


def verify_exchangeable_prefix(ens: MixtureEnsemble, n_max: int,
                               tol: float = max(TOL_SYM, TOL_EXT)) -> ExchangeabilityReport:
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    return check_sequence([mixture_power(ens, k) for k in range(1, n_max + 1)], tol)


def _as_matrix(rho) -> np.ndarray:
    return np.asarray(rho.matrix if isinstance(rho, DensityOperator) else rho, dtype=complex)


def output_traces(ens: MixtureEnsemble, rho) -> np.ndarray:
    """``tr[Phi_i(rho)]`` for every member."""
    m = _as_matrix(rho)
    return np.array([np.trace(apply(c, m)).real for c in ens.members])


def moment_trace(ens: MixtureEnsemble, rho, n: int) -> float:
    """``sum_i w_i tr[Phi_i(rho)]^n``."""
    return float(np.dot(ens.weights, output_traces(ens, rho) ** n))


def tp_violation_scan(ens: MixtureEnsemble, rho, n_max: int, threshold: float) -> int | None:
    """First ``n <= n_max`` with ``|moment_trace(ens, rho, n) - 1| > threshold``, else ``None``."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    traces = output_traces(ens, rho)
    w = np.asarray(ens.weights)
    for n in range(1, n_max + 1):
        if abs(float(np.dot(w, traces**n)) - 1.0) > threshold:
            return n
    return None


def tp_violation_scan_basis(ens: MixtureEnsemble, n_max: int, threshold: float) -> tuple[int, int] | None:
    """Scan every computational basis state; return ``(basis index, n)`` of the earliest flag.

    A member whose output trace falls below one on some basis state has a
    trace above one on another (the traces over a basis add up to ``D``), so
    scanning the basis turns deficits into detectable growth.
    """
    best = None
    for k in range(ens.d):
        n = tp_violation_scan(ens, basis_state(ens.d, k), n_max, threshold)
        if n is not None and (best is None or n < best[1]):
            best = (k, n)
    return best


def _dictionary_matrix(dictionary: Sequence[Channel], n: int) -> np.ndarray:
    if not dictionary:
        raise ValueError("dictionary is empty")
    if any(c.n != 1 for c in dictionary) or len({c.d for c in dictionary}) != 1:
        raise DimensionError("dictionary must hold single-system channels of one dimension")
    check_dim_cap(dictionary[0].d ** (2 * n))
    cols = [tensor_power(c, n).choi.reshape(-1) for c in dictionary]
    return np.stack(cols, axis=1)


def _realify(a: np.ndarray) -> np.ndarray:
    return np.concatenate([a.real, a.imag], axis=0)


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto ``{w : w >= 0, sum w = 1}`` (sort-and-threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def simplex_least_squares(a: np.ndarray, b: np.ndarray, max_iter: int = PGD_MAX_ITER,
                          step_tol: float = PGD_STEP_TOL, w0=None):
    """Minimise ``||a w - b||_2`` over the probability simplex by projected gradient.

    Fixed step ``1/L`` with ``L = ||a||_2^2``. Stops once an iteration moves
    the iterate by less than ``step_tol`` (max-norm); raises
    :class:`ConvergenceError` after ``max_iter`` iterations.

    :return: ``(weights, residual, iterations)``
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ata = a.T @ a
    atb = a.T @ b
    lip = np.linalg.norm(a, 2) ** 2
    k = a.shape[1]
    w = np.full(k, 1.0 / k) if w0 is None else project_simplex(w0)
    if lip == 0.0:
        return w, float(np.linalg.norm(b)), 0
    for it in range(1, max_iter + 1):
        w_new = project_simplex(w - (ata @ w - atb) / lip)
        moved = np.abs(w_new - w).max()
        w = w_new
        if moved < step_tol:
            return w, float(np.linalg.norm(a @ w - b)), it
    res = float(np.linalg.norm(a @ w - b))
    raise ConvergenceError(f"no convergence after {max_iter} iterations (residual {res:.3e})", w, res)


def extract_weights(target: Channel, dictionary: Sequence[Channel], n: int, **solver_opts):
    """Best simplex-weighted combination of ``Phi_i^{(x) n}`` matching ``target``.

    :return: ``(weights, residual)`` with the residual measured as the
        Euclidean norm of the difference of vectorised Choi matrices.
    """
    if target.n != n:
        raise DimensionError(f"target acts on {target.n} systems, expected {n}")
    a = _dictionary_matrix(dictionary, n)
    if target.d != dictionary[0].d:
        raise DimensionError("target and dictionary dimensions differ")
    a = _realify(a)
    b = _realify(target.choi.reshape(-1))
    w, res, _ = simplex_least_squares(a, b, **solver_opts)
    return w, res


def uniqueness_probe(dictionary: Sequence[Channel], n: int, rank_tol: float = RANK_TOL) -> bool:
    """True iff the vectorised Choi matrices of ``Phi_i^{(x) n}`` are linearly independent."""
    a = _dictionary_matrix(dictionary, n)
    sv = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(sv > rank_tol * sv[0])) if sv[0] > 0 else 0
    return rank == a.shape[1]

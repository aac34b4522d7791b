"""Bayesian process tomography over a finite dictionary of channels.

Shots are simulated by Born-rule sampling from a true channel. The posterior
over dictionary members is updated one record at a time. The schedule is a
fixed round robin over ``(input state, POVM)`` pairs.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ._random import make_rng
from .channels import TOL_TP, Channel, apply, is_tp
from .linalg import DimensionError, hermitian_eigenvalues
from .states import TOL_PSD, TOL_TRACE, DensityOperator, basis_state, pure_state

logger = logging.getLogger(__name__)


class InvalidPovmError(ValueError):
    pass


class ImpossibleRecordError(ValueError):
    """Every dictionary member assigns zero likelihood to a record."""


class UnknownIdError(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class Povm:
    id: str
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        effects = tuple(np.array(e, dtype=complex) for e in self.effects)
        if not effects:
            raise InvalidPovmError(f"POVM {self.id!r} has no effects")
        d = effects[0].shape[0]
        for k, e in enumerate(effects):
            if e.shape != (d, d):
                raise InvalidPovmError(f"effect {k} of {self.id!r} has shape {e.shape}")
            if hermitian_eigenvalues(e)[0] < -TOL_PSD:
                raise InvalidPovmError(f"effect {k} of {self.id!r} is not positive")
            e.setflags(write=False)
        dev = np.abs(sum(effects) - np.eye(d)).max()
        if dev > TOL_TP:
            raise InvalidPovmError(f"effects of {self.id!r} sum to identity only within {dev:.3e}")
        object.__setattr__(self, "effects", effects)

    @property
    def d(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self):
        return len(self.effects)

    @classmethod
    def from_basis(cls, id: str, basis: np.ndarray) -> "Povm":
        """Projective measurement onto the columns of a unitary."""
        basis = np.asarray(basis, dtype=complex)
        return cls(id, tuple(np.outer(basis[:, k], basis[:, k].conj()) for k in range(basis.shape[1])))


def computational_povm(d: int, id: str = "Z") -> Povm:
    return Povm.from_basis(id, np.eye(d))


def pauli_x_povm(id: str = "X") -> Povm:
    return Povm.from_basis(id, np.array([[1, 1], [1, -1]]) / np.sqrt(2))


def pauli_y_povm(id: str = "Y") -> Povm:
    return Povm.from_basis(id, np.array([[1, 1], [1j, -1j]]) / np.sqrt(2))


def qubit_catalog() -> tuple[dict[str, DensityOperator], dict[str, Povm], list[tuple[str, str]]]:
    """Four preparations, three Pauli measurements and the round robin over all twelve pairs.

    The inputs ``|0>, |1>, |+>, |+i>`` span the qubit operator space, so the
    schedule separates any two distinct channels.
    """
    s = 1 / np.sqrt(2)
    states = {"zero": basis_state(2, 0), "one": basis_state(2, 1),
              "plus": pure_state([s, s]), "plus_i": pure_state([s, 1j * s])}
    povms = {"Z": computational_povm(2), "X": pauli_x_povm(), "Y": pauli_y_povm()}
    schedule = [(i, p) for i in states for p in povms]
    return states, povms, schedule


@dataclass(frozen=True)
class TomographyRecord:
    input_id: str
    povm_id: str
    outcome: int


def born_probabilities(channel: Channel, rho, povm: Povm) -> np.ndarray:
    out = apply(channel, rho.matrix if isinstance(rho, DensityOperator) else rho)
    return np.array([np.trace(e @ out).real for e in povm.effects])


def simulate_shot(truth: Channel, input: DensityOperator, povm: Povm, rng: np.random.Generator) -> int:
    """Sample an outcome index with probability ``tr[E_k Phi(rho)]``."""
    if truth.n != 1 or truth.d != povm.d or input.dim != truth.d:
        raise DimensionError("channel, input state and POVM dimensions differ")
    p = born_probabilities(truth, input, povm)
    if p.min() < -TOL_TP:
        raise InvalidPovmError(f"negative outcome probability {p.min():.3e}")
    if abs(p.sum() - 1.0) > TOL_TP:
        raise InvalidPovmError(f"outcome probabilities sum to {p.sum()!r}")
    cdf = np.cumsum(np.clip(p, 0.0, None))
    u = rng.random() * cdf[-1]
    return int(min(np.searchsorted(cdf, u, side="right"), len(p) - 1))


def likelihoods(dictionary: Sequence[Channel], record: TomographyRecord,
                states: Mapping[str, DensityOperator], povms: Mapping[str, Povm]) -> np.ndarray:
    try:
        rho = states[record.input_id]
        povm = povms[record.povm_id]
    except KeyError as exc:
        raise UnknownIdError(f"record refers to unknown id {exc.args[0]!r}") from None
    if not 0 <= record.outcome < len(povm):
        raise ValueError(f"outcome {record.outcome} out of range for POVM {povm.id!r}")
    e = povm.effects[record.outcome]
    lik = np.array([np.trace(e @ apply(c, rho.matrix)).real for c in dictionary])
    # tiny negative values are rounding noise from PSD effects and CP channels
    return np.clip(lik, 0.0, None)


def posterior_update(weights, dictionary: Sequence[Channel], record: TomographyRecord,
                     states: Mapping[str, DensityOperator], povms: Mapping[str, Povm]) -> np.ndarray:
    """Bayes rule ``w_i' ~ w_i tr[E_outcome Phi_i(rho_input)]``.

    Raises :class:`ImpossibleRecordError` if the evidence is zero; the input
    weights are never modified.
    """
    w = np.asarray(weights, dtype=float)
    post = w * likelihoods(dictionary, record, states, povms)
    z = post.sum()
    if z <= 0.0:
        raise ImpossibleRecordError(f"record {record} has zero probability under every member")
    return post / z


def choi_trace_distance(a: Channel, b: Channel) -> float:
    """Half the trace norm of the difference of the (unit-trace) Choi matrices."""
    if a.d != b.d or a.n != b.n:
        raise DimensionError("channels of different shape")
    return float(0.5 * np.abs(hermitian_eigenvalues(a.choi - b.choi)).sum())


def posterior_mean(weights, dictionary: Sequence[Channel]) -> Channel:
    c0 = dictionary[0]
    return Channel(c0.d, c0.n, sum(w * c.choi for w, c in zip(weights, dictionary)))


@dataclass(eq=False)
class ExperimentConfig:
    truth: Channel
    dictionary: list[Channel]
    states: dict[str, DensityOperator]
    povms: dict[str, Povm]
    schedule: list[tuple[str, str]]
    shots: int
    seed: int
    prior: list[float] | None = None
    truth_index: int | None = None
    target: float | None = None
    labels: list[str] | None = None

    def __post_init__(self):
        if not self.dictionary:
            raise ValueError("dictionary is empty")
        if not self.schedule:
            raise ValueError("schedule is empty")
        for input_id, povm_id in self.schedule:
            if input_id not in self.states:
                raise UnknownIdError(f"schedule refers to unknown input state {input_id!r}")
            if povm_id not in self.povms:
                raise UnknownIdError(f"schedule refers to unknown POVM {povm_id!r}")
        if self.prior is None:
            self.prior = [1.0 / len(self.dictionary)] * len(self.dictionary)
        prior = np.asarray(self.prior, dtype=float)
        if len(prior) != len(self.dictionary) or prior.min() < 0 or abs(prior.sum() - 1) > TOL_TRACE:
            raise ValueError("prior must be a probability vector over the dictionary")
        if self.truth_index is None:
            self.truth_index = next((i for i, c in enumerate(self.dictionary)
                                     if choi_trace_distance(c, self.truth) == 0.0), None)
        if self.labels is None:
            self.labels = [f"m{i}" for i in range(len(self.dictionary))]


@dataclass(eq=False)
class PosteriorTrajectory:
    seed: int
    shots: list[int]
    records: list[TomographyRecord]
    weights: list[np.ndarray]
    distances: list[float]
    prior: np.ndarray
    impossible_records: int = 0
    truth_index: int | None = None
    target: float | None = None
    labels: list[str] = field(default_factory=list)

    @property
    def final_weights(self) -> np.ndarray:
        return self.weights[-1] if self.weights else self.prior

    @property
    def truth_weight(self) -> float | None:
        return None if self.truth_index is None else float(self.final_weights[self.truth_index])

    @property
    def converged(self) -> bool | None:
        if self.target is None or self.truth_index is None:
            return None
        return self.truth_weight > self.target


def run_experiment(config: ExperimentConfig) -> PosteriorTrajectory:
    """Simulate ``config.shots`` shots and track the posterior after each.

    Deterministic in ``config.seed``.
    """
    ok, dev = is_tp(config.truth)
    if not ok:
        raise ValueError(f"truth channel is not trace preserving (deviation {dev:.3e})")
    rng = make_rng(config.seed)
    w = np.asarray(config.prior, dtype=float)
    traj = PosteriorTrajectory(seed=config.seed, shots=[], records=[], weights=[], distances=[],
                               prior=w.copy(), truth_index=config.truth_index,
                               target=config.target, labels=list(config.labels))
    for shot in range(config.shots):
        input_id, povm_id = config.schedule[shot % len(config.schedule)]
        outcome = simulate_shot(config.truth, config.states[input_id], config.povms[povm_id], rng)
        rec = TomographyRecord(input_id, povm_id, outcome)
        try:
            w = posterior_update(w, config.dictionary, rec, config.states, config.povms)
        except ImpossibleRecordError:
            traj.impossible_records += 1
            logger.warning("shot %d: record %s impossible under every member", shot, rec)
        traj.shots.append(shot + 1)
        traj.records.append(rec)
        traj.weights.append(w)
        traj.distances.append(choi_trace_distance(posterior_mean(w, config.dictionary), config.truth))
    return traj

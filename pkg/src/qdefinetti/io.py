"""JSON file formats for channels, ensembles, experiment configs and reports.

Complex matrices are written as a flat row-major list of ``[re, im]`` pairs.
Python's ``json`` module writes floats with ``repr``, which round-trips every
finite double exactly, so channel and ensemble files reload bit-for-bit.
Every document carries a versioned ``schema`` field.
"""
from __future__ import annotations

import csv
import io as _io
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import channels as ch
from .definetti import MixtureEnsemble
from .states import DensityOperator, basis_state, maximally_mixed, pure_state
from .tomography import (
    ExperimentConfig,
    PosteriorTrajectory,
    Povm,
    computational_povm,
    pauli_x_povm,
    pauli_y_povm,
)

CHANNEL_SCHEMA = "qdefinetti.channel/1"
ENSEMBLE_SCHEMA = "qdefinetti.ensemble/1"
STATE_SCHEMA = "qdefinetti.state/1"
EXPERIMENT_SCHEMA = "qdefinetti.experiment/1"
TRAJECTORY_SCHEMA = "qdefinetti.trajectory/1"


class FormatError(ValueError):
    """Malformed or unsupported input document."""


def encode_matrix(m: np.ndarray) -> list[list[float]]:
    flat = np.asarray(m, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def decode_matrix(data, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`encode_matrix`; also accepts nested rows of reals or pairs."""
    arr = np.asarray(data, dtype=float)
    if dim is not None and arr.shape != (dim * dim, 2):
        raise FormatError(f"expected {dim * dim} [re, im] pairs, found array of shape {arr.shape}")
    side = int(round(np.sqrt(arr.shape[0]))) if arr.ndim == 2 else 0
    # a flat pair list has a perfect-square length; a 2x2 real matrix does not
    if arr.ndim == 2 and arr.shape[1] == 2 and side * side == arr.shape[0]:
        return (arr[:, 0] + 1j * arr[:, 1]).reshape(side, side)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr.astype(complex)
    if arr.ndim == 3 and arr.shape[2] == 2 and arr.shape[0] == arr.shape[1]:
        return arr[..., 0] + 1j * arr[..., 1]
    raise FormatError(f"cannot interpret array of shape {arr.shape} as a square matrix")


def _check_schema(doc: Mapping, expected: str):
    schema = doc.get("schema", expected)
    if schema != expected:
        raise FormatError(f"expected schema {expected!r}, found {schema!r}")


# -- channels ---------------------------------------------------------------

def channel_to_dict(c: ch.Channel) -> dict:
    return {"schema": CHANNEL_SCHEMA, "d": c.d, "n": c.n, "choi": encode_matrix(c.choi)}


_BUILTIN_CHANNELS = {
    "identity": ch.identity_channel,
    "bit_flip": ch.bit_flip,
    "depolarizing": ch.depolarizing,
    "pinching": ch.pinching,
    "transpose": ch.transpose_map,
}


def channel_from_dict(doc: Mapping) -> ch.Channel:
    """Load a serialized channel or build one from a ``{"builtin": ...}`` spec.

    Builtins: ``identity``, ``bit_flip``, ``depolarizing``, ``pinching``,
    ``transpose``, ``swap`` (two systems), ``random`` (keys ``kraus_rank``,
    ``seed``), ``unitary`` (key ``matrix``), ``kraus`` (key ``operators``) and
    ``reprepare`` (keys ``sigma``, ``outcome``). All take ``d`` (default 2).
    """
    if "builtin" in doc:
        name = doc["builtin"]
        d = int(doc.get("d", 2))
        if name in _BUILTIN_CHANNELS:
            return _BUILTIN_CHANNELS[name](d)
        if name == "swap":
            return ch.swap_channel(d)
        if name == "random":
            return ch.random_cptp(d, int(doc.get("kraus_rank", 2)), int(doc["seed"]))
        if name == "unitary":
            return ch.unitary_channel(decode_matrix(doc["matrix"]))
        if name == "kraus":
            return ch.channel_from_kraus([decode_matrix(k) for k in doc["operators"]])
        if name == "reprepare":
            return ch.reprepare_on_outcome(d, state_from_dict(doc["sigma"], d).matrix,
                                           int(doc.get("outcome", 0)))
        raise FormatError(f"unknown builtin channel {name!r}")
    _check_schema(doc, CHANNEL_SCHEMA)
    try:
        d, n = int(doc["d"]), int(doc["n"])
        choi = decode_matrix(doc["choi"], d ** (2 * n))
    except KeyError as exc:
        raise FormatError(f"channel document lacks field {exc.args[0]!r}") from None
    return ch.Channel(d, n, choi)


# -- ensembles and dictionaries ---------------------------------------------

def ensemble_to_dict(ens: MixtureEnsemble, labels: Sequence[str] | None = None) -> dict:
    members = []
    for i, (w, c) in enumerate(zip(ens.weights, ens.members)):
        entry = {"weight": w, "channel": channel_to_dict(c)}
        if labels is not None:
            entry["label"] = labels[i]
        members.append(entry)
    return {"schema": ENSEMBLE_SCHEMA, "d": ens.d, "tp_required": ens.tp_required, "members": members}


def _member_entries(doc: Mapping) -> list[Mapping]:
    members = doc.get("members")
    if not members:
        raise FormatError("document has no members")
    return members


def member_labels(doc: Mapping) -> list[str]:
    return [m.get("label", f"m{i}") if isinstance(m, Mapping) else f"m{i}"
            for i, m in enumerate(_member_entries(doc))]


def ensemble_from_dict(doc: Mapping) -> MixtureEnsemble:
    _check_schema(doc, ENSEMBLE_SCHEMA)
    entries = _member_entries(doc)
    try:
        weights = [float(m["weight"]) for m in entries]
        members = [channel_from_dict(m["channel"]) for m in entries]
    except KeyError as exc:
        raise FormatError(f"ensemble member lacks field {exc.args[0]!r}") from None
    ens = MixtureEnsemble(tuple(weights), tuple(members), bool(doc.get("tp_required", True)))
    if "d" in doc and int(doc["d"]) != ens.d:
        raise FormatError(f"declared d={doc['d']} but members have d={ens.d}")
    return ens


def dictionary_from_dict(doc: Mapping) -> list[ch.Channel]:
    """Channels listed under ``members``; entries may be bare channels or ensemble entries."""
    out = []
    for m in _member_entries(doc):
        out.append(channel_from_dict(m["channel"] if "channel" in m else m))
    return out


# -- states and POVMs -------------------------------------------------------

def state_to_dict(rho: DensityOperator) -> dict:
    return {"schema": STATE_SCHEMA, "dims": list(rho.space.factor_dims), "matrix": encode_matrix(rho.matrix)}


def state_from_dict(doc: Mapping, d: int | None = None) -> DensityOperator:
    """``{"basis": k}``, ``{"ket": [...]}``, ``{"matrix": [...]}`` or ``{"builtin": name}``."""
    if "basis" in doc:
        return basis_state(int(doc.get("d", d or 2)), int(doc["basis"]))
    if "ket" in doc:
        ket = np.asarray(doc["ket"], dtype=float)
        ket = ket[:, 0] + 1j * ket[:, 1] if ket.ndim == 2 else ket.astype(complex)
        return pure_state(ket)
    if "matrix" in doc:
        m = decode_matrix(doc["matrix"])
        return DensityOperator(m, doc.get("dims"))
    if "builtin" in doc:
        s = 1 / np.sqrt(2)
        kets = {"plus": [s, s], "minus": [s, -s], "plus_i": [s, 1j * s], "minus_i": [s, -1j * s]}
        name = doc["builtin"]
        if name == "maximally_mixed":
            return maximally_mixed(int(doc.get("d", d or 2)))
        if name in kets:
            return pure_state(kets[name])
        raise FormatError(f"unknown builtin state {name!r}")
    raise FormatError(f"cannot interpret state specification {dict(doc)!r}")


def povm_from_dict(id: str, doc: Mapping, d: int) -> Povm:
    if "builtin" in doc:
        name = doc["builtin"]
        if name == "computational":
            return computational_povm(int(doc.get("d", d)), id)
        if name == "pauli_x":
            return pauli_x_povm(id)
        if name == "pauli_y":
            return pauli_y_povm(id)
        raise FormatError(f"unknown builtin POVM {name!r}")
    if "effects" in doc:
        return Povm(id, tuple(decode_matrix(e) for e in doc["effects"]))
    raise FormatError(f"cannot interpret POVM {id!r}")


# -- experiments ------------------------------------------------------------

def experiment_from_dict(doc: Mapping, seed: int | None = None, shots: int | None = None) -> ExperimentConfig:
    _check_schema(doc, EXPERIMENT_SCHEMA)
    try:
        d = int(doc.get("d", 2))
        entries = doc["dictionary"]
        dictionary = [channel_from_dict(e["channel"] if "channel" in e else e) for e in entries]
        labels = [e.get("label", f"m{i}") for i, e in enumerate(entries)]
        truth_doc = doc["truth"]
        truth_index = None
        if "dictionary_index" in truth_doc:
            truth_index = int(truth_doc["dictionary_index"])
            truth = dictionary[truth_index]
        else:
            truth = channel_from_dict(truth_doc)
        states = {k: state_from_dict(v, d) for k, v in doc["states"].items()}
        povms = {k: povm_from_dict(k, v, d) for k, v in doc["povms"].items()}
        schedule = [tuple(p) for p in doc["schedule"]]
        return ExperimentConfig(
            truth=truth, dictionary=dictionary, states=states, povms=povms, schedule=schedule,
            shots=int(doc["shots"] if shots is None else shots),
            seed=int(doc["seed"] if seed is None else seed),
            prior=doc.get("prior"), truth_index=truth_index, target=doc.get("target"), labels=labels)
    except KeyError as exc:
        raise FormatError(f"experiment config lacks field {exc.args[0]!r}") from None
    except IndexError:
        raise FormatError("truth.dictionary_index is out of range") from None


def trajectory_to_dict(traj: PosteriorTrajectory) -> dict:
    return {
        "schema": TRAJECTORY_SCHEMA,
        "seed": traj.seed,
        "rng": "MT19937",
        "labels": traj.labels,
        "prior": [float(x) for x in traj.prior],
        "truth_index": traj.truth_index,
        "target": traj.target,
        "truth_weight": traj.truth_weight,
        "converged": traj.converged,
        "impossible_records": traj.impossible_records,
        "final_weights": [float(x) for x in traj.final_weights],
        "steps": trajectory_rows(traj),
    }


def trajectory_rows(traj: PosteriorTrajectory) -> list[dict]:
    rows = []
    for shot, rec, w, dist in zip(traj.shots, traj.records, traj.weights, traj.distances):
        row = {"shot": shot, "input": rec.input_id, "povm": rec.povm_id, "outcome": rec.outcome}
        row.update({f"w_{lab}": float(x) for lab, x in zip(traj.labels, w)})
        row["distance"] = dist
        rows.append(row)
    return rows


# -- generic file helpers ---------------------------------------------------

def read_json(path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def dumps_csv(rows: Iterable[Mapping]) -> str:
    rows = list(rows)
    buf = _io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: ("" if v is None else repr(v) if isinstance(v, float) else v)
                             for k, v in r.items()})
    return buf.getvalue()


def write_text(text: str, path=None):
    if path is None:
        import sys

        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def save_channel(c: ch.Channel, path):
    write_text(dumps_json(channel_to_dict(c)), path)


def load_channel(path) -> ch.Channel:
    return channel_from_dict(read_json(path))


def save_ensemble(ens: MixtureEnsemble, path, labels=None):
    write_text(dumps_json(ensemble_to_dict(ens, labels)), path)


def load_ensemble(path) -> MixtureEnsemble:
    return ensemble_from_dict(read_json(path))

"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also printed without ``-s`` because the reporter bypasses capture.
"""
import json

import numpy as np
import pytest

from qdefinetti import channels as ch
from qdefinetti import definetti as dft
from qdefinetti import io
from qdefinetti._random import make_rng
from qdefinetti.cli import main
from qdefinetti.states import basis_state, random_density
from qdefinetti.tomography import ExperimentConfig, posterior_update, qubit_catalog, run_experiment

SEED = 20261015


@pytest.fixture
def report(capsys):
    def emit(number, title, passed, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if passed else 'FAIL'} {title}: {detail}")
        assert passed, detail

    return emit


def random_kraus(d, rank, rng):
    """Kraus operators from the blocks of a Haar-like isometry (QR of a Gaussian)."""
    g = rng.standard_normal((d * rank, d)) + 1j * rng.standard_normal((d * rank, d))
    q, r = np.linalg.qr(g)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return [q[i * d:(i + 1) * d] for i in range(rank)]


def kraus_action(kraus):
    return lambda m: sum(k @ m @ k.conj().T for k in kraus)


def random_tp_ensemble(rng, d=2, max_members=5):
    m = int(rng.integers(1, max_members + 1))
    members = tuple(ch.random_cptp(d, int(rng.integers(1, d * d + 1)), rng) for _ in range(m))
    return dft.MixtureEnsemble(tuple(rng.dirichlet(np.ones(m))), members)


def exhaustive_posterior(prior, dictionary, records, states, povms):
    """Posterior from summed log-likelihoods ``log(D tr[(rho^T (x) E) J])``, no sequential updates."""
    logpost = np.log(np.asarray(prior, dtype=float))
    for i, c in enumerate(dictionary):
        for r in records:
            rho = states[r.input_id].matrix
            e = povms[r.povm_id].effects[r.outcome]
            p = c.d * np.trace(np.kron(rho.T, e) @ c.choi).real
            logpost[i] += np.log(p) if p > 0 else -np.inf
    logpost -= logpost.max()
    w = np.exp(logpost)
    return w / w.sum()


def test_criterion_1_jamiolkowski_round_trip(report):
    rng = make_rng(SEED + 1)
    d, worst = 2, 0.0
    units = [np.outer(np.eye(d)[j], np.eye(d)[k]) for j in range(d) for k in range(d)]
    for t in range(100):
        action = kraus_action(random_kraus(d, 1 + t % 4, rng))
        c = ch.channel_from_action(d, 1, action)
        tensor = ch.action_tensor(c)
        for e in units:
            j, k = np.argwhere(e)[0]
            expected = action(e)
            worst = max(worst, np.abs(tensor[j, k] - expected).max(), np.abs(ch.apply(c, e) - expected).max())
    report(1, "Jamiolkowski round trip", worst <= 1e-12,
           f"100 channels, Kraus rank 1-4, max error {worst:.2e} <= 1e-12")


def test_criterion_2_choi_criterion(report):
    rng = make_rng(SEED + 2)
    named = [ch.identity_channel(2), ch.identity_channel(3), ch.depolarizing(2), ch.depolarizing(3),
             ch.pinching(2), ch.pinching(3)]
    randoms = [ch.random_cptp(2 + t % 2, 1 + t % 4, rng) for t in range(50)]
    failures = [i for i, c in enumerate(named + randoms) if not ch.is_cp(c).passed]
    ok, lo = ch.is_cp(ch.transpose_map(2))
    passed = not failures and not ok and abs(lo + 0.5) <= 1e-10
    report(2, "Choi criterion", passed,
           f"{len(named) + len(randoms)} CPTP channels, {len(failures)} rejected; "
           f"transpose min eigenvalue {lo!r} (expect -0.5 +/- 1e-10)")


def test_criterion_3_exchangeable_prefix(report):
    rng = make_rng(SEED + 3)
    worst, failed = 0.0, 0
    for _ in range(25):
        rep = dft.verify_exchangeable_prefix(random_tp_ensemble(rng), 3, tol=1e-9)
        devs = rep.symmetry_deviations + rep.extension_deviations + rep.choi_marginal_deviations
        worst = max(worst, max(devs))
        failed += not rep.passed
    report(3, "exchangeable prefix", failed == 0 and worst <= 1e-9,
           f"25 ensembles, n_max=3, {failed} failed, max deviation {worst:.2e} <= 1e-9")


def test_criterion_4_moment_identity(report):
    rng = make_rng(SEED + 4)
    worst = 0.0
    for t in range(100):
        d = 2
        n = 1 + t % 3
        m = int(rng.integers(1, 5))
        members = []
        for _ in range(m):
            # CP members with arbitrary trace behaviour, normalised Choi
            if rng.random() < 0.5:
                members.append(ch.random_cptp(d, int(rng.integers(1, 5)), rng))
            else:
                members.append(ch.Channel(d, 1, random_density(d * d, rng).matrix))
        ens = dft.MixtureEnsemble(tuple(rng.dirichlet(np.ones(m))), tuple(members), tp_required=False)
        rho = random_density(d, rng)
        lhs = np.trace(ch.apply(dft.mixture_power(ens, n), rho.power(n).matrix)).real
        worst = max(worst, abs(lhs - dft.moment_trace(ens, rho, n)))
    report(4, "moment identity", worst <= 1e-10, f"100 triples, N<=3, max error {worst:.2e} <= 1e-10")


def test_criterion_5_tp_support_detection(report):
    rng = make_rng(SEED + 5)
    d = 2
    bad = ch.reprepare_on_outcome(d, random_density(d, rng))
    zero = basis_state(d, 0)
    assert abs(np.trace(ch.apply(bad, zero.matrix)).real - 2.0) < 1e-12
    missed, latest = 0, 0
    weights = list(np.linspace(0.05, 1.0, 20)) + list(rng.uniform(0.05, 1.0, 30))
    for wb in weights:
        m = int(rng.integers(0, 4))
        members = [ch.random_cptp(d, int(rng.integers(1, 5)), rng) for _ in range(m)]
        rest = (1 - wb) * rng.dirichlet(np.ones(m)) if m else np.zeros(0)
        if not m:
            wb = 1.0
        ens = dft.MixtureEnsemble((wb, *rest), (bad, *members), tp_required=False)
        n = dft.tp_violation_scan(ens, zero, 20, 0.25)
        if n is None:
            missed += 1
        else:
            latest = max(latest, n)
    false_alarms = 0
    for _ in range(50):
        ens = random_tp_ensemble(rng)
        for rho in (zero, basis_state(d, 1), random_density(d, rng)):
            false_alarms += dft.tp_violation_scan(ens, rho, 20, 1e-6) is not None
    report(5, "TP-support detection", missed == 0 and false_alarms == 0,
           f"{len(weights)} contaminated ensembles (weight >= 0.05), {missed} missed, latest flag at "
           f"n={latest}; 50 TP ensembles x 3 states, {false_alarms} false alarms at 1e-6")


def test_criterion_6_weight_recovery(report):
    rng = make_rng(SEED + 6)
    d, worst_w, worst_res, probed, skipped = 2, 0.0, 0.0, 0, 0
    for t in range(20):
        n = 1 + t % 2
        k = int(rng.integers(2, 6))
        dictionary = [ch.random_cptp(d, int(rng.integers(1, 5)), rng) for _ in range(k)]
        if not dft.uniqueness_probe(dictionary, n):
            skipped += 1
            continue
        probed += 1
        w_true = rng.dirichlet(np.ones(k))
        target = dft.mixture_power(dft.MixtureEnsemble(tuple(w_true), tuple(dictionary)), n)
        w, res = dft.extract_weights(target, dictionary, n)
        worst_w = max(worst_w, np.abs(w - w_true).max())
        worst_res = max(worst_res, res)
    dictionary = [ch.random_cptp(d, int(rng.integers(1, 5)), rng) for _ in range(10)]
    _, swap_res = dft.extract_weights(ch.swap_channel(d), dictionary, 2)
    passed = probed > 0 and worst_w <= 1e-6 and worst_res <= 1e-8 and swap_res >= 1e-3
    report(6, "weight recovery", passed,
           f"{probed} identifiable ensembles ({skipped} skipped), max weight error {worst_w:.2e} <= 1e-6, "
           f"max residual {worst_res:.2e} <= 1e-8; SWAP residual {swap_res:.3f} >= 1e-3")


def test_criterion_7_tomography_concentration(report):
    states, povms, schedule = qubit_catalog()
    rng = make_rng(SEED + 7)
    dictionary = [ch.identity_channel(2)] + [ch.random_cptp(2, int(rng.integers(1, 5)), rng) for _ in range(4)]
    lowest, oracle_gap, order_gap = 1.0, 0.0, 0.0
    for truth_index in range(5):
        cfg = ExperimentConfig(truth=dictionary[truth_index], dictionary=dictionary, states=states,
                               povms=povms, schedule=schedule, shots=2000, seed=SEED + truth_index,
                               target=0.99)
        traj = run_experiment(cfg)
        assert traj.truth_index == truth_index and traj.impossible_records == 0
        oracle = exhaustive_posterior(cfg.prior, dictionary, traj.records, states, povms)
        lowest = min(lowest, traj.truth_weight, oracle[truth_index])
        oracle_gap = max(oracle_gap, np.abs(oracle - traj.final_weights).max())
        order = make_rng(truth_index).permutation(len(traj.records))
        w = np.asarray(cfg.prior)
        for i in order:
            w = posterior_update(w, dictionary, traj.records[i], states, povms)
        order_gap = max(order_gap, np.abs(w - traj.final_weights).max())
    passed = lowest > 0.99 and oracle_gap <= 1e-10 and order_gap <= 1e-12
    report(7, "tomography concentration", passed,
           f"5 truths x 2000 shots, lowest truth weight {lowest:.12f} > 0.99, oracle gap {oracle_gap:.2e}, "
           f"permutation gap {order_gap:.2e} <= 1e-12")


def test_criterion_8_serialization(report, tmp_path):
    rng = make_rng(SEED + 8)
    mismatched = 0
    for t in range(20):
        c = ch.random_cptp(2 + t % 2, 1 + t % 4, rng)
        io.save_channel(c, tmp_path / "c.json")
        back = io.load_channel(tmp_path / "c.json")
        mismatched += back.choi.tobytes() != c.choi.tobytes()
        ens = random_tp_ensemble(rng)
        io.save_ensemble(ens, tmp_path / "e.json")
        eb = io.load_ensemble(tmp_path / "e.json")
        mismatched += eb.weights != ens.weights
        mismatched += any(x.choi.tobytes() != y.choi.tobytes() for x, y in zip(eb.members, ens.members))
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    codes = [main(["tomography-run", "configs/qubit_experiment.json", "--seed", "7", "--out", str(p)])
             for p in (a, b)]
    identical = a.read_bytes() == b.read_bytes()
    seed_recorded = json.loads(a.read_text())["seed"] == 7
    passed = mismatched == 0 and identical and seed_recorded and codes == [0, 0]
    report(8, "serialization", passed,
           f"20 channels + 20 ensembles, {mismatched} mismatches; trajectory reports byte-identical: "
           f"{identical} ({a.stat().st_size} bytes)")

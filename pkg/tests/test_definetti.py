import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdefinetti import channels as ch
from qdefinetti import definetti as dft
from qdefinetti._random import make_rng
from qdefinetti.linalg import DimensionCapError
from qdefinetti.states import basis_state, random_density

from conftest import I2, X, Y, Z


def random_tp_ensemble(rng, d=2, max_members=5):
    k = int(rng.integers(1, max_members + 1))
    w = rng.dirichlet(np.ones(k))
    members = [ch.random_cptp(d, int(rng.integers(1, d * d + 1)), rng) for _ in range(k)]
    return dft.MixtureEnsemble(tuple(w), tuple(members))


def non_tp_member(rng, lo=0.75):
    """CP, unit Choi trace, with output trace 2*m00 on |0><0| where m00 >= lo."""
    sigma = random_density(2, rng).matrix
    m00 = lo + (1 - lo) * rng.random()
    return ch.Channel(2, 1, np.kron(np.diag([m00, 1 - m00]), sigma))


def test_ensemble_validation():
    with pytest.raises(ValueError):
        dft.MixtureEnsemble((0.5, 0.6), (ch.identity_channel(2), ch.bit_flip(2)))
    with pytest.raises(ValueError):
        dft.MixtureEnsemble((1.0,), (ch.transpose_map(2),), tp_required=False)
    bad = ch.reprepare_on_outcome(2, np.eye(2) / 2)
    with pytest.raises(ValueError):
        dft.MixtureEnsemble((1.0,), (bad,))
    dft.MixtureEnsemble((1.0,), (bad,), tp_required=False)


def test_mixture_power_examples():
    c = ch.random_cptp(2, 2, 1)
    single = dft.MixtureEnsemble((1.0,), (c,))
    assert np.array_equal(dft.mixture_power(single, 3).choi, ch.tensor_power(c, 3).choi)

    ens = dft.MixtureEnsemble((0.3, 0.7), (ch.identity_channel(2), ch.bit_flip(2)))
    psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
    psi_x = np.array([0, 1, 1, 0]) / np.sqrt(2)
    expected = 0.3 * np.outer(psi, psi) + 0.7 * np.outer(psi_x, psi_x)
    assert np.abs(dft.mixture_power(ens, 1).choi - expected).max() < 1e-15

    rng = make_rng(5)
    assert ch.is_symmetric_channel(dft.mixture_power(random_tp_ensemble(rng), 2)).passed


def test_mixture_power_cap():
    ens = dft.MixtureEnsemble((1.0,), (ch.identity_channel(2),))
    with pytest.raises(DimensionCapError):
        dft.mixture_power(ens, 7)


def test_mixture_power_is_cp_and_tp(rng):
    ens = random_tp_ensemble(rng)
    c = dft.mixture_power(ens, 3)
    assert ch.is_cp(c).passed and ch.is_tp(c).passed


def test_verify_exchangeable_prefix_examples(rng):
    report = dft.verify_exchangeable_prefix(random_tp_ensemble(rng), 3)
    assert report.passed
    assert max(report.symmetry_deviations + report.extension_deviations) <= 1e-10
    report = dft.verify_exchangeable_prefix(dft.MixtureEnsemble((1.0,), (ch.identity_channel(2),)), 3)
    assert report.symmetry_deviations == [0.0, 0.0, 0.0]
    assert report.extension_deviations == [0.0, 0.0]
    assert report.passed
    with pytest.raises(ValueError):
        dft.verify_exchangeable_prefix(random_tp_ensemble(rng), 1)


def test_check_sequence_flags_swap_extension():
    report = dft.check_sequence([ch.identity_channel(2), ch.swap_channel(2)])
    assert report.symmetry_deviations == [0.0, 0.0]
    assert report.extension_deviations == [1.0]
    assert not report.passed


def test_report_dict_layout(rng):
    doc = dft.verify_exchangeable_prefix(random_tp_ensemble(rng), 3).to_dict()
    assert doc["schema"].startswith("qdefinetti.exchangeability-report/")
    assert [lv["n"] for lv in doc["levels"]] == [1, 2, 3]
    assert doc["levels"][-1]["extension_deviation"] is None


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_representation_closure(seed):
    report = dft.verify_exchangeable_prefix(random_tp_ensemble(make_rng(seed)), 3)
    assert report.passed
    assert max(report.symmetry_deviations + report.extension_deviations) <= 1e-9


def test_moment_trace_examples(rng):
    ens = random_tp_ensemble(rng)
    rho = random_density(2, rng)
    for n in (1, 2, 5):
        assert abs(dft.moment_trace(ens, rho, n) - 1) < 1e-12
    bad = ch.reprepare_on_outcome(2, random_density(2, rng))
    ens = dft.MixtureEnsemble((0.5, 0.5), (ch.identity_channel(2), bad), tp_required=False)
    assert abs(dft.moment_trace(ens, basis_state(2, 0), 3) - 4.5) < 1e-12
    # n = 1 is linear: trace of the averaged output
    avg = sum(w * ch.apply(c, rho) for w, c in zip(ens.weights, ens.members))
    assert abs(dft.moment_trace(ens, rho, 1) - np.trace(avg).real) < 1e-14


def test_moment_identity(rng):
    for _ in range(20):
        k = int(rng.integers(1, 4))
        members = [non_tp_member(rng, lo=0.0) if rng.random() < 0.5 else ch.random_cptp(2, 2, rng)
                   for _ in range(k)]
        ens = dft.MixtureEnsemble(tuple(rng.dirichlet(np.ones(k))), tuple(members), tp_required=False)
        rho = random_density(2, rng)
        for n in (1, 2, 3):
            power = rho.power(n).matrix
            lhs = np.trace(ch.apply(dft.mixture_power(ens, n), power)).real
            assert abs(lhs - dft.moment_trace(ens, rho, n)) <= 1e-10


def test_tp_violation_scan_examples(rng):
    tp = random_tp_ensemble(rng)
    assert dft.tp_violation_scan(tp, random_density(2, rng), 20, 1e-6) is None

    bad = ch.reprepare_on_outcome(2, random_density(2, rng))
    ens = dft.MixtureEnsemble((0.9, 0.1), (ch.random_cptp(2, 2, 1), bad), tp_required=False)
    # 0.1 * 2**n + 0.9 = 1.1, 1.3, 1.7, ...: first deviation above 0.5 is n = 3
    assert dft.tp_violation_scan(ens, basis_state(2, 0), 20, 0.5) == 3

    # output trace 0.5 on |0><0| at weight 0.5: moment 0.75 already at n = 1
    half = ch.Channel(2, 1, np.kron(np.diag([0.25, 0.75]), random_density(2, rng).matrix))
    ens = dft.MixtureEnsemble((0.5, 0.5), (ch.identity_channel(2), half), tp_required=False)
    assert abs(dft.moment_trace(ens, basis_state(2, 0), 1) - 0.75) < 1e-14
    assert dft.tp_violation_scan(ens, basis_state(2, 0), 20, 0.2) == 1

    with pytest.raises(ValueError):
        dft.tp_violation_scan(ens, basis_state(2, 0), 20, 0.0)


def test_tp_support_detection(rng):
    for _ in range(30):
        bad = non_tp_member(rng, lo=0.0)
        traces = 2 * np.diag(bad.choi.reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)).real
        if np.abs(traces - 1).max() < 0.5:
            continue
        eta = 0.05 + 0.9 * rng.random()
        others = random_tp_ensemble(rng, max_members=3)
        w = (eta,) + tuple((1 - eta) * np.asarray(others.weights))
        ens = dft.MixtureEnsemble(w, (bad,) + others.members, tp_required=False)
        assert dft.tp_violation_scan_basis(ens, 20, 0.25) is not None


def test_extract_weights_orthogonal_pair():
    ident, flip = ch.identity_channel(2), ch.bit_flip(2)
    ens = dft.MixtureEnsemble((0.3, 0.7), (ident, flip))
    w, res = dft.extract_weights(dft.mixture_power(ens, 1), [ident, flip], 1)
    assert np.abs(w - [0.3, 0.7]).max() <= 1e-6
    assert res <= 1e-8


def test_extract_weights_single_power(rng):
    dictionary = [ch.random_cptp(2, 2, rng) for _ in range(4)]
    w, res = dft.extract_weights(ch.tensor_power(dictionary[2], 2), dictionary, 2)
    assert abs(w[2] - 1) <= 1e-6
    assert res <= 1e-8


def test_extract_weights_swap_is_not_representable():
    dictionary = [ch.random_cptp(2, 1 + i % 4, 1000 + i) for i in range(10)]
    w, res = dft.extract_weights(ch.swap_channel(2), dictionary, 2)
    assert abs(w.sum() - 1) < 1e-12 and w.min() >= 0
    assert res >= 1e-3


def test_extract_weights_errors():
    with pytest.raises(ValueError):
        dft.extract_weights(ch.identity_channel(2), [], 1)
    with pytest.raises(Exception):
        dft.extract_weights(ch.identity_channel(2), [ch.identity_channel(2)], 2)


def test_uniqueness_probe_examples():
    assert dft.uniqueness_probe([ch.identity_channel(2), ch.bit_flip(2)], 1)
    c = ch.random_cptp(2, 2, 3)
    assert not dft.uniqueness_probe([c, c], 1)
    assert not dft.uniqueness_probe([c, c], 2)
    paulis = [ch.unitary_channel(P) for P in (I2, X, Y, Z)]
    # Pauli conjugations map |Omega> to the four Bell states: orthogonal rank-one chois
    gram = np.array([[np.trace(a.choi @ b.choi).real for b in paulis] for a in paulis])
    assert np.abs(gram - np.eye(4)).max() < 1e-15
    assert dft.uniqueness_probe(paulis, 1)


def test_uniqueness_probe_detects_affine_dependence():
    # the average of two Pauli conjugations repeated as a third member is dependent at n=1 ...
    a, b = ch.unitary_channel(X), ch.unitary_channel(Z)
    avg = ch.Channel(2, 1, (a.choi + b.choi) / 2)
    assert not dft.uniqueness_probe([a, b, avg], 1)
    # ... but its square is no longer a combination of the squares
    assert dft.uniqueness_probe([a, b, avg], 2)


def test_weight_recovery(rng):
    checked = 0
    for trial in range(10):
        k = int(rng.integers(2, 6))
        n = 1 + trial % 2
        dictionary = [ch.random_cptp(2, int(rng.integers(1, 5)), rng) for _ in range(k)]
        if not dft.uniqueness_probe(dictionary, n):
            continue
        w_true = rng.dirichlet(np.ones(k))
        target = dft.mixture_power(dft.MixtureEnsemble(tuple(w_true), tuple(dictionary)), n)
        w, res = dft.extract_weights(target, dictionary, n)
        assert np.abs(w - w_true).max() <= 1e-6
        assert res <= 1e-8
        checked += 1
    assert checked >= 5


def test_project_simplex_oracle(rng):
    # oracle: the projection minimises the distance over a fine check of feasible perturbations
    for _ in range(20):
        v = rng.standard_normal(5) * 2
        p = dft.project_simplex(v)
        assert abs(p.sum() - 1) < 1e-12 and p.min() >= 0
        for _ in range(50):
            q = rng.dirichlet(np.ones(5))
            # variational inequality of the Euclidean projection
            assert np.dot(v - p, q - p) <= 1e-12


def test_simplex_least_squares_raises_on_iteration_limit():
    rng = make_rng(1)
    a = rng.standard_normal((6, 4))
    b = rng.standard_normal(6)
    with pytest.raises(dft.ConvergenceError) as info:
        dft.simplex_least_squares(a, b, max_iter=2)
    assert info.value.weights is not None

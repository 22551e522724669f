import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from cptp_maxlik import channels, solvers, tomography
from cptp_maxlik.errors import DegenerateFactorError, InvalidArgumentError, NotInformationallyCompleteError
from cptp_maxlik.likelihood import log_likelihood
from cptp_maxlik.optimize import SolverConfig
from cptp_maxlik.tomography import TomographyDesign

seeds = st.integers(min_value=0, max_value=2**32 - 1)
CONSTRAINED = ("maxlik-simplex", "maxlik-iterative")


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_params_roundtrip(seed):
    x = np.random.default_rng(seed).normal(size=16)
    t = solvers.factor_from_params(x, 4)
    assert np.allclose(np.triu(t, 1), 0)
    np.testing.assert_array_equal(solvers.params_from_factor(t), x)


def test_factor_param_count_checked():
    with pytest.raises(InvalidArgumentError):
        solvers.factor_from_params(np.zeros(15), 4)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 4))
def test_factor_from_psd(seed, rank):
    s = oracles.random_psd(np.random.default_rng(seed), 4, rank)
    t = solvers.factor_from_psd(s)
    assert np.allclose(np.triu(t, 1), 0)
    assert np.all(np.diag(t).real >= -1e-12)
    assert np.allclose(np.diag(t).imag, 0, atol=1e-12)
    np.testing.assert_allclose(t.conj().T @ t, s, atol=1e-10 * np.abs(s).max())


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_retraction_is_trace_preserving(seed):
    rng = np.random.default_rng(seed)
    out = solvers.cptp_retraction(solvers.factor_from_params(rng.normal(size=16), 4))
    assert out.trace_preserving
    rep = channels.verify_cptp(out, 1e-10)
    assert rep.passed
    assert np.trace(out.matrix).real == pytest.approx(2.0, abs=1e-10)


def test_retraction_fixes_cptp_input(amp_damp_choi):
    t = solvers.factor_from_psd(amp_damp_choi.matrix)
    out = solvers.cptp_retraction(t)
    np.testing.assert_allclose(out.matrix, amp_damp_choi.matrix, atol=1e-9)


def test_retraction_rejects_zero_factor():
    with pytest.raises(DegenerateFactorError):
        solvers.cptp_retraction(np.zeros((4, 4)))


def test_hermitian_basis_orthonormal():
    b = solvers.hermitian_basis(4)
    gram = np.einsum("aij,bji->ab", b, b)
    np.testing.assert_allclose(gram, np.eye(16), atol=1e-14)
    for m in b:
        np.testing.assert_allclose(m, m.conj().T)


@pytest.mark.parametrize("name", ["identity", "amplitude-damping:0.3", "depolarizing:0.4"])
def test_linear_inversion_exact(name, standard_design):
    truth = channels.preset_channel(name)
    data = tomography.exact_dataset(truth, standard_design, 1000)
    np.testing.assert_allclose(solvers.linear_inversion(data), truth.matrix, atol=1e-10)


def test_linear_inversion_needs_complete_design(identity_choi, standard_design):
    design = TomographyDesign(2, 2, standard_design.inputs, standard_design.settings[2:])
    data = tomography.exact_dataset(identity_choi, design, 100)
    with pytest.raises(NotInformationallyCompleteError):
        solvers.reconstruct(data, "linear")


@pytest.mark.parametrize("method", solvers.METHODS)
def test_methods_recover_exact_channel(method, amp_damp_choi, balanced_design):
    data = tomography.exact_dataset(amp_damp_choi, balanced_design, 10**6)
    res = solvers.reconstruct(data, method)
    assert res.method == method
    assert channels.process_fidelity(res.choi, amp_damp_choi) >= 0.999
    if method in CONSTRAINED:
        assert res.cptp_report.d_inf <= 1e-7
        assert res.choi.trace_preserving
    if method != "linear":
        assert np.trace(res.choi.matrix).real == pytest.approx(2.0, abs=1e-7)
        assert res.cptp_report.min_eigenvalue >= -1e-10


def test_constrained_fits_beat_loose_tp_violation(amp_damp_choi, standard_design):
    data = tomography.simulate(amp_damp_choi, standard_design, 1000, 4)
    loose = solvers.reconstruct(data, "maxlik-loose")
    assert loose.cptp_report.d_inf > 1e-3
    for method in CONSTRAINED:
        assert solvers.reconstruct(data, method).cptp_report.d_inf <= 1e-7


def test_solvers_agree_on_sampled_data(amp_damp_choi, standard_design):
    data = tomography.simulate(amp_damp_choi, standard_design, 10_000, 9)
    a = solvers.reconstruct(data, "maxlik-iterative")
    b = solvers.reconstruct(data, "maxlik-simplex")
    assert a.final_likelihood == pytest.approx(b.final_likelihood, rel=1e-6)
    assert channels.process_fidelity(a.choi, b.choi) >= 0.999


def test_iterative_trace_monotone(bitflip_choi, standard_design):
    data = tomography.simulate(bitflip_choi, standard_design, 500, 1)
    res = solvers.reconstruct(data, "maxlik-iterative")
    values = [v for _, v in res.likelihood_trace]
    assert all(b >= a - 1e-12 * abs(a) for a, b in zip(values, values[1:]))
    assert res.final_likelihood == pytest.approx(log_likelihood(res.choi, data).value)
    assert res.final_mu.shape == (2, 2)


def test_iterative_iteration_cap(amp_damp_choi, standard_design):
    data = tomography.simulate(amp_damp_choi, standard_design, 1000, 1)
    res = solvers.reconstruct_maxlik_iterative(data, SolverConfig(max_iterations=2))
    assert not res.converged
    assert res.iterations_used == 2
    assert len(res.likelihood_trace) == 3


def test_fixed_point_at_truth(amp_damp_choi, standard_design):
    data = tomography.exact_dataset(amp_damp_choi, standard_design, 10**6)
    s_new, mu = solvers.fixed_point_step(amp_damp_choi, data)
    assert np.linalg.norm(s_new - amp_damp_choi.matrix) <= 1e-8
    np.testing.assert_allclose(mu, mu.conj().T)


def test_iterative_from_initial(amp_damp_choi, standard_design):
    data = tomography.exact_dataset(amp_damp_choi, standard_design, 10**6)
    res = solvers.reconstruct_maxlik_iterative(data, initial=amp_damp_choi)
    assert res.converged
    assert res.iterations_used <= 2


def test_simplex_seed_reproducible(amp_damp_choi, standard_design):
    data = tomography.simulate(amp_damp_choi, standard_design, 300, 2)
    a = solvers.reconstruct(data, "maxlik-simplex", SolverConfig(seed=3))
    b = solvers.reconstruct(data, "maxlik-simplex", SolverConfig(seed=3))
    assert np.array_equal(a.choi.matrix, b.choi.matrix)


def test_result_json(amp_damp_choi, standard_design):
    data = tomography.simulate(amp_damp_choi, standard_design, 300, 2)
    res = solvers.reconstruct(data, "maxlik-simplex")
    obj = json.loads(json.dumps(res.to_json()))
    assert obj["method"] == "maxlik-simplex"
    assert len(obj["likelihood_trace"]) <= solvers.TRACE_JSON_POINTS
    assert obj["likelihood_trace"][-1][1] == res.final_likelihood
    assert obj["mu"] is None
    assert obj["cptp"]["pass"]


def test_downsample_keeps_ends():
    trace = [(i, float(i)) for i in range(5000)]
    out = solvers.downsample_trace(trace, 100)
    assert len(out) <= 100
    assert out[0] == trace[0] and out[-1] == trace[-1]


def test_unknown_method(amp_damp_choi, standard_design):
    data = tomography.exact_dataset(amp_damp_choi, standard_design, 10)
    with pytest.raises(InvalidArgumentError):
        solvers.reconstruct(data, "bayesian")

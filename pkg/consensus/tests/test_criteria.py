import logging

import numpy as np
import pytest
from scipy import stats

from consensus.agents import DisturbanceModel, friction_disturbance_gain
from consensus.control import GainSet
from consensus.criteria import (
    CriteriaKind,
    SearchSpace,
    bisect_gamma,
    build_RSP,
    build_S1P1,
    check_conditions,
    check_hinf_conditions,
    check_leader_follower_conditions,
    critical_gamma,
    disturbance_margin,
    feasible_q_threshold,
    hinf_q_value,
    lambda_max,
    leader_follower_matrices,
    noise_trace_term,
    settling_bound,
    synthesize_gains,
)
from consensus.exceptions import AsymmetricArgument, DimensionMismatch, Infeasible
from consensus.scenarios import check_scenario, resolve_gains
from consensus.signals import constant_signal
from consensus.topology import build_consensus_matrix, build_laplacian, projection_from_matrix

from . import oracles
from .conftest import RING, shipped_scenario

PUBLISHED_K2 = np.array([[-5.14, 5.12], [3.55, -2.71]])


@pytest.fixture
def ring():
    topology = build_laplacian(RING)
    return topology, build_consensus_matrix(topology, row_norm=0.5, n=2)


def stable_gains(**changes):
    values = dict(K1=16.0 * np.eye(2), K2=0.01 * PUBLISHED_K2, alpha=1.2, a=10.0, b=0.1, d=0.35, gamma=1.5,
                  Q=0.25 * np.eye(6))
    values.update(changes)
    return GainSet(**values)


def test_assemblies_match_dense_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        N = int(rng.integers(2, 5))
        n = int(rng.integers(1, 4))
        topology = build_laplacian(oracles.random_topology(rng, N))
        projection = build_consensus_matrix(topology, row_norm=float(rng.uniform(0.3, 2.0)), n=n)
        L, M = topology.laplacian, projection.M
        K1, K2, K3 = (rng.normal(size=(n, n)) for _ in range(3))
        l = int(rng.integers(1, n + 1))
        C = rng.normal(size=(l, n))
        K3_out = rng.normal(size=(n, l))

        for ours, reference in zip(build_RSP(projection, L, K1, K2, n), oracles.rsp(M, L, K1, K2, n)):
            assert np.max(np.abs(ours - reference)) < 1e-10
        for ours, reference in zip(build_S1P1(projection, L, K3_out, C, n), oracles.s1p1(M, L, K3_out, C, n)):
            assert np.max(np.abs(ours - reference)) < 1e-10
        for ours, reference in zip(leader_follower_matrices(projection, L, K1, K2, K3, n),
                                   oracles.abt(M, L, K1, K2, K3, n)):
            assert np.max(np.abs(ours - reference)) < 1e-10


def test_rank_deficient_output_matrix(ring):
    topology, projection = ring
    with pytest.raises(DimensionMismatch):
        build_S1P1(projection, topology.laplacian, np.ones((2, 2)), [[1.0, 0.0], [2.0, 0.0]], 2)


def test_settling_bound_scaling():
    alpha, q = 1.2, -3.0
    base = settling_bound(q, alpha, 0.7)
    for scale in (0.5, 2.0, 10.0):
        assert settling_bound(q, alpha, 0.7 * scale) / base == pytest.approx(
            scale ** ((alpha - 1.0) / alpha), rel=1e-12, abs=0.0)
    assert settling_bound(q, alpha, 0.0) == 0.0
    with pytest.raises(Infeasible):
        settling_bound(0.0, alpha, 1.0)


def test_q_nondecreasing_in_delay_bound(ring):
    topology, projection = ring
    values = []
    for d in np.linspace(0.05, 0.5, 10):
        g = stable_gains(d=float(d))
        R, S, P = build_RSP(projection, topology.laplacian, g.K1, g.K2, 2)
        values.append(hinf_q_value(R, S, P, g.Q, g, 2, 4))
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_zero_gains_are_infeasible(ring):
    topology, projection = ring
    g = stable_gains(K1=np.zeros((2, 2)), K2=np.zeros((2, 2)))
    report = check_hinf_conditions(projection, topology.laplacian, g, V0=1.0)
    assert report.q > 0.0
    assert not report.feasible
    assert report.settling_bound is None


def test_stable_gains_are_feasible(ring):
    topology, projection = ring
    disturbance = DisturbanceModel(G=friction_disturbance_gain, w=constant_signal(1.0, 8), gg_bound=np.eye(8))
    report = check_hinf_conditions(projection, topology.laplacian, stable_gains(), disturbance=disturbance, V0=0.2)
    assert report.feasible, report.margins()
    assert report.condition("14").strict
    assert report.settling_bound == pytest.approx(settling_bound(report.q, 1.2, 0.2))
    data = report.as_dict()
    assert data["condition_13_ok"] and data["condition_14_ok"] and data["condition_15_ok"]
    assert "condition_14_margin = " in report.format_text()


def test_criteria_invariant_under_rotated_consensus_rows(ring):
    topology, projection = ring
    disturbance = DisturbanceModel(G=friction_disturbance_gain, w=constant_signal(1.0, 8), gg_bound=np.eye(8))
    reference = check_hinf_conditions(projection, topology.laplacian, stable_gains(), disturbance=disturbance, V0=0.2)
    rng = np.random.default_rng(17)
    for _ in range(10):
        rotation = stats.ortho_group.rvs(3, random_state=rng)
        rotated = projection_from_matrix(rotation @ projection.M, n=2, row_norm=0.5, l=projection.l)
        report = check_hinf_conditions(rotated, topology.laplacian, stable_gains(), disturbance=disturbance, V0=0.2)
        assert report.q == pytest.approx(reference.q, rel=1e-8, abs=1e-10)
        assert report.feasible == reference.feasible
        for label, margin in reference.margins().items():
            assert report.margins()[label] == pytest.approx(margin, rel=1e-8, abs=1e-10)


def test_identity_output_reduces_partial_assembly(ring):
    topology, projection = ring
    S1, P1 = build_S1P1(projection, topology.laplacian, PUBLISHED_K2, np.eye(2), 2)
    _, S, P = build_RSP(projection, topology.laplacian, 16.0 * np.eye(2), PUBLISHED_K2, 2)
    assert np.allclose(S1, S, atol=1e-12)
    assert np.allclose(P1, P, atol=1e-12)


def test_sampled_disturbance_margin(ring):
    _, projection = ring
    disturbance = DisturbanceModel(G=friction_disturbance_gain, w=constant_signal(1.0, 8))
    samples = np.random.default_rng(5).uniform(-2.0, 2.0, size=(20, 8))
    margin = disturbance_margin(projection.lifted, 0.25 * np.eye(6), disturbance, samples)
    assert margin <= 1e-9
    assert disturbance_margin(projection.lifted, np.zeros((6, 6)), None) == 0.0


def test_noise_term_on_benchmark_ring(ring):
    _, projection = ring
    numerator, base = noise_trace_term(projection)
    assert numerator == pytest.approx(0.25)
    assert base == pytest.approx(4.0)


def test_stochastic_criteria(ring):
    topology, projection = ring
    g = stable_gains(gamma=None, Q=None)
    report = check_conditions(CriteriaKind.STOCHASTIC, projection, topology.laplacian, g, V0=0.2)
    assert [c.label for c in report.conditions] == ["37", "38"]
    assert report.terms.constant == 0.0
    assert report.feasible


def test_leader_follower_criteria(ring):
    topology, projection = ring
    g = stable_gains(K1=30.0 * np.eye(2), K2=0.02 * PUBLISHED_K2, K3=12.0 * np.eye(2), Q=None)
    _, _, T = leader_follower_matrices(projection, topology.laplacian, g.K1, g.K2, g.K3, 2)
    g = g.replace(Q=lambda_max(T @ T.T) * np.eye(8))
    report = check_leader_follower_conditions(projection, topology.laplacian, g, V0=0.3)
    assert report.kind is CriteriaKind.LEADER_FOLLOWER
    assert report.q < 0.0
    assert report.extra["lambda_max_TTt"] == pytest.approx(lambda_max(T @ T.T))


def test_asymmetric_argument():
    with pytest.raises(AsymmetricArgument):
        lambda_max(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_critical_gamma_zeroes_q(ring):
    topology, projection = ring
    report = check_hinf_conditions(projection, topology.laplacian, stable_gains(), V0=0.2)
    gamma_star = critical_gamma(report.terms)
    assert 1.0 < gamma_star < 1.5

    def q_of_gamma(gamma):
        g = stable_gains(gamma=gamma)
        R, S, P = build_RSP(projection, topology.laplacian, g.K1, g.K2, 2)
        return hinf_q_value(R, S, P, g.Q, g, 2, 4)

    assert q_of_gamma(gamma_star) == pytest.approx(0.0, abs=1e-8)
    assert bisect_gamma(q_of_gamma, 1.0 + 1e-9, 1.5) == pytest.approx(gamma_star, abs=1e-6)


def test_critical_gamma_without_feasible_value(ring):
    topology, projection = ring
    g = stable_gains(K1=np.zeros((2, 2)))
    report = check_hinf_conditions(projection, topology.laplacian, g, V0=0.2)
    assert critical_gamma(report.terms) is None


def test_synthesis_prefers_smallest_bound(ring):
    topology, projection = ring
    space = SearchSpace(K1_seed=np.eye(2), k1_scales=(0.0, 8.0, 16.0, 16.0))
    gains = synthesize_gains(projection, topology.laplacian, space, CriteriaKind.HINF,
                             base=stable_gains(), V0=0.2, n_jobs=2)
    assert np.allclose(gains.K1, 16.0 * np.eye(2))


def test_synthesis_without_candidates(ring):
    topology, projection = ring
    with pytest.raises(Infeasible):
        synthesize_gains(projection, topology.laplacian, SearchSpace(k1_scales=()), CriteriaKind.HINF,
                         base=stable_gains())
    with pytest.raises(Infeasible):
        synthesize_gains(projection, topology.laplacian, SearchSpace(k1_scales=(0.0,)), CriteriaKind.HINF,
                         base=stable_gains(K2=np.zeros((2, 2))))


def test_printed_gains_fall_back_to_synthesis(caplog, monkeypatch):
    monkeypatch.setattr(logging.getLogger("consensus"), "propagate", True)
    scenario = shipped_scenario("hinf_unicycle_4")
    given = check_scenario(scenario)
    assert scenario.delays.bound == pytest.approx(0.35)
    with caplog.at_level(logging.WARNING, logger="consensus"):
        resolved, report = resolve_gains(scenario, given)
    if given.feasible:
        assert resolved.gain_source == "given"
    else:
        assert resolved.gain_source == "synthesized"
        assert resolved.given_report is given
        assert "fail the criteria" in caplog.text
    assert report.feasible


def test_spectral_threshold_separates_feasible_spectra(ring):
    topology, projection = ring
    report = check_hinf_conditions(projection, topology.laplacian, stable_gains(), V0=0.2)
    threshold = feasible_q_threshold(report.terms)
    assert report.terms.spectral < threshold
    assert report.extra["spectral_threshold"] == pytest.approx(threshold)
    assert report.q == pytest.approx(report.terms.spectral - threshold)

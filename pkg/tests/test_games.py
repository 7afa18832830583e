import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohcert import channels as ch
from cohcert import games as gm
from cohcert import linalg as la
from cohcert import measures as ms
from conftest import seeds, states

import oracles


def test_cmax_instrument_structure():
    rho = la.random_density_matrix(2, 2, 1)
    inst = gm.build_cmax_instrument(rho)
    assert len(inst) == 2
    assert ch.completeness_residual(inst.total) <= 1e-9
    assert inst.class_report().is_dio
    rho3 = la.random_density_matrix(3, 3, 2)
    inst3 = gm.build_cmax_instrument(rho3)
    probe = la.random_density_matrix(3, 2, 7)
    assert sum(np.trace(o).real for o in inst3.outputs(probe)) == pytest.approx(1.0, abs=1e-12)


def test_canonical_povm():
    p = gm.canonical_povm(2)
    plus = np.full((2, 2), 0.5)
    minus = np.array([[0.5, -0.5], [-0.5, 0.5]])
    assert np.allclose(p.effects[0], plus) and np.allclose(p.effects[1], minus)
    p3 = gm.canonical_povm(3)
    assert np.abs(sum(p3.effects) - np.eye(3)).max() <= 1e-10
    for a in range(3):
        for b in range(3):
            g = np.trace(p3.effects[a] @ p3.effects[b]).real
            assert g == pytest.approx(1.0 if a == b else 0.0, abs=1e-12)
    with pytest.raises(la.ValidationError):
        gm.canonical_povm(1)


def test_povm_validation():
    with pytest.raises(la.ValidationError):
        gm.Povm([np.eye(2), np.eye(2)])
    with pytest.raises(la.ValidationError):
        gm.Povm([np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])])
    with pytest.raises(la.ValidationError):
        gm.Povm([])


def test_instrument_validation():
    with pytest.raises(la.ValidationError):
        gm.Instrument([[np.eye(2)], [np.eye(2)]])
    with pytest.raises(la.ValidationError):
        gm.Instrument([])


@given(states(dims=(2, 3, 4)))
def test_fixed_povm_success_on_own_state(rho):
    d = rho.shape[0]
    inst = gm.build_cmax_instrument(rho)
    fixed = gm.p_succ_fixed(inst, gm.canonical_povm(d), rho)
    assert fixed == pytest.approx(2 ** ms.c_max(rho) / d, abs=1e-7)
    p_opt, povm = gm.p_succ_opt(inst, rho)
    assert p_opt >= fixed - 1e-7
    assert np.abs(sum(povm.effects) - np.eye(d)).max() <= 1e-8
    assert min(la.min_eig(m) for m in povm.effects) >= -1e-8
    assert gm.p_succ_ico(inst) == pytest.approx(1 / d, abs=1e-7)


def test_trivial_povm_and_uniform_guess():
    rho = la.random_density_matrix(2, 2, 3)
    inst = gm.random_instrument(2, 2, "DIO", 5)
    povm = gm.Povm([np.eye(2), np.zeros((2, 2))])
    assert gm.p_succ_fixed(inst, povm, rho) == pytest.approx(np.trace(inst.outputs(rho)[0]).real)
    uniform = gm.Povm([np.eye(2) / 2, np.eye(2) / 2])
    assert gm.p_succ_fixed(inst, uniform, rho) == pytest.approx(0.5)
    with pytest.raises(la.ValidationError):
        gm.p_succ_fixed(inst, gm.canonical_povm(3), rho)


def test_single_branch_and_orthogonal_branches():
    rho = la.random_density_matrix(3, 2, 0)
    single = gm.Instrument([[np.eye(3)]])
    assert gm.p_succ_opt(single, rho)[0] == pytest.approx(1.0)
    assert gm.p_succ_ico(single) == pytest.approx(1.0)
    deph = gm.Instrument([[np.diag([1, 0])], [np.diag([0, 1])]])
    assert gm.p_succ_opt(deph, la.random_density_matrix(2, 2, 1))[0] == pytest.approx(1.0, abs=1e-7)
    assert gm.p_succ_ico(deph) == pytest.approx(1.0, abs=1e-7)


def test_phase_instrument_examples():
    plus = la.proj(ch.maximally_coherent(2))
    inst = gm.build_phase_instrument([0.0, math.pi], [0.5, 0.5], dim=2)
    assert gm.p_succ_opt(inst, plus)[0] == pytest.approx(1.0, abs=1e-7)
    inst = gm.build_phase_instrument([[0, 0.3, 1.0], [0, 2.0, 0.5], [0, 1.0, 4.0]], [0.2, 0.5, 0.3])
    assert gm.p_succ_opt(inst, np.diag([0.2, 0.3, 0.5]))[0] == pytest.approx(0.5, abs=1e-7)
    one = gm.build_phase_instrument([0.7], [1.0], dim=3)
    assert gm.p_succ_opt(one, la.random_density_matrix(3, 3, 0))[0] == pytest.approx(1.0)
    with pytest.raises(la.ValidationError):
        gm.build_phase_instrument([0.1, 0.2], [0.5, 0.6], dim=2)
    with pytest.raises(la.ValidationError):
        gm.build_phase_instrument([0.1], [1.0])


@pytest.mark.parametrize("d", [2, 3, 4])
def test_advantage_examples(d):
    mc = la.proj(ch.maximally_coherent(d))
    assert gm.advantage_ratio(mc).ratio == pytest.approx(d, abs=1e-5)
    inc = np.diag(np.random.default_rng(d).dirichlet(np.ones(d))).astype(complex)
    assert gm.advantage_ratio(inc).ratio == pytest.approx(1.0, abs=1e-5)


@given(st.floats(0.05, 0.95), st.floats(0, 1), st.floats(0, 2 * np.pi))
@settings(max_examples=10)
def test_advantage_qubit_closed_form(a, r, phi):
    b = r * math.sqrt(a * (1 - a)) * np.exp(1j * phi)
    rho = np.array([[a, b], [np.conj(b), 1 - a]])
    assert gm.advantage_ratio(rho).ratio == pytest.approx(1 + 2 * abs(b), abs=1e-5)


@settings(max_examples=8)
@given(states(dims=(2, 3)), seeds)
def test_sampled_dio_instruments_respect_bound(rho, seed):
    res = gm.advantage_ratio(rho, samples=5, seed=seed)
    assert max(res.sampled_ratios) <= res.target + 1e-6


def test_p_ico_basis_reduction_against_diagonal_inputs():
    inst = gm.random_instrument(3, 3, "DIO", 11)
    best = gm.p_succ_ico(inst)
    rng = np.random.default_rng(0)
    for _ in range(10):
        sigma = np.diag(rng.dirichlet(np.ones(3))).astype(complex)
        assert gm.p_succ_opt(inst, sigma)[0] <= best + 1e-7


@settings(max_examples=5)
@given(states(dims=(2, 3)), seeds)
def test_povm_sdp_matches_oracle(rho, seed):
    inst = gm.random_instrument(rho.shape[0], 3, "ANY", seed)
    mine = gm.p_succ_opt(inst, rho)[0]
    assert mine == pytest.approx(oracles.p_succ_opt_value(inst.outputs(rho)), abs=1e-6)


def test_random_instrument_branches():
    inst = gm.random_instrument(2, 5, "SIO", 3)
    assert len(inst) == 5
    assert inst.class_report().is_sio


def test_simulation_deterministic_instrument():
    inst = gm.Instrument([[np.eye(2)]])
    sim = gm.simulate_game(inst, gm.Povm([np.eye(2)]), np.eye(2) / 2, 1000, 0)
    assert sim.frequency == 1.0 and sim.z_score == 0.0


def test_simulation_binomial_half():
    inst = gm.build_phase_instrument([0.0, math.pi / 2], [0.5, 0.5], dim=2)
    rho = np.eye(2) / 2
    povm = gm.canonical_povm(2)
    assert gm.p_succ_fixed(inst, povm, rho) == pytest.approx(0.5)
    sim = gm.simulate_game(inst, povm, rho, 100000, 1)
    assert abs(sim.frequency - 0.5) <= 5 * math.sqrt(0.25 / 1e5)


def test_simulation_seed_reproducible():
    rho = la.random_density_matrix(3, 3, 0)
    inst = gm.build_cmax_instrument(rho)
    a = gm.simulate_game(inst, gm.canonical_povm(3), rho, 5000, 9)
    b = gm.simulate_game(inst, gm.canonical_povm(3), rho, 5000, 9)
    assert np.array_equal(a.branches, b.branches) and np.array_equal(a.outcomes, b.outcomes)
    with pytest.raises(la.ValidationError):
        gm.simulate_game(inst, gm.canonical_povm(3), rho, 0, 9)


def test_game_result_json():
    res = gm.advantage_ratio(la.random_density_matrix(2, 2, 4), samples=2)
    out = res.to_json(witness=True)
    assert len(out["povm"]) == 2
    assert out["max_sampled_ratio"] <= out["target_2_pow_cmax"] + 1e-6

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohcert import channels as ch
from cohcert import linalg as la
from cohcert import measures as ms
from cohcert import oneshot as osh
from conftest import seeds

import oracles

MC2 = la.proj(ch.maximally_coherent(2))
INC = np.diag([0.3, 0.7]).astype(complex)


def test_distill_examples():
    assert osh.one_shot_distill_mio(MC2, 0.01, 4).m_star >= 2
    res = osh.one_shot_distill_mio(INC, 0.01, 4)
    assert res.m_star == 1 and res.log_m == 0.0 and res.certificate is None
    assert not any(res.feasibility_profile().values())


def test_discard_and_prepare_is_feasible():
    rho = la.random_density_matrix(2, 2, 1)
    res = osh.one_shot_distill_mio(rho, 0.7, 4)
    assert all(rec["feasible"] for rec in res.scan if rec["M"] <= 3)
    assert [rec["M"] for rec in res.scan] == [2, 3, 4]


def test_cost_examples():
    assert osh.one_shot_cost_mio(MC2, 0.01, 4).m_star == 2
    assert osh.one_shot_cost_mio(INC, 0.01, 4).m_star == 1
    assert osh.one_shot_cost_mio(la.random_density_matrix(2, 2, 1), 0.999, 4).m_star == 1


def test_cost_none_when_out_of_range():
    res = osh.one_shot_cost_mio(la.proj(ch.maximally_coherent(3)), 0.01, 2)
    assert res.m_star is None and res.log_m == math.inf


def test_epsilon_and_cap_validation():
    with pytest.raises(la.ValidationError):
        osh.one_shot_distill_mio(MC2, 0.0)
    with pytest.raises(la.ValidationError):
        osh.one_shot_cost_mio(MC2, 1.0)
    with pytest.raises(la.DimensionCapError):
        osh.one_shot_cost_mio(MC2, 0.1, m_max=40)
    with pytest.raises(la.DimensionCapError):
        osh.regularized_sweep(MC2, 0.1, 7)


@pytest.mark.parametrize("seed,d", [(11, 2), (12, 3)])
def test_scan_values_match_oracle(seed, d):
    rho = la.random_density_matrix(d, 2, seed)
    dist = osh.one_shot_distill_mio(rho, 0.05, 3)
    cost = osh.one_shot_cost_mio(rho, 0.05, 3)
    for rec in dist.scan:
        assert rec["value"] == pytest.approx(oracles.distill_value(rho, rec["M"]), abs=1e-6)
    for rec in cost.scan:
        assert rec["value"] == pytest.approx(oracles.cost_fidelity_sq(rho, rec["M"]), abs=1e-6)


# scan values frozen after agreement with the cvxpy oracle above
FROZEN_DISTILL = {(11, 2): [0.68423953616, 0.45615969104, 0.34211976828],
                  (12, 3): [0.85105765825, 0.77014126179, 0.57760594661]}


@pytest.mark.parametrize("key", sorted(FROZEN_DISTILL))
def test_frozen_distillation_profile(key):
    seed, d = key
    rho = la.random_density_matrix(d, 2, seed)
    vals = [rec["value"] for rec in osh.one_shot_distill_mio(rho, 0.05, 4).scan]
    assert vals == pytest.approx(FROZEN_DISTILL[key], abs=1e-8)


@settings(max_examples=6)
@given(seeds, st.sampled_from([0.01, 0.05, 0.1]))
def test_bounds_and_certificates_on_qubits(seed, eps):
    rho = la.random_density_matrix(2, 1 + seed % 2, seed)
    cost = osh.one_shot_cost_mio(rho, eps, 4)
    dist = osh.one_shot_distill_mio(rho, eps, 4)
    assert osh.check_cost_bound(rho, eps, 4, cost=cost).holds
    assert osh.check_distill_bound(rho, eps, 4, dist=dist).holds
    assert cost.log_m >= dist.log_m
    for res in (cost, dist):
        r = osh.certificate_residuals(res)
        assert r["mio"] <= 1e-8 and r["tp"] <= 1e-8 and r["psd"] >= -1e-8
        if res.certificate is not None:
            res.certificate.check(1e-8)


def test_certificate_meets_fidelity_constraint():
    rho = la.random_density_matrix(2, 2, 5)
    eps = 0.05
    dist = osh.one_shot_distill_mio(rho, eps, 4)
    if dist.certificate is not None:
        out = ch.apply(dist.certificate, rho)
        target = ch.maximally_coherent(dist.m_star)
        assert np.real(target.conj() @ out @ target) >= 1 - eps - 1e-7
    cost = osh.one_shot_cost_mio(rho, eps, 4)
    out = ch.apply(cost.certificate, la.proj(ch.maximally_coherent(cost.m_star)))
    assert la.fidelity(rho, out) ** 2 >= 1 - eps - 1e-6


def test_bound_examples():
    for b in (osh.check_cost_bound(INC, 0.04, 4), osh.check_distill_bound(INC, 0.04, 4)):
        assert b.holds
    b = osh.check_cost_bound(MC2, 0.04, 4)
    assert b.holds and b.rhs == pytest.approx(1.0)
    b = osh.check_distill_bound(MC2, 0.01, 4)
    assert b.lhs == pytest.approx(1.0) and b.rhs >= 1.0 - 1e-9
    b = osh.check_distill_bound(la.random_density_matrix(3, 2, 3), 0.05, 6)
    assert b.holds


def test_sweep_examples():
    for r in osh.regularized_sweep(INC, 0.1, 3):
        assert r.value_max_over_n <= 1e-9 and r.c_max_over_n == 0.0 and r.c_r_target == 0.0
    for r in osh.regularized_sweep(MC2, 0.0, 3):
        assert r.value_max_over_n == pytest.approx(1.0, abs=1e-7)
        assert r.value_min_over_n == pytest.approx(1.0, abs=1e-7)


def test_sweep_unsmoothed_chain_and_records():
    rho = la.random_density_matrix(2, 2, 21)
    recs = osh.regularized_sweep(rho, 0.1, 3)
    assert [r.n for r in recs] == [1, 2, 3]
    for r in recs:
        assert r.unsmoothed_chain()
        assert math.isfinite(r.value_max_over_n) and math.isfinite(r.value_min_over_n)
        assert r.gap_max == pytest.approx(abs(r.value_max_over_n - ms.c_r(rho)))


def test_result_json():
    res = osh.one_shot_cost_mio(MC2, 0.05, 3)
    out = res.to_json(witness=True)
    assert out["m_star"] == 2 and "certificate" in out
    assert out["certificate"]["choi_convention"] == ch.CHOI_CONVENTION

"""Cross-checks of the package solvers against cvxpy, plus values frozen after agreement."""

import math

import pytest
from hypothesis import given, settings

from cohcert import linalg as la
from cohcert import measures as ms
from conftest import states

import oracles

# (dim, rank, seed) -> C_max, C_r, smooth C_max and smooth C_min at eps 0.05 and 0.1
FROZEN = {
    (2, 2, 11): (0.4525733730786188, 0.10032054165519544,
                 {0.05: (0.3430997189117836, 0.11899943060887026), 0.1: (0.22463189663635585, 0.24870402628270827)}),
    (3, 2, 12): (1.2081575004534664, 0.7607569869895037,
                 {0.05: (1.1115972871119693, 0.4530818184374523), 0.1: (1.0081298986003533, 0.7102939002727064)}),
    (3, 3, 13): (0.7808453796394479, 0.3244693167197612,
                 {0.05: (0.6490519365614439, 0.39287170534616306), 0.1: (0.503997280439815, 0.6094734412647412)}),
    (4, 4, 14): (1.1664331882194119, None,
                 {0.05: (1.0317909792981428, 0.3668079349840638), 0.1: (0.8832773629108696, 0.6560891337302058)}),
}


@pytest.mark.parametrize("key", sorted(FROZEN))
def test_frozen_values(key):
    rho = la.random_density_matrix(*key)
    cmax, cr, smooth = FROZEN[key]
    assert ms.c_max(rho) == pytest.approx(cmax, abs=1e-8)
    if cr is not None:
        assert ms.c_r(rho) == pytest.approx(cr, abs=1e-12)
    for eps, (smax, smin) in smooth.items():
        assert ms.smooth_c_max(rho, eps).value == pytest.approx(smax, abs=1e-7)
        assert ms.smooth_c_min(rho, eps).value == pytest.approx(smin, abs=1e-7)


@settings(max_examples=10)
@given(states(dims=(2, 3, 4)))
def test_c_max_against_cvxpy(rho):
    assert ms.c_max(rho) == pytest.approx(math.log2(oracles.cmax_value(rho)), abs=1e-6)


@settings(max_examples=6)
@given(states(dims=(2, 3)))
def test_smooth_against_cvxpy(rho):
    for eps in (0.05, 0.1):
        assert ms.smooth_c_max(rho, eps).value == pytest.approx(
            math.log2(oracles.smooth_cmax_value(rho, eps)), abs=1e-5)
        assert ms.smooth_c_min(rho, eps).value == pytest.approx(
            -math.log2(oracles.smooth_cmin_value(rho, eps)), abs=1e-5)


@given(states(dims=(2, 3, 4)))
def test_c_r_against_direct_entropies(rho):
    assert ms.c_r(rho) == pytest.approx(max(0.0, oracles.rel_entropy_coherence(rho)), abs=1e-10)

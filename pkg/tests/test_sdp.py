import io
import math

import numpy as np
import pytest
from hypothesis import given

from cohcert import linalg as la
from cohcert.sdp import (INFEASIBLE, OPTIMAL, Block, Constraint, MatrixConstraint, SdpProblem, SolverError,
                         cmax_unreduced_problem, require_optimal, smat, solve_cmax_pair, solve_sdp, svec,
                         trace_to)
from conftest import seeds, states


def lambda_max_problem(a):
    """``max <A, X>`` over density matrices equals the top eigenvalue."""
    n = a.shape[0]
    return SdpProblem([Block(n)], {0: a}, [Constraint({0: np.eye(n)}, 1.0, "==")], "max")


@given(seeds)
def test_svec_smat_roundtrip(seed):
    h = la.random_hermitian(4, seed)
    v = svec(h)
    assert v.shape == (16,)
    assert np.allclose(smat(v, 4), h)
    g = la.random_hermitian(4, seed + 1)
    assert float(svec(h) @ svec(g)) == pytest.approx(np.real(np.trace(h @ g)), abs=1e-10)


@given(seeds)
def test_top_eigenvalue(seed):
    a = la.random_hermitian(3, seed)
    sol = require_optimal(solve_sdp(lambda_max_problem(a)))
    assert sol.primal_value == pytest.approx(np.linalg.eigvalsh(a)[-1], abs=1e-7)
    assert sol.gap <= 1e-7 * (1 + abs(sol.primal_value))
    assert sol.min_eig >= -1e-9


def test_linear_program_with_nonneg_block():
    # min x0 + 2 x1  s.t.  x0 + x1 >= 1
    prob = SdpProblem([Block(2, "nonneg")], {0: np.array([1.0, 2.0])},
                      [Constraint({0: np.array([1.0, 1.0])}, 1.0, ">=")])
    sol = require_optimal(solve_sdp(prob))
    assert sol.primal_value == pytest.approx(1.0, abs=1e-8)
    assert sol.blocks[0] == pytest.approx([1.0, 0.0], abs=1e-6)


def test_box_block_caps_at_identity():
    a = np.diag([2.0, -1.0, 0.5])
    prob = SdpProblem([Block(3, "box")], {0: a}, [], "max")
    sol = require_optimal(solve_sdp(prob))
    assert sol.primal_value == pytest.approx(2.5, abs=1e-7)


def test_infeasible_detected():
    prob = SdpProblem([Block(2)], {0: np.eye(2)}, [Constraint({0: np.eye(2)}, -1.0, "==")])
    sol = solve_sdp(prob)
    assert sol.status == INFEASIBLE
    with pytest.raises(SolverError):
        require_optimal(sol)


def test_problem_validation():
    with pytest.raises(ValueError):
        SdpProblem([], {})
    with pytest.raises(ValueError):
        SdpProblem([Block(2)], {0: np.ones((3, 3))})
    with pytest.raises(ValueError):
        SdpProblem([Block(2)], {1: np.eye(2)})
    with pytest.raises(ValueError):
        SdpProblem([Block(2)], {0: np.array([[0, 1], [0, 0]])})
    with pytest.raises(ValueError):
        SdpProblem([Block(2, "cone")], {})
    with pytest.raises(ValueError):
        SdpProblem([Block(2)], {0: np.eye(2)}, [MatrixConstraint({0: lambda x: x}, np.ones((2, 3)))])


@given(states(dims=(2, 3, 4)))
def test_pair_solver_matches_unreduced_program(rho):
    cert = solve_cmax_pair(rho)
    sol = require_optimal(solve_sdp(cmax_unreduced_problem(rho)))
    assert cert.value == pytest.approx(sol.primal_value, abs=1e-7)
    res = cert.residuals(rho)
    assert res["primal_psd"] >= -1e-9
    assert res["tau_psd"] >= -1e-9
    assert res["tau_diag"] <= 1e-9
    assert abs(res["gap"]) <= 1e-8


def test_pair_solver_is_homogeneous():
    rho = la.random_density_matrix(3, 2, 4)
    assert solve_cmax_pair(0.25 * rho).value == pytest.approx(0.25 * solve_cmax_pair(rho).value, rel=1e-9)
    assert solve_cmax_pair(np.zeros((3, 3))).value == 0.0


def test_trace_writes_iterations():
    buf = io.StringIO()
    with trace_to(buf):
        solve_sdp(lambda_max_problem(np.diag([1.0, 2.0])))
        solve_cmax_pair(la.random_density_matrix(2, 2, 0))
    lines = buf.getvalue().strip().splitlines()
    assert lines[0].startswith("solver,iter")
    assert any(line.startswith("cmax,") for line in lines)
    assert len(lines) > 3

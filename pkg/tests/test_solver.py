import numpy as np
import pytest

from steerkit import fixtures as fx
from steerkit import linalg, robustness
from steerkit.errors import ParseError
from steerkit.sdp import ProblemBuilder, SolverSettings, export_sdpa, import_sdpa, solve
from steerkit.sdp.solver import presolve

from reference import solve_sdpa_with_cvxopt


def sym_basis(n):
    out = []
    for i in range(n):
        for j in range(i, n):
            e = np.zeros((n, n))
            e[i, j] = e[j, i] = 1.0
            out.append(e)
    return out


def max_trace_problem(d=2):
    """max tr X s.t. 0 <= X <= 1, written as min -tr X."""
    basis = sym_basis(d)
    b = ProblemBuilder(len(basis), origin="toy max trace")
    lo, hi = b.add_block(d, "X >= 0"), b.add_block(d, "1 - X >= 0")
    b.set_constant(hi, -np.eye(d))
    for i, e in enumerate(basis):
        b.c[i] = -np.trace(e)
        b.add_term(lo, i, e)
        b.add_term(hi, i, -e)
    return b.build()


def lambda_min_complex(h):
    """min Re tr(rho H) over density matrices, with rho in real-embedded form."""
    d = h.shape[0]
    basis = linalg.hermitian_basis(d)
    b = ProblemBuilder(d * d, origin="complex lambda_min")
    blk = b.add_block(2 * d, "rho >= 0")
    tr = b.add_block(1, "tr rho >= 1")
    cap = b.add_block(1, "tr rho <= 1")
    b.set_constant(tr, np.ones((1, 1)))
    b.set_constant(cap, -np.ones((1, 1)))
    for i, e in enumerate(basis):
        b.c[i] = np.trace(e @ h).real
        b.add_term(blk, i, linalg.real_embedding(e))
        b.add_term(tr, i, np.array([[np.trace(e).real]]))
        b.add_term(cap, i, -np.array([[np.trace(e).real]]))
    return b.build()


def test_toy_max_trace():
    sol = solve(max_trace_problem())
    assert sol.optimal
    assert sol.objective == pytest.approx(-2.0, abs=1e-8)
    assert sol.gap <= 1e-7


def test_complex_embedding_exact_values():
    h = np.array([[1.0, 1j], [-1j, 1.0]])
    sol = solve(lambda_min_complex(h))
    assert sol.optimal
    assert sol.objective == pytest.approx(0.0, abs=1e-8)
    h = np.array([[2.0, 1 - 1j], [1 + 1j, -1.0]])
    sol = solve(lambda_min_complex(h))
    assert sol.objective == pytest.approx(np.linalg.eigvalsh(h)[0], abs=1e-8)


def test_single_measurement_is_lhs():
    rep = robustness.steering_robustness(fx.lhs_example(3, inputs=1, outcomes=2))
    assert rep.status == "Optimal"
    assert rep.value == pytest.approx(0.0, abs=1e-7)


def test_deterministic_output():
    p = robustness.incompatibility_problem(fx.appc_measurements()[0])
    a, b = solve(p), solve(p)
    assert np.array_equal(a.x, b.x)
    assert a.iterations == b.iterations


def test_scaling_invariance():
    p = robustness.steering_problem(fx.qutrit_canonical())
    base = solve(p)
    p.c = 3.0 * p.c
    scaled = solve(p)
    assert scaled.optimal
    assert scaled.objective == pytest.approx(3.0 * base.objective, abs=1e-7)


def test_weak_duality_at_termination():
    sol = solve(robustness.steering_problem(fx.appc_assemblage()))
    assert sol.optimal
    assert sol.dual_objective <= sol.primal_objective + 1e-7
    assert sol.primal_infeasibility <= 1e-7 and sol.dual_infeasibility <= 1e-7
    for xb in sol.X:
        assert np.linalg.eigvalsh(xb)[0] >= -1e-9


def test_infeasible_and_unbounded_are_reported():
    b = ProblemBuilder(1)
    one, two = b.add_block(1), b.add_block(1)
    b.set_constant(one, np.ones((1, 1)))
    b.add_term(one, 0, np.ones((1, 1)))
    b.add_term(two, 0, -np.ones((1, 1)))
    b.c[0] = 1.0
    assert not solve(b.build()).optimal
    b = ProblemBuilder(1)
    blk = b.add_block(1)
    b.add_term(blk, 0, np.ones((1, 1)))
    b.c[0] = -1.0
    assert not solve(b.build()).optimal


def test_presolve_drops_dependent_variable():
    b = ProblemBuilder(3)
    blk = b.add_block(2)
    e = sym_basis(2)
    b.add_term(blk, 0, e[0])
    b.add_term(blk, 1, e[2])
    b.add_term(blk, 2, e[0] + e[2])
    b.c[:] = [1.0, 1.0, 2.0]
    reduced, keep, consistent = presolve(b.build())
    assert consistent and reduced.n_vars == 2 and keep.size == 2
    sol = solve(b.build())
    assert sol.optimal and sol.objective == pytest.approx(0.0, abs=1e-8)
    assert len(sol.removed_vars) == 1


def test_sdpa_round_trip():
    p = robustness.incompatibility_problem(fx.appc_measurements()[0])
    text = export_sdpa(p)
    assert text == export_sdpa(p)
    q = import_sdpa(text)
    assert export_sdpa(q) == text
    assert q.origin == p.origin
    assert [b.label for b in q.blocks] == [b.label for b in p.blocks]
    assert solve(q).objective == pytest.approx(solve(p).objective, abs=1e-9)


def test_sdpa_header_layout():
    text = export_sdpa(max_trace_problem())
    body = [ln for ln in text.splitlines() if not ln.startswith("*")]
    assert body[:4] == ["3", "2", "2 2", "-1.0 -0.0 -1.0"]
    assert body[4] == "0 2 1 1 -1.0"
    for ln in body[4:]:
        _, _, i, j, _ = ln.split()
        assert int(i) <= int(j)


@pytest.mark.parametrize("text", ["", "2\n1\n2\n1.0\n", "1\n1\n2\n1.0\n1 1 3 3 1.0\n", "1\n1\n2\n1.0\n1 1 1 x 1.0\n"])
def test_sdpa_parse_errors(text):
    with pytest.raises(ParseError):
        import_sdpa(text)


def test_cvxopt_agrees_on_appc():
    p = robustness.incompatibility_problem(fx.appc_measurements()[0])
    ours = solve(p).objective
    assert ours - 1 == pytest.approx(0.1481, abs=1e-4)
    assert solve_sdpa_with_cvxopt(export_sdpa(p)) == pytest.approx(ours, abs=1e-5)


def test_settings_cap_iterations():
    sol = solve(robustness.steering_problem(fx.qutrit_canonical()), SolverSettings(max_iter=2))
    assert sol.status == "MaxIter"
    assert np.isfinite(sol.gap)

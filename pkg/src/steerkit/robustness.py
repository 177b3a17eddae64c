"""Steering and incompatibility robustness via the built-in SDP solver.

Both problems are posed over deterministic strategies ``lambda = (a_1..a_m)``
with complex Hermitian unknowns written in real coordinates
(:func:`linalg.hermitian_basis`) and every PSD constraint real-embedded.

Steering robustness (primal, ``1 + SR``)::

    min  sum_l tr rho_l
    s.t. rho_l >= 0,   sum_l D(a|x,l) rho_l - sigma[x,a] >= 0

whose SDPA dual is ``max sum tr(F sigma)`` s.t. ``1 >= sum D F``, ``F >= 0``.

Incompatibility robustness (primal, ``1 + IR``)::

    min  s
    s.t. G_l >= 0,   sum_l G_l = s 1,   sum_l D(a|x,l) G_l - B[x,a] >= 0

with the equality removed by eliminating the last ``G``.  Its dual is
``max sum tr(omega B)`` s.t. ``eta >= sum D omega``, ``omega >= 0``,
``tr eta = 1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import linalg
from .assemblage import Assemblage, MeasurementAssemblage, Scenario
from .config import Tolerances, resolve
from .errors import InfeasibleWitness, SolverFailure, TooManyStrategies
from .sdp import ProblemBuilder, SdpProblem, SolverSettings, solve
from .sdp.solver import SdpSolution


class DeterministicStrategySet(NamedTuple):
    scenario: Scenario
    table: np.ndarray  # (n_lambda, inputs, outcomes), 0/1

    @property
    def size(self) -> int:
        return self.table.shape[0]


def enumerate_deterministic(scenario: Scenario, tol: Tolerances | None = None) -> DeterministicStrategySet:
    tol = resolve(tol)
    m, k = scenario.inputs, scenario.outcomes
    count = k**m
    if count > tol.strategy_cap:
        raise TooManyStrategies(f"{k}^{m} = {count} strategies exceed the cap {tol.strategy_cap}")
    table = np.zeros((count, m, k), dtype=np.int8)
    for lam, choice in enumerate(itertools.product(range(k), repeat=m)):
        table[lam, np.arange(m), choice] = 1
    return DeterministicStrategySet(scenario, table)


@dataclass
class RobustnessReport:
    kind: str  # "steering" or "incompatibility"
    value: float
    witness: np.ndarray  # F[x, a] or omega[x, a]
    eta: np.ndarray | None
    primal_objective: float
    dual_objective: float
    duality_gap: float
    iterations: int
    status: str
    witness_objective: float
    feasibility_residual: float
    solution: SdpSolution | None = field(default=None, repr=False)
    problem: SdpProblem | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        from .assemblage import encode_matrix

        out = {
            "kind": self.kind,
            "value": self.value,
            "primal_objective": self.primal_objective,
            "dual_objective": self.dual_objective,
            "duality_gap": self.duality_gap,
            "iterations": self.iterations,
            "status": self.status,
            "witness_objective": self.witness_objective,
            "feasibility_residual": self.feasibility_residual,
            "witness": encode_matrix(self.witness),
        }
        if self.eta is not None:
            out["eta"] = encode_matrix(self.eta)
        return out


# -- problem assembly -----------------------------------------------------------

def _embedded_basis(d: int) -> np.ndarray:
    return np.array([linalg.real_embedding(e) for e in linalg.hermitian_basis(d)])


def steering_problem(asm: Assemblage, tol: Tolerances | None = None) -> SdpProblem:
    strategies = enumerate_deterministic(asm.scenario, tol)
    m, k, d = asm.scenario
    n_lam = strategies.size
    nb = d * d
    basis = linalg.hermitian_basis(d)
    emb = _embedded_basis(d)
    b = ProblemBuilder(n_lam * nb, origin=f"steering robustness m={m} k={k} d={d}")
    trace_coords = np.real(np.einsum("tii->t", basis))
    for lam in range(n_lam):
        b.c[lam * nb:(lam + 1) * nb] = trace_coords
        for t in range(nb):
            b.var_labels[lam * nb + t] = f"rho[{lam}][{t}]"
    for lam in range(n_lam):
        blk = b.add_block(2 * d, f"rho_lambda >= 0, lambda={lam + 1}")
        for t in range(nb):
            b.add_term(blk, lam * nb + t, emb[t])
    for x in range(m):
        for a in range(k):
            blk = b.add_block(2 * d, f"sum_lambda D rho_lambda >= sigma, x={x + 1} a={a + 1}")
            b.set_constant(blk, linalg.real_embedding(asm.sigma[x, a]))
            for lam in np.flatnonzero(strategies.table[:, x, a]):
                for t in range(nb):
                    b.add_term(blk, lam * nb + t, emb[t])
    return b.build()


def incompatibility_problem(meas: MeasurementAssemblage, tol: Tolerances | None = None) -> SdpProblem:
    strategies = enumerate_deterministic(meas.scenario, tol)
    m, k, d = meas.scenario
    n_lam = strategies.size
    nb = d * d
    emb = _embedded_basis(d)
    eye = np.eye(2 * d)
    s_var = (n_lam - 1) * nb
    b = ProblemBuilder(s_var + 1, origin=f"incompatibility robustness m={m} k={k} d={d}")
    b.c[s_var] = 1.0
    for lam in range(n_lam - 1):
        for t in range(nb):
            b.var_labels[lam * nb + t] = f"G[{lam}][{t}]"
    b.var_labels[s_var] = "s"
    for lam in range(n_lam - 1):
        blk = b.add_block(2 * d, f"G_lambda >= 0, lambda={lam + 1}")
        for t in range(nb):
            b.add_term(blk, lam * nb + t, emb[t])
    blk = b.add_block(2 * d, f"G_lambda >= 0, lambda={n_lam} (s*1 - sum of others)")
    b.add_term(blk, s_var, eye)
    for lam in range(n_lam - 1):
        for t in range(nb):
            b.add_term(blk, lam * nb + t, -emb[t])
    last = n_lam - 1
    for x in range(m):
        for a in range(k):
            blk = b.add_block(2 * d, f"sum_lambda D G_lambda >= B, x={x + 1} a={a + 1}")
            b.set_constant(blk, linalg.real_embedding(meas.povm[x, a]))
            lams = np.flatnonzero(strategies.table[:, x, a])
            for lam in lams:
                if lam == last:
                    continue
                for t in range(nb):
                    b.add_term(blk, lam * nb + t, emb[t])
            if strategies.table[last, x, a]:
                b.add_term(blk, s_var, eye)
                for lam in range(n_lam - 1):
                    for t in range(nb):
                        b.add_term(blk, lam * nb + t, -emb[t])
    return b.build()


# -- solves ---------------------------------------------------------------------

def _checked_solve(problem: SdpProblem, settings: SolverSettings | None) -> SdpSolution:
    sol = solve(problem, settings)
    if not sol.optimal:
        raise SolverFailure(f"{problem.origin}: solver status {sol.status} "
                            f"(gap {sol.rel_gap:.2e}, pinf {sol.primal_infeasibility:.2e}, "
                            f"dinf {sol.dual_infeasibility:.2e})", sol)
    return sol


def steering_robustness(asm: Assemblage, tol: Tolerances | None = None,
                        settings: SolverSettings | None = None) -> RobustnessReport:
    """SR with its optimal steering witness ``F[x, a]``."""
    tol = resolve(tol)
    problem = steering_problem(asm, tol)
    sol = _checked_solve(problem, settings)
    m, k, _ = asm.scenario
    n_lam = k**m
    ys = sol.Y
    witness = np.array([[linalg.from_real_embedding(ys[n_lam + x * k + a]) for a in range(k)]
                        for x in range(m)])
    objective = float(np.real(np.einsum("xaij,xaji->", witness, asm.sigma)))
    residual = steering_witness_residual(witness)
    value = sol.objective - 1.0
    return RobustnessReport("steering", _clip(value, tol), witness, None, sol.primal_objective,
                            sol.dual_objective, sol.gap, sol.iterations, sol.status, objective,
                            residual, sol, problem)


def incompatibility_robustness(meas: MeasurementAssemblage, tol: Tolerances | None = None,
                               settings: SolverSettings | None = None) -> RobustnessReport:
    """IR with its optimal witness ``(omega[x, a], eta)``."""
    tol = resolve(tol)
    problem = incompatibility_problem(meas, tol)
    sol = _checked_solve(problem, settings)
    strategies = enumerate_deterministic(meas.scenario, tol)
    m, k, _ = meas.scenario
    n_lam = strategies.size
    ys = sol.Y
    omega = np.array([[linalg.from_real_embedding(ys[n_lam + x * k + a]) for a in range(k)]
                      for x in range(m)])
    last = n_lam - 1
    eta = linalg.from_real_embedding(ys[last])
    eta = eta + np.einsum("xa,xaij->ij", strategies.table[last], omega)
    eta = linalg.herm(eta)
    objective = float(np.real(np.einsum("xaij,xaji->", omega, meas.povm)))
    residual = incompatibility_witness_residual(omega, eta)
    value = sol.objective - 1.0
    return RobustnessReport("incompatibility", _clip(value, tol), omega, eta, sol.primal_objective,
                            sol.dual_objective, sol.gap, sol.iterations, sol.status, objective,
                            residual, sol, problem)


def _clip(value: float, tol: Tolerances) -> float:
    # tiny negative values are solver noise around an unsteerable/compatible optimum
    return max(value, 0.0) if value > -tol.solver_tol else value


def is_lhs(asm: Assemblage, tol: Tolerances | None = None) -> bool:
    tol = resolve(tol)
    return steering_robustness(asm, tol).value <= tol.membership_tol


def is_jointly_measurable(meas: MeasurementAssemblage, tol: Tolerances | None = None) -> bool:
    tol = resolve(tol)
    return incompatibility_robustness(meas, tol).value <= tol.membership_tol


def class_supremum(asm: Assemblage, tol: Tolerances | None = None) -> float:
    """Largest steering robustness reachable within the filter class of ``asm``.

    Evaluated as the incompatibility robustness of the steering-equivalent
    observables; the direct optimisation over reduced states is not convex.
    """
    from .seo import compute_seo

    return incompatibility_robustness(compute_seo(asm, tol=tol).seo, tol).value


# -- witnesses ------------------------------------------------------------------

def _strategy_sums(family: np.ndarray) -> np.ndarray:
    m, k, d, _ = family.shape
    table = enumerate_deterministic(Scenario(m, k, d), Tolerances(strategy_cap=10**9)).table
    return np.einsum("lxa,xaij->lij", table, family)


def steering_witness_residual(F: np.ndarray) -> float:
    """Worst violation of ``F >= 0`` and ``1 >= sum_x F[x, lambda_x]``."""
    d = F.shape[-1]
    worst = max(0.0, -min(linalg.min_eigenvalue(f) for f in F.reshape(-1, d, d)))
    for s in _strategy_sums(F):
        worst = max(worst, -linalg.min_eigenvalue(np.eye(d) - s))
    return worst


def incompatibility_witness_residual(omega: np.ndarray, eta: np.ndarray) -> float:
    """Worst violation of ``omega >= 0``, ``eta >= sum D omega`` and ``tr eta = 1``."""
    d = omega.shape[-1]
    worst = max(0.0, -min(linalg.min_eigenvalue(w) for w in omega.reshape(-1, d, d)))
    for s in _strategy_sums(omega):
        worst = max(worst, -linalg.min_eigenvalue(eta - s))
    return max(worst, abs(float(np.trace(eta).real) - 1.0))


def witness_transform(family: np.ndarray, eta: np.ndarray, direction: str,
                      tol: Tolerances | None = None, check_tol: float | None = None) -> np.ndarray:
    """Map witnesses between the incompatibility and class-steering problems.

    ``direction="to_steering"``: ``F = eta^{-1/2} omega eta^{-1/2}`` (inverse on
    the range of ``eta``).  ``direction="to_incompatibility"``:
    ``omega = eta^{1/2} F eta^{1/2}``.  Both preserve the objective
    ``tr sum omega B = tr sum F eta^{1/2} B eta^{1/2}``.
    """
    tol = resolve(tol)
    check_tol = tol.solver_tol * 10 if check_tol is None else check_tol
    family = np.asarray(family, dtype=complex)
    if direction == "to_steering":
        res = incompatibility_witness_residual(family, eta)
        if res > check_tol:
            raise InfeasibleWitness(f"incompatibility witness violates constraints by {res:.3e}")
        root_inv, _ = linalg.pinv_sqrt(eta, tol=tol)
        return linalg.herm(root_inv @ family @ root_inv)
    if direction == "to_incompatibility":
        res = steering_witness_residual(family)
        if res > check_tol:
            raise InfeasibleWitness(f"steering witness violates constraints by {res:.3e}")
        if abs(np.trace(eta).real - 1.0) > check_tol or not linalg.is_psd(eta, tol):
            raise InfeasibleWitness("eta must be a density matrix")
        root = linalg.sqrt_psd(eta, tol)
        return linalg.herm(root @ family @ root)
    raise ValueError(f"unknown direction {direction!r}")

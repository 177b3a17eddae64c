"""Dense primal-dual interior-point method for :class:`SdpProblem`.

Infeasible-start path following with the HKM search direction and a
Mehrotra predictor-corrector step.  The Schur complement
``M_ij = tr(F_i X^{-1} F_j Y)`` is assembled block by block and factorised
with a dense Cholesky decomposition.  Everything is deterministic: no
random starts, no threading.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .problem import Block, SdpProblem

log = logging.getLogger(__name__)

OPTIMAL = "Optimal"
MAX_ITER = "MaxIter"
INFEASIBLE = "Infeasible"
NUMERICAL_TROUBLE = "NumericalTrouble"


@dataclass(frozen=True)
class SolverSettings:
    max_iter: int = 200
    step_fraction: float = 0.98
    gap_tol: float = 1e-10  # target relative gap
    feas_tol: float = 1e-10  # target relative residuals
    accept_tol: float = 1e-7  # weakest accuracy still reported as Optimal
    pivot_tol: float = 1e-10  # presolve rank cutoff
    divergence: float = 1e12
    patience: int = 15  # iterations without improvement before giving up


@dataclass
class SdpSolution:
    x: np.ndarray
    X: list[np.ndarray]
    Y: list[np.ndarray]
    primal_objective: float
    dual_objective: float
    gap: float
    rel_gap: float
    primal_infeasibility: float
    dual_infeasibility: float
    iterations: int
    status: str
    removed_vars: list[int] = field(default_factory=list)
    history: list[tuple[float, float, float, float]] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def objective(self) -> float:
        return 0.5 * (self.primal_objective + self.dual_objective)


def _sym(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def _vectorise(problem: SdpProblem) -> np.ndarray:
    """Rows are the upper triangles of each F_i (i >= 1), off-diagonals scaled by sqrt(2)."""
    cols = []
    for b in problem.blocks:
        iu = np.triu_indices(b.size)
        w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
        part = np.zeros((problem.n_vars, iu[0].size))
        part[b.var_idx] = b.mats[:, iu[0], iu[1]] * w
        cols.append(part)
    return np.hstack(cols) if cols else np.zeros((problem.n_vars, 0))


def presolve(problem: SdpProblem, pivot_tol: float = 1e-10):
    """Drop variables whose ``F_i`` are linearly dependent on the others.

    Returns ``(reduced_problem, kept_indices, consistent)``.  ``consistent`` is
    False when the dual equalities ``F_i . Y = c_i`` contradict each other.
    """
    amat = _vectorise(problem)
    n = problem.n_vars
    if n == 0:
        return problem, np.arange(0), True
    _, r, piv = sla.qr(amat.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return problem, np.arange(n), not np.any(problem.c)
    rank = int(np.sum(diag > pivot_tol * diag[0]))
    if rank == n:
        return problem, np.arange(n), True
    keep = np.sort(piv[:rank])
    drop = np.sort(piv[rank:])
    coef, *_ = np.linalg.lstsq(amat[keep].T, amat[drop].T, rcond=None)
    c_pred = coef.T @ problem.c[keep]
    scale = 1.0 + np.abs(problem.c).max()
    consistent = bool(np.all(np.abs(c_pred - problem.c[drop]) <= 1e-8 * scale))
    remap = -np.ones(n, dtype=int)
    remap[keep] = np.arange(rank)
    blocks = []
    for b in problem.blocks:
        mask = remap[b.var_idx] >= 0
        blocks.append(Block(b.size, b.f0, remap[b.var_idx[mask]], b.mats[mask], b.label))
    reduced = SdpProblem(problem.c[keep].copy(), blocks, problem.origin,
                         [problem.var_labels[i] for i in keep] if problem.var_labels else [])
    return reduced, keep, consistent


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest alpha with x + alpha dx PSD (x positive definite)."""
    try:
        lower = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return 0.0
    li = sla.solve_triangular(lower, np.eye(x.shape[0]), lower=True)
    lam = np.linalg.eigvalsh(_sym(li @ dx @ li.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _step(xs, dxs, fraction: float) -> float:
    amax = min(_max_step(x, d) for x, d in zip(xs, dxs))
    return min(1.0, fraction * amax)


def _positive_definite(mats) -> bool:
    try:
        for a in mats:
            np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False
    return True


def _advance(mats, dirs, alpha: float):
    """``mats + alpha dirs``, shrinking ``alpha`` until rounding keeps it positive definite."""
    for _ in range(40):
        trial = [_sym(a + alpha * d) for a, d in zip(mats, dirs)]
        if _positive_definite(trial):
            return trial, alpha
        alpha *= 0.5
    return list(mats), 0.0


def _initial_scales(problem: SdpProblem) -> tuple[float, float]:
    n = problem.total_size
    norms = np.zeros(problem.n_vars)
    f0_norm = 0.0
    for b in problem.blocks:
        np.add.at(norms, b.var_idx, np.einsum("pij,pij->p", b.mats, b.mats))
        f0_norm += float(np.sum(b.f0**2))
    norms = np.sqrt(norms)
    alpha = n * float(np.max((1.0 + np.abs(problem.c)) / (1.0 + norms))) if problem.n_vars else 1.0
    beta = (1.0 + max(float(norms.max(initial=0.0)), np.sqrt(f0_norm))) / np.sqrt(n)
    return 10.0 * alpha, 10.0 * beta


def solve(problem: SdpProblem, settings: SolverSettings | None = None) -> SdpSolution:
    """Solve the primal/dual pair; the status is always reported, never raised."""
    settings = settings or SolverSettings()
    problem.validate()
    reduced, keep, consistent = presolve(problem, settings.pivot_tol)
    removed = sorted(set(range(problem.n_vars)) - set(keep.tolist()))
    if not consistent:
        nb = [np.zeros((b.size, b.size)) for b in problem.blocks]
        return SdpSolution(np.zeros(problem.n_vars), nb, nb, np.nan, np.nan, np.inf, np.inf,
                           np.inf, np.inf, 0, INFEASIBLE, removed)
    sol = _solve_reduced(reduced, settings)
    x_full = np.zeros(problem.n_vars)
    x_full[keep] = sol.x
    sol.x = x_full
    sol.removed_vars = removed
    return sol


def _solve_reduced(problem: SdpProblem, s: SolverSettings) -> SdpSolution:
    blocks = problem.blocks
    n_total = problem.total_size
    c = problem.c
    m = problem.n_vars
    f0_norm = np.sqrt(sum(float(np.sum(b.f0**2)) for b in blocks))
    c_norm = float(np.linalg.norm(c))

    y_scale, x_scale = _initial_scales(problem)
    x = np.zeros(m)
    X = [x_scale * np.eye(b.size) for b in blocks]
    Y = [y_scale * np.eye(b.size) for b in blocks]
    eyes = [np.eye(b.size) for b in blocks]

    history = []
    status = MAX_ITER
    stalled = 0
    it = 0
    best = None  # (merit, iteration, state); rounding can make late iterates drift
    for it in range(s.max_iter + 1):
        ax = problem.affine(x)
        rp = [a - b.f0 - xb for a, b, xb in zip(ax, blocks, X)]
        rd = c - problem.adjoint(Y)
        pobj = float(c @ x)
        dobj = float(sum(np.sum(b.f0 * yb) for b, yb in zip(blocks, Y)))
        comp = float(sum(np.sum(xb * yb) for xb, yb in zip(X, Y)))
        mu = comp / n_total
        pinf = np.sqrt(sum(float(np.sum(r**2)) for r in rp)) / (1.0 + f0_norm)
        dinf = float(np.linalg.norm(rd)) / (1.0 + c_norm)
        denom = 1.0 + abs(pobj) + abs(dobj)
        rel_gap = max(abs(pobj - dobj), comp) / denom
        history.append((pobj, dobj, pinf, dinf))
        log.debug("it=%d pobj=%.10g dobj=%.10g pinf=%.2e dinf=%.2e gap=%.2e", it, pobj, dobj, pinf, dinf, rel_gap)

        merit = max(pinf, dinf, rel_gap)
        if best is None or merit < best[0]:
            best = (merit, it, (x, X, Y, pobj, dobj, pinf, dinf, rel_gap))
        if pinf <= s.feas_tol and dinf <= s.feas_tol and rel_gap <= s.gap_tol:
            status = OPTIMAL
            break
        if max(abs(pobj), abs(dobj), float(np.max(np.abs(x), initial=0.0))) > s.divergence:
            status = INFEASIBLE
            break
        if it == s.max_iter or stalled >= 3 or it - best[1] >= s.patience:
            break

        try:
            chol_x = [sla.cho_factor(xb, lower=True) for xb in X]
        except np.linalg.LinAlgError:
            status = NUMERICAL_TROUBLE
            break
        xinv = [_sym(sla.cho_solve(cf, e)) for cf, e in zip(chol_x, eyes)]

        schur = np.zeros((m, m))
        for b, xi, yb in zip(blocks, xinv, Y):
            p = b.var_idx.size
            if p == 0:
                continue
            t = xi @ b.mats @ yb
            sub = b.mats.reshape(p, -1) @ np.swapaxes(t, 1, 2).reshape(p, -1).T
            schur[np.ix_(b.var_idx, b.var_idx)] += sub
        schur = _sym(schur)
        try:
            chol_m = sla.cho_factor(schur, lower=True)
        except np.linalg.LinAlgError:
            reg = 1e-14 * max(1.0, float(np.trace(schur)) / max(m, 1))
            try:
                chol_m = sla.cho_factor(schur + reg * np.eye(m), lower=True)
            except np.linalg.LinAlgError:
                status = NUMERICAL_TROUBLE
                break

        def direction(target, corr):
            g = []
            for k, (xi, yb, r) in enumerate(zip(xinv, Y, rp)):
                inner = target * eyes[k] - r @ yb
                if corr is not None:
                    inner = inner - corr[k]
                g.append(xi @ inner)
            rhs = problem.adjoint(g) - c
            dx = sla.cho_solve(chol_m, rhs) if m else np.zeros(0)
            adx = problem.affine(dx)
            dX = [_sym(a + r) for a, r in zip(adx, rp)]
            dY = []
            for k, (xi, yb) in enumerate(zip(xinv, Y)):
                inner = target * eyes[k]
                if corr is not None:
                    inner = inner - corr[k]
                dY.append(_sym(xi @ inner - yb - xi @ dX[k] @ yb))
            return dx, dX, dY

        # predictor
        dx_a, dX_a, dY_a = direction(0.0, None)
        ap = _step(X, dX_a, 1.0)
        ad = _step(Y, dY_a, 1.0)
        mu_aff = sum(float(np.sum((xb + ap * dx) * (yb + ad * dy)))
                     for xb, dx, yb, dy in zip(X, dX_a, Y, dY_a)) / n_total
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0
        corr = [dx @ dy for dx, dy in zip(dX_a, dY_a)]
        # corrector
        dx, dX, dY = direction(sigma * mu, corr)
        ap = _step(X, dX, s.step_fraction)
        ad = _step(Y, dY, s.step_fraction)
        X, ap = _advance(X, dX, ap)
        Y, ad = _advance(Y, dY, ad)
        stalled = stalled + 1 if max(ap, ad) < 1e-10 else 0
        x = x + ap * dx

    if status != INFEASIBLE:
        x, X, Y, pobj, dobj, pinf, dinf, rel_gap = best[2]
    if status not in (OPTIMAL, INFEASIBLE) and pinf <= s.accept_tol and dinf <= s.accept_tol \
            and rel_gap <= s.accept_tol:
        status = OPTIMAL
    return SdpSolution(x, X, Y, pobj, dobj, abs(pobj - dobj), rel_gap, pinf, dinf, it, status,
                       history=history)

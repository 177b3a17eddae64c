"""Single-Kraus local filters on the trusted side.

A filter ``K`` (``K^dagger K <= 1``) maps ``sigma -> K sigma K^dagger / p`` with
``p = tr(rho_B K^dagger K)``.  Between two assemblages of the same class the
optimal filter is ``K = alpha rho1^{1/2} U rho2^{-1/2} + (completion on
ker rho2)`` with ``alpha^2 = 1 / lambda_max(rho2^{-1/2} U^dagger rho1 U rho2^{-1/2})``,
and its success probability is exactly ``alpha^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .assemblage import (
    Assemblage,
    MeasurementAssemblage,
    SchmidtVector,
    check_measurements,
    decode_matrix,
    encode_matrix,
    from_pure_schmidt,
    from_state_and_measurements,
    reduced_state,
    validate,
)
from .config import Tolerances, resolve
from .errors import FilterAnnihilates, NotEquivalent, SchemaError
from .robustness import RobustnessReport, incompatibility_robustness, steering_robustness
from .seo import SeoResult, compute_seo, equivalence_residual

THEOREM_ONE = "TheoremOne"
DISTILL = "Distill"
DILUTE = "Dilute"
CUSTOM = "Custom"


@dataclass
class Filter:
    kraus: np.ndarray
    p_succ: float
    construction: str = CUSTOM
    meta: dict = field(default_factory=dict)
    seed: int | None = None

    def to_dict(self) -> dict:
        meta = {k: (encode_matrix(v) if isinstance(v, np.ndarray) else v) for k, v in self.meta.items()}
        return {"kraus": encode_matrix(self.kraus), "p_succ": self.p_succ,
                "construction": self.construction, "meta": meta, "seed": self.seed}

    @classmethod
    def from_dict(cls, data: dict) -> "Filter":
        try:
            kraus = decode_matrix(data["kraus"], "kraus")
            return cls(kraus, float(data["p_succ"]), str(data.get("construction", CUSTOM)),
                       dict(data.get("meta", {})), data.get("seed"))
        except KeyError as exc:
            raise SchemaError(f"filter JSON is missing field {exc}") from exc


def apply_filter(asm: Assemblage, kraus, tol: Tolerances | None = None) -> tuple[Assemblage, float]:
    """Return the post-selected assemblage and its success probability."""
    tol = resolve(tol)
    k = linalg.as_operator(kraus)
    if k.shape[0] != asm.dim:
        raise ValueError(f"filter of size {k.shape[0]} for a {asm.dim}-dimensional assemblage")
    excess = linalg.max_eigenvalue(linalg.dag(k) @ k) - 1.0
    if excess > tol.psd_tol:
        raise ValueError(f"K^dagger K exceeds the identity by {excess:.3e}")
    rho = reduced_state(asm, tol)
    p = float(np.trace(rho @ linalg.dag(k) @ k).real)
    if p <= tol.p_floor:
        raise FilterAnnihilates(f"success probability {p:.3e} is below p_floor")
    out = linalg.herm(k @ asm.sigma @ linalg.dag(k)) / p
    return Assemblage(out), p


def p_succ_bounds(rho_target, rho_source, tol: Tolerances | None = None) -> tuple[float, float]:
    """Eigenvalue bracket ``[l_min(rho2)/l_max(rho1), l_max(rho2)/l_min(rho1)]``.

    ``l_min`` is the smallest non-zero eigenvalue; ``rho1`` is the target
    reduced state and ``rho2`` the source.
    """
    tol = resolve(tol)

    def extremes(rho):
        w = np.linalg.eigvalsh(linalg.check_hermitian(rho, tol))
        nz = w[w > tol.rank_tol * w[-1]]
        return nz[0], nz[-1]

    lo1, hi1 = extremes(rho_target)
    lo2, hi2 = extremes(rho_source)
    return float(lo2 / hi1), float(hi2 / lo1)


def synthesize_filter(target: Assemblage, source: Assemblage, u,
                      tol: Tolerances | None = None) -> Filter:
    """Optimal filter taking ``source`` to ``target`` given the class witness ``U``.

    ``U`` must satisfy ``B_target (+) 0 = U (B_source (+) 0) U^dagger``.  The
    kernel of the source reduced state is mapped isometrically by ``U``, which
    keeps ``K^dagger K <= 1`` even when the two supports differ.
    """
    tol = resolve(tol)
    u = linalg.as_operator(u)
    s1, s2 = compute_seo(target, tol=tol), compute_seo(source, tol=tol)
    if s1.rank != s2.rank:
        raise NotEquivalent(f"ranks differ ({s1.rank} vs {s2.rank})")
    residual = equivalence_residual(s1, s2, u)
    if residual > tol.equiv_tol:
        raise NotEquivalent(f"class residual {residual:.3e} exceeds equiv_tol")
    rho1 = reduced_state(target, tol)
    rho2 = reduced_state(source, tol)
    root1 = _range_sqrt(rho1, s1)
    inv_root2 = linalg.dag(s2.projector) @ linalg.pinv_sqrt(s2.reduced, rank_tol=0.0, tol=tol)[0] @ s2.projector
    k_tilde = root1 @ u @ inv_root2
    lam = linalg.max_eigenvalue(linalg.dag(k_tilde) @ k_tilde)
    alpha2 = 1.0 / lam
    kernel2 = np.eye(source.dim) - linalg.dag(s2.projector) @ s2.projector
    kraus = np.sqrt(alpha2) * k_tilde + u @ kernel2
    return Filter(kraus, float(alpha2), THEOREM_ONE, {"unitary": u, "class_residual": residual})


def _range_sqrt(rho: np.ndarray, seo: SeoResult) -> np.ndarray:
    p = seo.projector
    return linalg.dag(p) @ linalg.sqrt_psd(seo.reduced) @ p


def conversion_probability(target: Assemblage, source: Assemblage, u, tol: Tolerances | None = None) -> float:
    """``1 / lambda_max(rho2^{-1/2} U^dagger rho1 U rho2^{-1/2})`` evaluated directly."""
    tol = resolve(tol)
    rho1, rho2 = reduced_state(target, tol), reduced_state(source, tol)
    inv2, _ = linalg.pinv_sqrt(rho2, tol=tol)
    u = np.asarray(u, dtype=complex)
    return 1.0 / linalg.max_eigenvalue(inv2 @ linalg.dag(u) @ rho1 @ u @ inv2)


def er_random_pure(mu, dA: int, dB: int) -> float:
    """Random entanglement robustness ``mu_1 mu_2 dA dB`` of a pure state."""
    coeffs = mu.coefficients if isinstance(mu, SchmidtVector) else np.asarray(mu, dtype=float)
    top = np.sort(coeffs)[::-1]
    if top.size < 2:
        return 0.0
    return float(top[0] * top[1] * dA * dB)


# -- class extremes ---------------------------------------------------------------

def regularize_eta(eta: np.ndarray, delta: float, tol: Tolerances | None = None) -> tuple[np.ndarray, int]:
    """``(1 - delta) eta + delta (1 - P_eta) / (d - r)``; unchanged when full rank."""
    tol = resolve(tol)
    proj, r = linalg.range_projector(eta, tol=tol)
    d = eta.shape[0]
    if r == d:
        return linalg.herm(eta), r
    comp = np.eye(d) - linalg.dag(proj) @ proj
    return linalg.herm((1.0 - delta) * eta + delta * comp / (d - r)), r


def _delta_schedule(eps: float, scenario, rank: int) -> list[float]:
    m, k, _ = scenario
    first = min(eps / (4 * m * k * rank), 1e-3)
    return [first / 10**j for j in range(7)]


@dataclass
class DistillResult:
    filter: Filter
    assemblage: Assemblage
    certified_sr: float
    class_supremum: float
    eta: np.ndarray
    delta: float
    certified: bool
    ir_report: RobustnessReport = field(repr=False)
    sr_report: RobustnessReport = field(repr=False)


def distill_to_sup(asm: Assemblage, eps: float, tol: Tolerances | None = None) -> DistillResult:
    """Filter ``asm`` towards the most steerable member of its class.

    The target is ``eta_eps^{1/2} B eta_eps^{1/2}`` with ``eta`` the reduced state
    of an optimal incompatibility witness of the SEO ``B``; its SEO is ``B``
    again, so the class witness is the identity.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    tol = resolve(tol)
    seo = compute_seo(asm, tol=tol)
    ir = incompatibility_robustness(seo.seo, tol)
    eta = ir.eta
    result = None
    for delta in _delta_schedule(eps, asm.scenario, seo.rank):
        eta_eps, r = regularize_eta(eta, delta, tol)
        root = linalg.sqrt_psd(eta_eps, tol)
        target = Assemblage(seo.lift(linalg.herm(root @ seo.seo.povm @ root)))
        filt = synthesize_filter(target, asm, np.eye(asm.dim), tol)
        filt.construction = DISTILL
        filt.meta.update({"eta": eta_eps, "delta": delta if r < seo.rank else 0.0})
        sr = steering_robustness(target, tol)
        certified = sr.value >= ir.value - eps - tol.solver_tol
        result = DistillResult(filt, target, sr.value, ir.value, eta_eps, delta if r < seo.rank else 0.0,
                               certified, ir, sr)
        if certified or r == seo.rank:
            break
    return result


@dataclass
class DiluteResult:
    filter: Filter
    assemblage: Assemblage
    schmidt: np.ndarray
    er_bound: float


def dilution_schmidt(eps: float, d: int) -> np.ndarray:
    """Schmidt vector ``(sqrt(1 - (d-1) e'), sqrt(e'), ...)`` with ``e' = eps^2 / (2 d^4)``."""
    small = eps**2 / (2.0 * (d * d) ** 2)
    mu = np.full(d, np.sqrt(small))
    mu[0] = np.sqrt(1.0 - (d - 1) * small)
    return mu


def dilute_to_inf(asm: Assemblage, eps: float, tol: Tolerances | None = None) -> DiluteResult:
    """Filter ``asm`` to a class member with steering robustness at most ``eps``.

    The target comes from a weakly entangled pure state whose random
    entanglement robustness, an upper bound on the steering robustness, is
    below ``eps``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    tol = resolve(tol)
    seo = compute_seo(asm, tol=tol)
    d = seo.rank
    if d < 2:
        # rank-one SEOs are trivially unsteerable
        return DiluteResult(Filter(np.eye(asm.dim, dtype=complex), 1.0, DILUTE), asm, np.ones(1), 0.0)
    mu = dilution_schmidt(eps, d)
    member = from_pure_schmidt(mu, seo.seo, tol=tol)
    target = Assemblage(seo.lift(member.sigma))
    filt = synthesize_filter(target, asm, np.eye(asm.dim), tol)
    filt.construction = DILUTE
    filt.meta["schmidt"] = mu.tolist()
    return DiluteResult(filt, target, mu, er_random_pure(mu, d, d))


@dataclass
class OptimalStateResult:
    state: np.ndarray
    assemblage: Assemblage
    certified_sr: float
    ir: float
    eta: np.ndarray
    delta: float
    certified: bool


def maximally_entangled(d: int) -> np.ndarray:
    psi = np.eye(d).reshape(-1) / np.sqrt(d)
    return np.outer(psi, psi.conj())


def optimal_state(meas: MeasurementAssemblage, eps: float, tol: Tolerances | None = None) -> OptimalStateResult:
    """Bipartite state whose assemblage under ``meas`` has SR >= IR(meas) - eps.

    ``rho = d (1 (x) eta^{1/2}) |phi+><phi+| (1 (x) eta^{1/2})``, with ``eta`` the
    optimal witness state of the transposed measurements, which is the SEO of
    the maximally entangled assemblage.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    tol = resolve(tol)
    check_measurements(meas, tol)
    d = meas.dim
    ir = incompatibility_robustness(meas, tol)
    # (omega, eta) optimal for A  <=>  (omega^T, eta^T) optimal for A^T
    eta = ir.eta.T
    phi = maximally_entangled(d)
    result = None
    seo_rank = d
    for delta in _delta_schedule(eps, meas.scenario, seo_rank):
        eta_eps, r = regularize_eta(eta, delta, tol)
        lift = np.kron(np.eye(d), linalg.sqrt_psd(eta_eps, tol))
        rho = linalg.herm(d * lift @ phi @ linalg.dag(lift))
        rho = rho / np.trace(rho).real
        asm = from_state_and_measurements(rho, meas, tol)
        sr = steering_robustness(asm, tol).value
        certified = sr >= ir.value - eps - tol.solver_tol
        result = OptimalStateResult(rho, asm, sr, ir.value, eta_eps, delta if r < d else 0.0, certified)
        if certified or r == d:
            break
    return result


def is_valid_filter(kraus, tol: Tolerances | None = None) -> bool:
    tol = resolve(tol)
    k = np.asarray(kraus, dtype=complex)
    return linalg.max_eigenvalue(linalg.dag(k) @ k) <= 1.0 + tol.psd_tol


__all__ = [
    "Filter",
    "apply_filter",
    "synthesize_filter",
    "p_succ_bounds",
    "distill_to_sup",
    "dilute_to_inf",
    "er_random_pure",
    "optimal_state",
    "validate",
]

"""Steering-equivalent observables and filter-class membership."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .assemblage import Assemblage, MeasurementAssemblage, encode_matrix, reduced_state
from .config import Tolerances, resolve

EQUIVALENT = "Equivalent"
NOT_EQUIVALENT = "NotEquivalent"
UNDETERMINED = "Undetermined"


@dataclass(frozen=True, eq=False)
class SeoResult:
    """SEO ``B`` on the range ``K`` of the reduced state.

    ``projector`` is the ``(rank, dim)`` isometry ``P`` onto ``K``; operators on
    ``K`` lift to the full space as ``P^dagger B P``.
    """

    seo: MeasurementAssemblage
    projector: np.ndarray
    rank: int
    reduced: np.ndarray  # reduced state restricted to K

    @property
    def dim(self) -> int:
        return self.projector.shape[1]

    def lift(self, ops: np.ndarray) -> np.ndarray:
        p = self.projector
        return linalg.dag(p) @ ops @ p

    def embedded(self) -> np.ndarray:
        """``B (+) 0`` on the original space, shape ``(m, k, d, d)``."""
        return self.lift(self.seo.povm)


def compute_seo(asm: Assemblage, rank_tol: float | None = None, tol: Tolerances | None = None) -> SeoResult:
    """``B = rho^{-1/2} sigma rho^{-1/2}`` restricted to the range of ``rho``."""
    tol = resolve(tol)
    rho = reduced_state(asm, tol)
    proj, rank = linalg.range_projector(rho, rank_tol, tol)
    rho_k = linalg.herm(proj @ rho @ linalg.dag(proj))
    sigma_k = proj @ asm.sigma @ linalg.dag(proj)
    root_inv, _ = linalg.pinv_sqrt(rho_k, rank_tol=0.0, tol=tol)
    seo = linalg.herm(root_inv @ sigma_k @ root_inv)
    # the effects sum to 1_K up to rounding; symmetric renormalisation removes the drift
    for x in range(seo.shape[0]):
        s_inv, _ = linalg.pinv_sqrt(seo[x].sum(axis=0), rank_tol=0.0, tol=tol)
        seo[x] = linalg.herm(s_inv @ seo[x] @ s_inv)
    return SeoResult(MeasurementAssemblage(seo), proj, rank, rho_k)


def canonical_representative(seo: SeoResult, embed: bool = False) -> Assemblage:
    """The class member ``B / d'`` produced by a maximally entangled state.

    With ``embed=True`` the result is lifted back to the original space.
    """
    ops = seo.seo.povm / seo.rank
    return Assemblage(seo.lift(ops) if embed else ops)


def class_fingerprint(seo: SeoResult) -> np.ndarray:
    """Unitary invariants ``tr B_i``, ``tr B_i B_j``, ``tr B_i B_j B_l``.

    Indices run over the flattened ``(x, a)`` labels in lexicographic order;
    the result length depends only on the scenario, while the values encode
    the spectrum structure.  Real parts are kept for the cubic terms, which
    is sufficient as a necessary condition.
    """
    ops = seo.seo.povm.reshape(-1, seo.rank, seo.rank)
    n = ops.shape[0]
    vals = [np.trace(o).real for o in ops]
    for i, j in itertools.combinations_with_replacement(range(n), 2):
        vals.append(np.trace(ops[i] @ ops[j]).real)
    for i, j, l in itertools.combinations_with_replacement(range(n), 3):
        vals.append(np.trace(ops[i] @ ops[j] @ ops[l]).real)
    return np.array([seo.rank] + vals, dtype=float)


@dataclass
class EquivalenceCertificate:
    verdict: str
    unitary: np.ndarray | None = None
    residual: float = float("nan")
    reason: str = ""
    seed: int | None = None
    coefficients: list = field(default_factory=list)
    attempts: int = 0

    @property
    def equivalent(self) -> bool:
        return self.verdict == EQUIVALENT

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "unitary": None if self.unitary is None else encode_matrix(self.unitary),
            "residual": self.residual,
            "reason": self.reason,
            "seed": self.seed,
            "attempts": self.attempts,
            "coefficients": [np.asarray(c).tolist() for c in self.coefficients],
        }


def equivalence_residual(s1: SeoResult, s2: SeoResult, u: np.ndarray) -> float:
    """``max_{a,x} || B1 (+) 0 - U (B2 (+) 0) U^dagger ||_F``."""
    b1 = s1.embedded()
    b2 = u @ s2.embedded() @ linalg.dag(u)
    return float(np.max(np.linalg.norm(b1 - b2, axis=(-2, -1))))


def _clusters(w: np.ndarray, gap: float) -> list[np.ndarray]:
    groups, start = [], 0
    for i in range(1, w.size + 1):
        if i == w.size or w[i] - w[i - 1] > gap:
            groups.append(np.arange(start, i))
            start = i
    return groups


def _eigenbasis(ops: np.ndarray, coeffs: list[np.ndarray], gap: float):
    """Eigenbasis of ``sum c_j B_j`` refined by further combinations on degenerate clusters.

    Returns ``(spectra, vectors, degenerate)``; ``spectra`` stacks the
    eigenvalues of every combination used, so equivalent inputs give equal
    spectra.
    """
    h = np.tensordot(coeffs[0], ops, axes=1)
    w, v = np.linalg.eigh(linalg.herm(h))
    spectra = [w]
    groups = _clusters(w, gap)
    for c in coeffs[1:]:
        if all(g.size == 1 for g in groups):
            break
        h2 = np.tensordot(c, ops, axes=1)
        new_v, new_w, new_groups = [], [], []
        for g in groups:
            sub = v[:, g]
            if g.size == 1:
                new_v.append(sub)
                new_w.append(np.array([0.0]))
                new_groups.append(1)
                continue
            ws, vs = np.linalg.eigh(linalg.herm(linalg.dag(sub) @ h2 @ sub))
            new_v.append(sub @ vs)
            new_w.append(ws)
            new_groups.extend(c_.size for c_ in _clusters(ws, gap))
        v = np.hstack(new_v)
        spectra.append(np.concatenate(new_w))
        sizes = np.cumsum([0] + new_groups)
        groups = [np.arange(sizes[i], sizes[i + 1]) for i in range(len(new_groups))]
    degenerate = any(g.size > 1 for g in groups)
    return np.concatenate(spectra), v, degenerate


def _fix_phases(m1: np.ndarray, m2: np.ndarray, floor: float) -> np.ndarray:
    """Diagonal phases ``D`` with ``m1 ~ D m2 D^*`` entrywise.

    ``m1``, ``m2`` have shape ``(n_ops, r, r)`` (operators in the paired
    eigenbases).  Phases propagate along a maximum-weight spanning tree so
    each ratio is read off the largest available entry; vectors linked only
    by entries below ``floor`` keep phase 1.
    """
    r = m1.shape[-1]
    weight = np.max(np.abs(m2), axis=0)
    np.fill_diagonal(weight, 0.0)
    phases = np.ones(r, dtype=complex)
    fixed = np.zeros(r, dtype=bool)
    for root in range(r):
        if fixed[root]:
            continue
        fixed[root] = True
        while True:
            cand = np.where(fixed[:, None] & ~fixed[None, :], weight, -1.0)
            k, l = np.unravel_index(np.argmax(cand), cand.shape)
            if cand[k, l] <= floor:
                break
            j = int(np.argmax(np.abs(m2[:, k, l])))
            # m1[k,l] = D_k m2[k,l] conj(D_l)
            ratio = m1[j, k, l] / m2[j, k, l] / phases[k]
            phases[l] = np.conj(ratio / abs(ratio)) if abs(ratio) > 0 else 1.0
            fixed[l] = True
    return phases


def _full_unitary(s1: SeoResult, s2: SeoResult, u_k: np.ndarray) -> np.ndarray:
    """Lift ``U_K : K2 -> K1`` to the full space, mapping ``K2^perp`` onto ``K1^perp``."""
    p1, p2 = s1.projector, s2.projector
    u = linalg.dag(p1) @ u_k @ p2
    q1, q2 = linalg.complement_isometry(p1), linalg.complement_isometry(p2)
    if q1.shape[0]:
        u = u + linalg.dag(q1) @ q2
    return u


def seo_equivalent(a1: Assemblage, a2: Assemblage, seed: int = 0,
                   tol: Tolerances | None = None) -> EquivalenceCertificate:
    """Decide whether two assemblages lie in the same local-filter class.

    The returned unitary ``U`` satisfies ``B1 (+) 0 = U (B2 (+) 0) U^dagger``.
    Alignment uses seeded random real combinations of the SEO effects;
    ``Undetermined`` is returned when every attempt hits a degenerate
    spectrum that cannot be resolved.
    """
    tol = resolve(tol)
    if a1.scenario[:2] != a2.scenario[:2]:
        return EquivalenceCertificate(NOT_EQUIVALENT, reason="scenario mismatch", seed=seed)
    if a1.dim != a2.dim:
        return EquivalenceCertificate(NOT_EQUIVALENT, reason="ambient dimension mismatch", seed=seed)
    s1, s2 = compute_seo(a1, tol=tol), compute_seo(a2, tol=tol)
    if s1.rank != s2.rank:
        return EquivalenceCertificate(NOT_EQUIVALENT, reason=f"rank {s1.rank} != {s2.rank}", seed=seed)
    f1, f2 = class_fingerprint(s1), class_fingerprint(s2)
    fp_gap = float(np.max(np.abs(f1 - f2)))
    if fp_gap > tol.equiv_tol * max(1.0, s1.rank):
        return EquivalenceCertificate(NOT_EQUIVALENT, reason=f"fingerprints differ by {fp_gap:.3e}", seed=seed)

    r = s1.rank
    ops1 = s1.seo.povm.reshape(-1, r, r)
    ops2 = s2.seo.povm.reshape(-1, r, r)
    rng = np.random.default_rng(seed)
    gap = max(1e3 * tol.equiv_tol, 1e-6)
    used: list[np.ndarray] = []
    for attempt in range(1, tol.retry_max + 1):
        coeffs = [rng.standard_normal(ops1.shape[0]) for _ in range(3)]
        used = coeffs
        w1, v1, deg1 = _eigenbasis(ops1, coeffs, gap)
        w2, v2, deg2 = _eigenbasis(ops2, coeffs, gap)
        if w1.shape != w2.shape or np.max(np.abs(w1 - w2)) > tol.equiv_tol * max(1.0, r):
            if not (deg1 or deg2):
                return EquivalenceCertificate(NOT_EQUIVALENT, reason="spectra of aligned combinations differ",
                                              seed=seed, coefficients=coeffs, attempts=attempt)
            continue
        m1 = linalg.dag(v1) @ ops1 @ v1
        m2 = linalg.dag(v2) @ ops2 @ v2
        phases = _fix_phases(m1, m2, floor=1e-3 * tol.equiv_tol)
        u_k = v1 @ np.diag(phases) @ linalg.dag(v2)
        u = _full_unitary(s1, s2, u_k)
        residual = equivalence_residual(s1, s2, u)
        if residual <= tol.equiv_tol:
            return EquivalenceCertificate(EQUIVALENT, u, residual, seed=seed, coefficients=coeffs,
                                          attempts=attempt)
        if not (deg1 or deg2):
            return EquivalenceCertificate(NOT_EQUIVALENT, None, residual,
                                          reason="no diagonal phase alignment reproduces the SEO",
                                          seed=seed, coefficients=coeffs, attempts=attempt)
    return EquivalenceCertificate(UNDETERMINED, reason="degenerate spectra in every attempt", seed=seed,
                                  coefficients=used, attempts=tol.retry_max)

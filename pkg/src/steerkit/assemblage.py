"""State assemblages and measurement assemblages.

Both families are stored as a single complex array of shape
``(inputs, outcomes, dim, dim)`` indexed ``[x, a]`` (0-based).  The JSON
wire format uses the same ``[x][a][row][col]`` nesting with complex entries
written as ``[re, im]`` pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import linalg
from .config import Tolerances, resolve
from .errors import (
    DimensionMismatch,
    InvalidDistribution,
    InvalidMeasurement,
    NoSignalingViolation,
    NotAState,
    RankDeficientSchmidt,
    SchemaError,
)


class Scenario(NamedTuple):
    inputs: int
    outcomes: int
    dim: int


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=complex)
    if out.ndim != 4 or out.shape[2] != out.shape[3]:
        raise DimensionMismatch(f"expected shape (inputs, outcomes, d, d), got {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite entries in operator family")
    out.setflags(write=False)
    return out


class _Family:
    ops: np.ndarray

    @property
    def scenario(self) -> Scenario:
        m, k, d, _ = self.ops.shape
        return Scenario(m, k, d)

    @property
    def dim(self) -> int:
        return self.ops.shape[2]

    def __getitem__(self, key):
        x, a = key
        return self.ops[x, a]


@dataclass(frozen=True, eq=False)
class Assemblage(_Family):
    """Subnormalised states ``sigma[x, a]`` held by the trusted party."""

    sigma: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma", _frozen(self.sigma))

    @property
    def ops(self) -> np.ndarray:
        return self.sigma

    def transpose(self) -> Assemblage:
        return Assemblage(np.swapaxes(self.sigma, -1, -2))

    def conjugate_by(self, u: np.ndarray) -> Assemblage:
        return Assemblage(u @ self.sigma @ linalg.dag(u))


@dataclass(frozen=True, eq=False)
class MeasurementAssemblage(_Family):
    """POVM effects ``povm[x, a]``."""

    povm: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "povm", _frozen(self.povm))

    @property
    def ops(self) -> np.ndarray:
        return self.povm

    def transpose(self) -> MeasurementAssemblage:
        return MeasurementAssemblage(np.swapaxes(self.povm, -1, -2))

    def conjugate_by(self, u: np.ndarray) -> MeasurementAssemblage:
        return MeasurementAssemblage(u @ self.povm @ linalg.dag(u))


class SchmidtVector(NamedTuple):
    coefficients: np.ndarray
    allow_zero: bool = False


def schmidt_vector(mu, allow_zero: bool = False, tol: Tolerances | None = None) -> SchmidtVector:
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1 or mu.size == 0 or np.any(mu < 0):
        raise InvalidDistribution("Schmidt coefficients must be a non-negative vector")
    if abs(float(np.sum(mu**2)) - 1.0) > resolve(tol).ns_tol:
        raise InvalidDistribution(f"sum of squared Schmidt coefficients is {np.sum(mu**2)!r}")
    if not allow_zero and np.any(mu == 0):
        raise RankDeficientSchmidt("zero Schmidt coefficient without allow_zero")
    return SchmidtVector(mu, allow_zero)


@dataclass
class Violation:
    invariant: str
    magnitude: float
    where: str = ""


@dataclass
class ValidationReport:
    kind: str
    scenario: Scenario
    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "scenario": self.scenario._asdict(),
            "passed": self.passed,
            "violations": [v.__dict__ for v in self.violations],
        }


def _check_family_hermitian_psd(ops, report: ValidationReport, tol: Tolerances) -> None:
    m, k = ops.shape[:2]
    for x, a in itertools.product(range(m), range(k)):
        op = ops[x, a]
        defect = linalg.hermiticity_defect(op)
        if defect > tol.herm_tol:
            report.violations.append(Violation("hermitian", defect, f"x={x + 1},a={a + 1}"))
            continue
        lam = linalg.min_eigenvalue(op)
        if lam < -tol.psd_tol:
            report.violations.append(Violation("psd", -lam, f"x={x + 1},a={a + 1}"))


def validate(asm: Assemblage, tol: Tolerances | None = None) -> ValidationReport:
    """Check positivity, no-signalling and normalisation of a state assemblage."""
    tol = resolve(tol)
    report = ValidationReport("assemblage", asm.scenario)
    sigma = asm.sigma
    _check_family_hermitian_psd(sigma, report, tol)
    marginals = sigma.sum(axis=1)
    for x in range(1, sigma.shape[0]):
        gap = float(np.linalg.norm(marginals[x] - marginals[0]))
        if gap > tol.ns_tol:
            report.violations.append(Violation("no_signaling", gap, f"x=1 vs x={x + 1}"))
    trace_gap = abs(np.trace(marginals[0]) - 1.0)
    if trace_gap > tol.ns_tol:
        report.violations.append(Violation("normalization", float(trace_gap), "x=1"))
    return report


def validate_measurements(meas: MeasurementAssemblage, tol: Tolerances | None = None) -> ValidationReport:
    tol = resolve(tol)
    report = ValidationReport("measurements", meas.scenario)
    _check_family_hermitian_psd(meas.povm, report, tol)
    eye = np.eye(meas.dim)
    for x in range(meas.povm.shape[0]):
        gap = float(np.linalg.norm(meas.povm[x].sum(axis=0) - eye))
        if gap > tol.ns_tol:
            report.violations.append(Violation("completeness", gap, f"x={x + 1}"))
    return report


def check_measurements(meas: MeasurementAssemblage, tol: Tolerances | None = None) -> None:
    report = validate_measurements(meas, tol)
    if not report.passed:
        worst = max(report.violations, key=lambda v: v.magnitude)
        raise InvalidMeasurement(f"{worst.invariant} violated by {worst.magnitude:.3e} at {worst.where}")


def reduced_state(asm: Assemblage, tol: Tolerances | None = None) -> np.ndarray:
    """``rho_B = sum_a sigma[x, a]``, checked to be independent of ``x``."""
    tol = resolve(tol)
    marginals = asm.sigma.sum(axis=1)
    for x in range(1, marginals.shape[0]):
        gap = np.linalg.norm(marginals[x] - marginals[0])
        if gap > tol.ns_tol:
            raise NoSignalingViolation(f"marginal of input {x + 1} differs by {gap:.3e}")
    return linalg.herm(marginals.mean(axis=0))


def from_state_and_measurements(rho_ab, meas: MeasurementAssemblage, tol: Tolerances | None = None) -> Assemblage:
    """``sigma[x, a] = tr_A[(A[x, a] (x) 1) rho_AB]``."""
    tol = resolve(tol)
    rho = linalg.check_hermitian(rho_ab, tol)
    dA = meas.dim
    if rho.shape[0] % dA:
        raise DimensionMismatch(f"state of dimension {rho.shape[0]} is not divisible by dA={dA}")
    dB = rho.shape[0] // dA
    if abs(np.trace(rho) - 1.0) > tol.ns_tol or not linalg.is_psd(rho, tol):
        raise NotAState("rho_AB must be PSD with unit trace")
    r = rho.reshape(dA, dB, dA, dB)
    # sigma_{jk} = sum_{i,l} A_{li} rho_{(i,j),(l,k)}
    sigma = np.einsum("xali,ijlk->xajk", meas.povm, r)
    return Assemblage(linalg.herm(sigma))


def from_pure_schmidt(mu, seo: MeasurementAssemblage, allow_rank_deficient: bool = False,
                      tol: Tolerances | None = None) -> Assemblage:
    """Assemblage ``tau^{1/2} B tau^{1/2}`` with ``tau = diag(mu^2)``.

    This is what a pure state with Schmidt coefficients ``mu`` produces when
    the untrusted party measures ``B^T`` (transpose in the Schmidt basis).
    """
    sv = mu if isinstance(mu, SchmidtVector) else schmidt_vector(mu, allow_rank_deficient, tol)
    coeffs = sv.coefficients
    if coeffs.size != seo.dim:
        raise DimensionMismatch(f"{coeffs.size} Schmidt coefficients for a {seo.dim}-dim measurement")
    if not (allow_rank_deficient or sv.allow_zero) and np.any(coeffs == 0):
        raise RankDeficientSchmidt("zero Schmidt coefficient without opt-in")
    root = np.diag(coeffs.astype(complex))
    return Assemblage(root @ seo.povm @ root)


def pure_schmidt_state(mu) -> np.ndarray:
    """Density matrix of ``sum_i mu_i |ii>``."""
    mu = np.asarray(mu, dtype=float)
    d = mu.size
    psi = np.zeros(d * d, dtype=complex)
    psi[np.arange(d) * (d + 1)] = mu
    return np.outer(psi, psi.conj())


def lhs_from_model(p_lambda, responses, states, tol: Tolerances | None = None) -> Assemblage:
    """Assemblage ``sum_l p(l) p(a|x,l) rho_l`` of a local-hidden-state model.

    ``responses`` has shape ``(n_lambda, inputs, outcomes)``; ``states`` has
    shape ``(n_lambda, d, d)``.
    """
    tol = resolve(tol)
    p = np.asarray(p_lambda, dtype=float)
    resp = np.asarray(responses, dtype=float)
    rhos = np.asarray(states, dtype=complex)
    if p.ndim != 1 or np.any(p < -tol.ns_tol) or abs(p.sum() - 1.0) > tol.ns_tol:
        raise InvalidDistribution("p_lambda must be a probability vector")
    if resp.ndim != 3 or resp.shape[0] != p.size:
        raise InvalidDistribution("responses must have shape (n_lambda, inputs, outcomes)")
    if np.any(resp < -tol.ns_tol) or np.max(np.abs(resp.sum(axis=2) - 1.0)) > tol.ns_tol:
        raise InvalidDistribution("responses must be conditional distributions over outcomes")
    if rhos.shape[0] != p.size:
        raise InvalidDistribution("one state per hidden variable is required")
    for rho in rhos:
        if abs(np.trace(rho) - 1.0) > tol.ns_tol or not linalg.is_psd(rho, tol):
            raise NotAState("hidden states must be density matrices")
    return Assemblage(np.einsum("l,lxa,ljk->xajk", p, resp, rhos))


def deterministic_responses(inputs: int, outcomes: int) -> np.ndarray:
    """All ``outcomes**inputs`` deterministic response functions, lexicographic."""
    table = []
    for choice in itertools.product(range(outcomes), repeat=inputs):
        t = np.zeros((inputs, outcomes))
        t[np.arange(inputs), choice] = 1.0
        table.append(t)
    return np.array(table)


# -- common measurement families ------------------------------------------------

def projective_measurement(basis: np.ndarray) -> np.ndarray:
    """Rank-one projectors onto the columns of a unitary."""
    return np.einsum("ia,ja->aij", basis, basis.conj())


def fourier_matrix(d: int) -> np.ndarray:
    w = np.exp(2j * np.pi / d)
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return w ** (j * k) / np.sqrt(d)


def mub_pair(d: int) -> MeasurementAssemblage:
    """Computational basis and its discrete Fourier transform."""
    return MeasurementAssemblage(np.array([
        projective_measurement(np.eye(d)),
        projective_measurement(fourier_matrix(d)),
    ]))


def pauli_xz() -> MeasurementAssemblage:
    """Projectors ``(1 + (-1)^a X)/2`` and ``(1 + (-1)^a Z)/2``, ``a = 0, 1``."""
    eye = np.eye(2)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    return MeasurementAssemblage(np.array([
        [(eye + x) / 2, (eye - x) / 2],
        [(eye + z) / 2, (eye - z) / 2],
    ]))


def random_measurements(inputs: int, outcomes: int, dim: int, rng: np.random.Generator,
                        projective: bool = False) -> MeasurementAssemblage:
    """Random POVMs.

    By default each effect is ``S^{-1/2} G_a S^{-1/2}`` for Wishart ``G_a``.
    With ``projective=True`` (needs ``outcomes <= dim``) the columns of a
    Haar-random unitary are split into ``outcomes`` non-empty groups.
    """
    if projective and outcomes > dim:
        raise DimensionMismatch("projective measurements need outcomes <= dim")
    out = []
    for _ in range(inputs):
        if projective:
            u = linalg.random_unitary(dim, rng)
            labels = np.concatenate([np.arange(outcomes), rng.integers(0, outcomes, dim - outcomes)])
            ops = [u[:, labels == a] @ linalg.dag(u[:, labels == a]) for a in range(outcomes)]
            out.append(np.array(ops))
            continue
        gs = []
        for _ in range(outcomes):
            g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            gs.append(g @ g.conj().T)
        gs = np.array(gs)
        s_inv, _ = linalg.pinv_sqrt(gs.sum(axis=0))
        out.append(linalg.herm(s_inv @ gs @ s_inv))
    return MeasurementAssemblage(np.array(out))


def white_noise(meas: MeasurementAssemblage, visibility: float) -> MeasurementAssemblage:
    k = meas.povm.shape[1]
    noise = np.eye(meas.dim) / k
    return MeasurementAssemblage(visibility * meas.povm + (1 - visibility) * noise)


def repair_povm(raw: MeasurementAssemblage) -> tuple[MeasurementAssemblage, dict]:
    """Project rounded effects back onto valid POVMs.

    Negative eigenvalues are clipped, then each measurement is renormalised
    symmetrically, ``A_a -> S^{-1/2} A_a S^{-1/2}`` with ``S = sum_a A_a``.
    The returned record lists the size of both corrections per input.
    """
    fixed = []
    record = {"clipped_eigenvalue_mass": [], "completeness_defect": []}
    for ops in raw.povm:
        clipped = []
        mass = 0.0
        for op in ops:
            w, v = np.linalg.eigh(linalg.herm(op))
            mass += float(-w[w < 0].sum())
            clipped.append((v * np.clip(w, 0, None)) @ v.conj().T)
        clipped = np.array(clipped)
        s = clipped.sum(axis=0)
        record["clipped_eigenvalue_mass"].append(mass)
        record["completeness_defect"].append(float(np.linalg.norm(s - np.eye(raw.dim))))
        s_inv, _ = linalg.pinv_sqrt(s)
        fixed.append(linalg.herm(s_inv @ clipped @ s_inv))
    return MeasurementAssemblage(np.array(fixed)), record


# -- JSON wire format -----------------------------------------------------------

def _encode_ops(ops: np.ndarray) -> list:
    return np.stack([ops.real, ops.imag], axis=-1).tolist()


def encode_matrix(m: np.ndarray) -> list:
    m = np.asarray(m, dtype=complex)
    return np.stack([m.real, m.imag], axis=-1).tolist()


def decode_matrix(data, name: str = "matrix") -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{name}: entries must be [re, im] number pairs") from exc
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise SchemaError(f"{name}: complex entries must be [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def to_json(fam: Assemblage | MeasurementAssemblage) -> dict:
    m, k, d = fam.scenario.inputs, fam.scenario.outcomes, fam.scenario.dim
    key = "sigma" if isinstance(fam, Assemblage) else "povm"
    return {"dim": d, "inputs": m, "outcomes": k, key: _encode_ops(fam.ops)}


def from_json(payload: dict) -> Assemblage | MeasurementAssemblage:
    if not isinstance(payload, dict):
        raise SchemaError("top-level JSON value must be an object")
    keys = [k for k in ("sigma", "povm") if k in payload]
    if len(keys) != 1:
        raise SchemaError("exactly one of 'sigma' or 'povm' is required")
    key = keys[0]
    for field_name in ("dim", "inputs", "outcomes"):
        if not isinstance(payload.get(field_name), int) or payload[field_name] < 1:
            raise SchemaError(f"field '{field_name}' must be a positive integer")
    d, m, k = payload["dim"], payload["inputs"], payload["outcomes"]
    ops = decode_matrix(payload[key], key)
    if ops.shape != (m, k, d, d):
        raise SchemaError(f"'{key}' has shape {ops.shape[:4]}, expected {(m, k, d, d)} [x][a][row][col]")
    return Assemblage(ops) if key == "sigma" else MeasurementAssemblage(ops)

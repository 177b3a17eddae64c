"""Built-in example assemblages.

``appc_*`` are the four-dimensional two-setting projective measurements
(and the reduced state returned by their incompatibility SDP) as printed to
four decimals; :func:`appc_measurements` repairs them into exact POVMs.
"""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from . import assemblage as am
from .linalg import herm


def _load(name: str) -> dict:
    return json.loads(resources.files("steerkit.data").joinpath(name).read_text(encoding="utf-8"))


def appc_measurements_raw() -> am.MeasurementAssemblage:
    return am.from_json(_load("appC_measurements.json"))


def appc_measurements() -> tuple[am.MeasurementAssemblage, dict]:
    """Repaired measurements and the correction record."""
    return am.repair_povm(appc_measurements_raw())


def appc_eta() -> np.ndarray:
    return herm(am.decode_matrix(_load("appC_eta.json")["eta"], "eta"))


def appc_assemblage() -> am.Assemblage:
    """Assemblage ``A^T / 4`` of the maximally entangled two-ququart state."""
    meas, _ = appc_measurements()
    return am.Assemblage(meas.transpose().povm / meas.dim)


def qubit_initial(mu1: float, mu2: float | None = None) -> am.Assemblage:
    """Pauli X/Z assemblage on ``mu1 |11> + mu2 |22>``."""
    mu2 = np.sqrt(1.0 - mu1**2) if mu2 is None else mu2
    return am.from_pure_schmidt([mu1, mu2], am.pauli_xz(), allow_rank_deficient=True)


def qubit_canonical() -> am.Assemblage:
    return am.Assemblage(am.pauli_xz().povm / 2)


def qutrit_initial(mu1: float, mu2: float) -> am.Assemblage:
    """Computational/Fourier assemblage ``tau^{1/2} A^T tau^{1/2}`` on ``sum mu_i |ii>``."""
    mu3 = np.sqrt(max(1.0 - mu1**2 - mu2**2, 0.0))
    return am.from_pure_schmidt([mu1, mu2, mu3], am.mub_pair(3).transpose(), allow_rank_deficient=True)


def qutrit_canonical() -> am.Assemblage:
    return am.Assemblage(am.mub_pair(3).transpose().povm / 3)


def lhs_example(seed: int = 0, inputs: int = 2, outcomes: int = 2, dim: int = 2) -> am.Assemblage:
    """A random unsteerable assemblage built from deterministic strategies."""
    from .linalg import random_density_matrix

    rng = np.random.default_rng(seed)
    resp = am.deterministic_responses(inputs, outcomes)
    p = rng.dirichlet(np.ones(len(resp)))
    states = np.array([random_density_matrix(dim, rng) for _ in resp])
    return am.lhs_from_model(p, resp, states)


def broken_no_signaling() -> am.Assemblage:
    sigma = np.array(qubit_canonical().sigma)
    sigma[1, 0] = np.diag([0.5, 0.0])
    sigma[1, 1] = np.diag([0.0, 0.3])
    return am.Assemblage(sigma)


FIXTURES = {
    "appC-measurements": lambda **kw: appc_measurements_raw(),
    "appC-assemblage": lambda **kw: appc_assemblage(),
    "appE-initial": lambda mu=(0.6,), **kw: qubit_initial(*mu),
    "appE-canonical": lambda **kw: qubit_canonical(),
    "qutrit-initial": lambda mu=(0.6, 0.5), **kw: qutrit_initial(*mu),
    "qutrit-canonical": lambda **kw: qutrit_canonical(),
    "qutrit-mub": lambda **kw: am.mub_pair(3),
    "pauli-xz": lambda **kw: am.pauli_xz(),
    "lhs": lambda seed=0, **kw: lhs_example(seed),
    "broken-no-signaling": lambda **kw: broken_no_signaling(),
}

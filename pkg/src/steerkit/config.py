"""Numerical tolerances.

Every public routine takes an optional ``tol`` argument; when omitted the
module-level :data:`DEFAULT` is used.  Use :func:`dataclasses.replace` to
derive a modified copy::

    tol = replace(DEFAULT, equiv_tol=1e-6)
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    herm_tol: float = 1e-10  # relative, Frobenius
    psd_tol: float = 1e-9  # absolute, on eigenvalues
    spec_tol: float = 1e-9  # relative, Frobenius
    rank_tol: float = 1e-8  # relative to the largest eigenvalue
    ns_tol: float = 1e-8  # no-signalling / normalisation, Frobenius
    equiv_tol: float = 1e-7
    retry_max: int = 8
    solver_tol: float = 1e-7
    membership_tol: float = 1e-6
    strategy_cap: int = 4096
    p_floor: float = 1e-12


DEFAULT = Tolerances()


def resolve(tol: Tolerances | None) -> Tolerances:
    return DEFAULT if tol is None else tol

import numpy as np
import pytest

from steerkit import assemblage as am
from steerkit import fixtures as fx
from steerkit import linalg, robustness
from steerkit.assemblage import Scenario
from steerkit.config import Tolerances
from steerkit.errors import InfeasibleWitness, TooManyStrategies
from steerkit.seo import compute_seo

from reference import sr_cvxpy

TWO_MINUS_ROOT3 = 2 - np.sqrt(3)


def mub_formula(d):
    # generalised incompatibility robustness of a pair of d-dimensional MUBs
    return (np.sqrt(d) - 1) / (np.sqrt(d) + 1)


@pytest.mark.parametrize("m,k,n", [(2, 3, 9), (1, 4, 4), (3, 2, 8)])
def test_enumerate_deterministic(m, k, n):
    s = robustness.enumerate_deterministic(Scenario(m, k, 2))
    assert s.size == n
    assert np.all(s.table.sum(axis=2) == 1)
    assert s.table[0, :, 0].all() and s.table[-1, :, k - 1].all()


def test_strategy_cap():
    with pytest.raises(TooManyStrategies):
        robustness.enumerate_deterministic(Scenario(5, 6, 2))
    with pytest.raises(TooManyStrategies):
        robustness.enumerate_deterministic(Scenario(3, 3, 2), Tolerances(strategy_cap=26))


def check_report(rep, family, tol=1e-7):
    assert rep.status == "Optimal"
    assert rep.duality_gap <= tol
    assert rep.feasibility_residual <= 10 * tol
    assert 1 + rep.value == pytest.approx(rep.witness_objective, abs=10 * tol)


def test_appc_values():
    meas, _ = fx.appc_measurements()
    ir = robustness.incompatibility_robustness(meas)
    check_report(ir, meas)
    assert ir.value == pytest.approx(0.1481, abs=1e-3)
    assert np.trace(ir.eta).real == pytest.approx(1.0, abs=1e-9)
    sr = robustness.steering_robustness(fx.appc_assemblage())
    check_report(sr, None)
    assert sr.value == pytest.approx(0.0740, abs=1e-3)


def test_appc_eta_matches_fixture_print():
    meas, _ = fx.appc_measurements()
    eta = robustness.incompatibility_robustness(meas).eta
    assert np.max(np.abs(eta - fx.appc_eta())) < 2e-3


def test_qutrit_values():
    ir = robustness.incompatibility_robustness(am.mub_pair(3))
    assert ir.value == pytest.approx(0.2679, abs=1e-4)
    assert ir.value == pytest.approx(TWO_MINUS_ROOT3, abs=1e-7)
    assert robustness.steering_robustness(fx.qutrit_canonical()).value == pytest.approx(0.2679, abs=1e-4)


def test_qubit_canonical_value_three_routes():
    sr = robustness.steering_robustness(fx.qubit_canonical()).value
    assert sr == pytest.approx(mub_formula(2), abs=1e-7)
    assert sr == pytest.approx(sr_cvxpy(fx.qubit_canonical().sigma), abs=1e-6)
    assert robustness.incompatibility_robustness(am.pauli_xz()).value == pytest.approx(sr, abs=1e-7)


def test_single_measurement_and_lhs_are_zero(rng):
    meas = am.random_measurements(1, 3, 3, rng)
    assert robustness.incompatibility_robustness(meas).value == pytest.approx(0.0, abs=1e-7)
    assert robustness.is_jointly_measurable(meas)
    for seed in range(3):
        assert robustness.steering_robustness(fx.lhs_example(seed)).value == pytest.approx(0.0, abs=1e-7)


def test_membership_examples(rng):
    ra, rb = linalg.random_density_matrix(2, rng), linalg.random_density_matrix(2, rng)
    prod = am.from_state_and_measurements(np.kron(ra, rb), am.pauli_xz())
    assert robustness.is_lhs(prod)
    assert not robustness.is_jointly_measurable(am.mub_pair(3))
    assert robustness.is_jointly_measurable(am.white_noise(am.pauli_xz(), 0.5))
    # white-noise threshold of two qubit MUBs sits at 1/sqrt(2)
    assert robustness.is_jointly_measurable(am.white_noise(am.pauli_xz(), 0.70))
    assert not robustness.is_jointly_measurable(am.white_noise(am.pauli_xz(), 0.72))


def test_class_supremum():
    for mu in [(0.6, 0.5), (0.3, 0.8), (0.7, 0.7)]:
        assert robustness.class_supremum(fx.qutrit_initial(*mu)) == pytest.approx(0.2679, abs=1e-4)
    assert robustness.class_supremum(fx.lhs_example(0, inputs=1)) == pytest.approx(0.0, abs=1e-7)
    sup = robustness.class_supremum(fx.appc_assemblage())
    assert sup == pytest.approx(0.1481, abs=1e-3)
    assert sup > robustness.steering_robustness(fx.appc_assemblage()).value + 0.05


def test_witness_transform_uniform_eta():
    rep = robustness.incompatibility_robustness(am.mub_pair(3))
    eta = np.eye(3) / 3
    f = robustness.witness_transform(rep.witness, eta, "to_steering", check_tol=1e-6)
    assert np.allclose(f, 3 * rep.witness, atol=1e-6)
    back = robustness.witness_transform(f, eta, "to_incompatibility", check_tol=1e-6)
    assert np.allclose(back, rep.witness, atol=1e-6)


def test_witness_transform_appc_rank_deficient():
    meas, _ = fx.appc_measurements()
    rep = robustness.incompatibility_robustness(meas)
    eta = rep.eta
    assert np.linalg.matrix_rank(eta, tol=1e-6) == 2
    f = robustness.witness_transform(rep.witness, eta, "to_steering")
    assert robustness.steering_witness_residual(f) <= 1e-6
    # F certifies the steering robustness of eta^{1/2} A^T eta^{1/2} (computed with eta^T)
    root = linalg.sqrt_psd(eta)
    sigma_eta = root @ meas.povm @ root
    obj = np.real(np.einsum("xaij,xaji->", f, sigma_eta))
    assert obj - 1 == pytest.approx(rep.value, abs=1e-6)
    target = am.Assemblage(linalg.sqrt_psd(eta.T) @ meas.transpose().povm @ linalg.sqrt_psd(eta.T))
    assert robustness.steering_robustness(target).value == pytest.approx(rep.value, abs=1e-6)


def test_witness_transform_rejects_infeasible():
    bad = np.array([[np.eye(2), np.eye(2)], [np.eye(2), np.eye(2)]], dtype=complex)
    with pytest.raises(InfeasibleWitness):
        robustness.witness_transform(bad, np.eye(2) / 2, "to_steering")
    with pytest.raises(InfeasibleWitness):
        robustness.witness_transform(bad, np.eye(2) / 2, "to_incompatibility")


def test_sr_invariances(rng):
    asm = fx.qutrit_initial(0.6, 0.5)
    base = robustness.steering_robustness(asm).value
    u = linalg.random_unitary(3, rng)
    assert robustness.steering_robustness(asm.conjugate_by(u)).value == pytest.approx(base, abs=1e-7)
    assert robustness.steering_robustness(asm.transpose()).value == pytest.approx(base, abs=1e-7)


def test_qubit_sr_matches_direct_formulation(rng):
    for _ in range(4):
        meas = am.random_measurements(2, 2, 2, rng, projective=True)
        rho = linalg.random_density_matrix(4, rng, rank=1)
        asm = am.from_state_and_measurements(rho, meas)
        assert robustness.steering_robustness(asm).value == pytest.approx(sr_cvxpy(asm.sigma), abs=1e-6)


def test_ordering_chain_small(rng):
    for _ in range(5):
        meas = am.random_measurements(2, 2, 2, rng, projective=True)
        asm = am.from_state_and_measurements(linalg.random_density_matrix(4, rng, rank=2), meas)
        sr = robustness.steering_robustness(asm).value
        ir_seo = robustness.incompatibility_robustness(compute_seo(asm).seo).value
        ir = robustness.incompatibility_robustness(meas).value
        assert sr <= ir_seo + 1e-7 <= ir + 2e-6


def test_report_serialises():
    d = robustness.incompatibility_robustness(am.pauli_xz()).to_dict()
    assert d["kind"] == "incompatibility" and "eta" in d
    assert np.asarray(d["witness"]).shape == (2, 2, 2, 2, 2)

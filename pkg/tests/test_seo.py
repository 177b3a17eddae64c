import numpy as np
import pytest

from steerkit import assemblage as am
from steerkit import fixtures as fx
from steerkit import linalg, seo
from steerkit.errors import ZeroOperator


def random_assemblage(rng, d=3, m=2, k=2, rank=None):
    meas = am.random_measurements(m, k, d, rng)
    return am.from_state_and_measurements(linalg.random_density_matrix(d * d, rng, rank=rank), meas)


def test_uniform_reduced_state_gives_scaled_sigma():
    asm = fx.qutrit_canonical()
    res = seo.compute_seo(asm)
    assert res.rank == 3
    assert np.allclose(res.lift(res.seo.povm), 3 * asm.sigma)


def test_construction_inverts(rng):
    b = am.random_measurements(2, 3, 3, rng)
    res = seo.compute_seo(am.from_pure_schmidt([0.2, 0.5, np.sqrt(0.71)], b))
    assert np.allclose(res.embedded(), b.povm, atol=1e-9)


def test_qubit_seo_is_pauli():
    res = seo.compute_seo(fx.qubit_initial(0.6))
    assert np.allclose(res.embedded(), am.pauli_xz().povm, atol=1e-9)


def test_seo_is_valid_and_reconstructs(rng):
    asm = random_assemblage(rng, d=4, rank=1)  # pure two-qudit state: rank-4 reduced state
    for a in (asm, random_assemblage(rng, d=2, m=3, k=3)):
        res = seo.compute_seo(a)
        assert am.validate_measurements(res.seo).passed
        root = linalg.sqrt_psd(res.reduced)
        recon = res.lift(root @ res.seo.povm @ root)
        assert np.linalg.norm(recon - a.sigma) <= 1e-9


def test_rank_deficient_seo():
    asm = fx.qutrit_initial(0.6, 0.8)  # third Schmidt coefficient is zero
    res = seo.compute_seo(asm)
    assert res.rank == 2
    assert res.seo.dim == 2
    assert am.validate_measurements(res.seo).passed


def test_zero_assemblage_raises():
    with pytest.raises(ZeroOperator):
        seo.compute_seo(am.Assemblage(np.zeros((2, 2, 2, 2))))


def test_canonical_representative_examples():
    res = seo.compute_seo(fx.qutrit_initial(0.6, 0.5))
    rep = seo.canonical_representative(res, embed=True)
    assert np.allclose(rep.sigma, fx.qutrit_canonical().sigma, atol=1e-9)
    assert np.allclose(am.reduced_state(seo.canonical_representative(res)), np.eye(3) / 3)
    rep = seo.canonical_representative(seo.compute_seo(fx.qubit_initial(0.3)), embed=True)
    assert np.allclose(rep.sigma, fx.qubit_canonical().sigma, atol=1e-9)
    assert np.allclose(am.reduced_state(rep), np.eye(2) / 2)
    single = seo.canonical_representative(seo.compute_seo(fx.lhs_example(1, inputs=1)))
    assert am.validate(single).passed


def test_fingerprint(rng):
    res = seo.compute_seo(fx.qubit_canonical())
    fp = seo.class_fingerprint(res)
    # layout: rank, 4 traces, then pairs in lexicographic order; (0,2) is B_{1|1} B_{1|2}
    pairs = fp[5:15]
    assert pairs[2] == pytest.approx(0.5)
    asm = random_assemblage(rng)
    u = linalg.random_unitary(3, rng)
    f1 = seo.class_fingerprint(seo.compute_seo(asm))
    f2 = seo.class_fingerprint(seo.compute_seo(asm.conjugate_by(u)))
    assert np.allclose(f1, f2, atol=1e-9)
    f_rank2 = seo.class_fingerprint(seo.compute_seo(fx.qutrit_initial(0.6, 0.8)))
    f_rank3 = seo.class_fingerprint(seo.compute_seo(fx.qutrit_canonical()))
    assert f_rank2[0] != f_rank3[0]


def test_self_equivalence(rng):
    asm = random_assemblage(rng)
    cert = seo.seo_equivalent(asm, asm)
    assert cert.verdict == seo.EQUIVALENT
    assert cert.residual <= 1e-9


def test_conjugated_equivalence_recovers_unitary(rng):
    asm = random_assemblage(rng)
    v = linalg.random_unitary(3, rng)
    cert = seo.seo_equivalent(asm.conjugate_by(v), asm, seed=5)
    assert cert.equivalent
    u = cert.unitary
    assert np.allclose(u.conj().T @ u, np.eye(3), atol=1e-9)
    phase = np.trace(v.conj().T @ u) / 3
    assert abs(abs(phase) - 1) < 1e-7
    assert np.allclose(u, phase * v, atol=1e-7)


def test_appe_equivalence():
    cert = seo.seo_equivalent(fx.qubit_initial(0.6), fx.qubit_canonical())
    assert cert.verdict == seo.EQUIVALENT


def test_rank_mismatch():
    rank1 = am.from_pure_schmidt([1.0, 0.0], am.pauli_xz(), allow_rank_deficient=True)
    cert = seo.seo_equivalent(rank1, fx.qubit_canonical())
    assert cert.verdict == seo.NOT_EQUIVALENT
    assert "rank" in cert.reason


def test_different_classes(rng):
    cert = seo.seo_equivalent(random_assemblage(rng), random_assemblage(rng))
    assert cert.verdict == seo.NOT_EQUIVALENT
    cert = seo.seo_equivalent(fx.qubit_canonical(), fx.lhs_example(0))
    assert cert.verdict == seo.NOT_EQUIVALENT


def test_degenerate_but_equivalent(rng):
    # the qutrit MUB SEO has degenerate effects; a conjugated copy must still certify
    v = linalg.random_unitary(3, rng)
    a = fx.qutrit_canonical()
    cert = seo.seo_equivalent(a.conjugate_by(v), fx.qutrit_initial(0.6, 0.5), seed=2)
    assert cert.equivalent


def test_fully_degenerate_is_undetermined_or_equivalent():
    # every effect proportional to the identity: any unitary works, alignment is trivial
    sigma = np.array([[np.eye(2) / 4, np.eye(2) / 4]] * 2)
    cert = seo.seo_equivalent(am.Assemblage(sigma), am.Assemblage(sigma))
    assert cert.verdict in (seo.EQUIVALENT, seo.UNDETERMINED)


def test_relation_properties(rng):
    base = random_assemblage(rng)
    fam = [base, base.conjugate_by(linalg.random_unitary(3, rng)),
           base.conjugate_by(linalg.random_unitary(3, rng)), random_assemblage(rng)]
    verdict = {(i, j): seo.seo_equivalent(fam[i], fam[j], seed=1).equivalent
               for i in range(4) for j in range(4)}
    for i in range(4):
        assert verdict[i, i]
        for j in range(4):
            assert verdict[i, j] == verdict[j, i]
            for k in range(4):
                if verdict[i, j] and verdict[j, k]:
                    assert verdict[i, k]
    assert not verdict[0, 3]


def test_certificate_residual_rechecked(rng):
    asm = random_assemblage(rng)
    other = asm.conjugate_by(linalg.random_unitary(3, rng))
    cert = seo.seo_equivalent(other, asm)
    s1, s2 = seo.compute_seo(other), seo.compute_seo(asm)
    assert seo.equivalence_residual(s1, s2, cert.unitary) == pytest.approx(cert.residual, abs=1e-12)
    assert np.allclose(seo.class_fingerprint(s1), seo.class_fingerprint(s2), atol=1e-7)
    d = cert.to_dict()
    assert d["verdict"] == "Equivalent" and d["seed"] == 0 and len(d["coefficients"]) == 3


def test_seed_reproducible(rng):
    asm = random_assemblage(rng)
    other = asm.conjugate_by(linalg.random_unitary(3, rng))
    a, b = seo.seo_equivalent(other, asm, seed=11), seo.seo_equivalent(other, asm, seed=11)
    assert np.array_equal(a.unitary, b.unitary)

import numpy as np
import pytest

from steerkit import filters, seo
from steerkit import fixtures as fx
from steerkit.rates import batch_successes, simulate_rate


def test_trivial_probabilities():
    one = simulate_rate(1.0, 1000, batches=3, seed=1)
    assert one.mean == 1.0 and one.variance == 0.0
    zero = simulate_rate(0.0, 1000, batches=3, seed=1)
    assert zero.mean == 0.0 and zero.variance == 0.0


def test_invalid_arguments():
    with pytest.raises(ValueError):
        simulate_rate(1.2, 10)
    with pytest.raises(ValueError):
        simulate_rate(0.5, 0)


def test_qutrit_filter_rate():
    mu = (0.5, 0.5)
    src = fx.qutrit_initial(*mu)
    cert = seo.seo_equivalent(fx.qutrit_canonical(), src)
    p = filters.synthesize_filter(fx.qutrit_canonical(), src, cert.unitary).p_succ
    assert p == pytest.approx(3 * 0.25)
    n = 100_000
    est = simulate_rate(p, n, seed=4)
    assert abs(est.mean - p) <= 5 * np.sqrt(p * (1 - p) / n)


def test_deterministic_and_batch_addressable():
    a = simulate_rate(0.3, 5000, batches=6, seed=9)
    b = simulate_rate(0.3, 5000, batches=6, seed=9)
    assert a == b
    assert a.successes[4] == batch_successes(0.3, 5000, 9, 4)
    # the first batches do not depend on how many are requested
    assert simulate_rate(0.3, 5000, batches=3, seed=9).successes == a.successes[:3]
    assert simulate_rate(0.3, 5000, batches=6, seed=10).successes != a.successes


def test_variance_matches_binomial():
    for p in (0.1, 0.5, 0.9):
        n = 10_000
        means = [simulate_rate(p, n, seed=s).mean for s in range(20)]
        ratio = np.var(means, ddof=1) / (p * (1 - p) / n)
        assert 0.5 <= ratio <= 2.0
        est = simulate_rate(p, n, batches=20, seed=0)
        assert 0.5 <= est.variance / est.expected_variance <= 2.0


def test_error_shrinks_with_n():
    p = 0.37
    errs = [np.mean([abs(simulate_rate(p, n, seed=s).mean - p) for s in range(20)]) for n in (10**3, 10**4, 10**5)]
    assert errs[0] > errs[1] > errs[2]


def test_serialisation():
    d = simulate_rate(0.5, 100, batches=2, seed=3).to_dict()
    assert d["N"] == 100 and len(d["successes"]) == 2 and d["seed"] == 3

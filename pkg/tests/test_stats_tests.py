import itertools
import math

import numpy as np
import pytest
from scipy import integrate

from octglaucoma.errors import DegenerateSampleError, DimensionMismatchError, EmptyInputError, InsufficientDataError
from octglaucoma.stats_tests import ks_normality, mann_whitney_u, pearson, t_test


def u_statistic(a, b):
    return sum((x > y) + 0.5 * (x == y) for x in a for y in b)


def exact_mwu_p(a, b):
    pooled = list(a) + list(b)
    na, nb = len(a), len(b)
    u = u_statistic(a, b)
    extreme = max(u, na * nb - u)
    total = 0
    hits = 0
    for group in itertools.combinations(range(na + nb), na):
        rest = [pooled[i] for i in range(na + nb) if i not in group]
        total += 1
        hits += u_statistic([pooled[i] for i in group], rest) >= extreme
    return min(1.0, 2.0 * hits / total)


def t_tail(t, df):
    """Two-sided tail probability of Student's t by numerical integration."""
    log_norm = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)

    def density(x):
        return math.exp(log_norm - (df + 1) / 2 * math.log1p(x * x / df))

    tail, _ = integrate.quad(density, abs(t), math.inf, epsabs=1e-13, epsrel=1e-11)
    return 2.0 * tail


@pytest.mark.parametrize('na,nb', [(na, nb) for na in range(1, 10) for nb in range(1, 10) if na + nb <= 10])
def test_exact_mwu_matches_enumeration(na, nb):
    rng = np.random.default_rng(na * 10 + nb)
    a, b = rng.standard_normal(na), rng.standard_normal(nb) + 0.5
    result = mann_whitney_u(a, b)
    assert result.statistic == u_statistic(a, b)
    assert result.p_value == pytest.approx(exact_mwu_p(a, b), abs=1e-12)


def test_mwu_small_example():
    result = mann_whitney_u([1, 2], [3, 4])
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(1 / 3)


def test_mwu_statistics_are_complementary():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        a = rng.integers(0, 6, size=rng.integers(1, 15))
        b = rng.integers(0, 6, size=rng.integers(1, 15))
        assert mann_whitney_u(a, b).statistic + mann_whitney_u(b, a).statistic == a.size * b.size


def test_mwu_identical_samples():
    result = mann_whitney_u([1, 2, 3, 4], [1, 2, 3, 4])
    assert result.statistic == 8.0
    assert result.p_value == pytest.approx(1.0)
    assert mann_whitney_u([5, 5, 5], [5, 5]) == (3.0, 1.0)


def test_mwu_large_samples_use_the_normal_approximation():
    rng = np.random.default_rng(2)
    a, b = rng.standard_normal(40), rng.standard_normal(40) + 1.0
    assert mann_whitney_u(a, b).p_value < 1e-3


def test_mwu_errors():
    with pytest.raises(EmptyInputError):
        mann_whitney_u([], [1, 2])
    with pytest.raises(DimensionMismatchError):
        mann_whitney_u([1, np.nan], [1, 2])


@pytest.mark.parametrize('seed', range(50))
def test_welch_p_matches_integrated_t_density(seed):
    rng = np.random.default_rng(seed)
    na, nb = rng.integers(3, 30, size=2)
    a = rng.normal(0, rng.uniform(0.5, 2), na)
    b = rng.normal(rng.uniform(-1, 1), rng.uniform(0.5, 2), nb)
    va, vb = a.var(ddof=1) / na, b.var(ddof=1) / nb
    t = (a.mean() - b.mean()) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va ** 2 / (na - 1) + vb ** 2 / (nb - 1))
    result = t_test(a, b)
    assert result.statistic == pytest.approx(t, rel=1e-9)
    assert result.p_value == pytest.approx(t_tail(t, df), abs=1e-6)


def test_t_test_conventions():
    assert t_test([5, 6, 7], [1, 2, 3]).statistic > 0
    assert t_test([1, 2, 3, 4], [1, 2, 3, 4]).p_value == pytest.approx(1.0)
    assert t_test([2, 2, 2], [2, 2]) == (0.0, 1.0)
    constant = t_test([3, 3, 3], [1, 1])
    assert constant.p_value == 0.0 and constant.statistic == math.inf
    with pytest.raises(InsufficientDataError):
        t_test([1.0], [1.0, 2.0])


@pytest.mark.parametrize('seed', range(50))
def test_pearson_p_matches_integrated_t_density(seed):
    rng = np.random.default_rng(100 + seed)
    n = int(rng.integers(5, 40))
    x = rng.standard_normal(n)
    y = rng.uniform(-1, 1) * x + rng.standard_normal(n)
    r = np.corrcoef(x, y)[0, 1]
    result = pearson(x, y)
    assert result.statistic == pytest.approx(r, abs=1e-12)
    t = r * math.sqrt((n - 2) / (1 - r * r))
    assert result.p_value == pytest.approx(t_tail(t, n - 2), abs=1e-6)


def test_pearson_closed_form():
    result = pearson([1, 2, 3], [1, 2, 4])
    assert result.statistic == pytest.approx(3 / math.sqrt(2 * 42 / 9), abs=1e-12)
    assert pearson([1, 2, 3, 4], [2, 4, 6, 8]).statistic == pytest.approx(1.0)


def test_pearson_errors():
    with pytest.raises(DimensionMismatchError):
        pearson([1, 2, 3], [1, 2])
    with pytest.raises(InsufficientDataError):
        pearson([1, 2], [2, 1])
    with pytest.raises(DegenerateSampleError):
        pearson([1, 1, 1], [1, 2, 3])


def test_ks_accepts_normal_samples():
    accepted = sum(
        ks_normality(np.random.default_rng(seed).normal(10, 3, 500)).p_value >= 0.05
        for seed in range(200)
    )
    assert accepted >= 190


def test_ks_rejects_uniform_samples():
    for seed in range(10):
        result = ks_normality(np.random.default_rng(seed).uniform(0, 1, 2000))
        assert result.p_value < 0.05
        assert 0 < result.statistic < 1


def test_ks_errors():
    with pytest.raises(DegenerateSampleError):
        ks_normality(np.full(20, 4.0))
    with pytest.raises(InsufficientDataError):
        ks_normality(np.arange(7.0))

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from subdiff.errors import DomainError
from subdiff.levy import (
    CompoundPoisson,
    JumpLaw,
    LevyTriplet,
    SymmetricStable,
    cms_symmetric,
    levy_symbol,
    sample_levy_increment,
)
from subdiff.rng import CounterStream

N = 100000


def stream(seed, n=N):
    return CounterStream(seed, "L", path=np.arange(n))


def ecf(x, xi):
    """Empirical characteristic function (real and imaginary parts) with standard errors."""
    c, s = np.cos(xi * x), np.sin(xi * x)
    n = x.size
    return c.mean(), c.std(ddof=1) / math.sqrt(n), s.mean(), s.std(ddof=1) / math.sqrt(n)


TRIPLETS = [
    LevyTriplet(),
    LevyTriplet.brownian(2.0, drift=-0.3),
    LevyTriplet.stable(0.7),
    LevyTriplet.stable(1.0),
    LevyTriplet.compound_poisson(2.0, JumpLaw.point(1.0)),
    LevyTriplet.compound_poisson(0.5, JumpLaw.uniform(-0.5, 2.0), drift=1.0, sigma2=0.2),
]


class TestSymbol:
    def test_examples(self):
        assert levy_symbol(LevyTriplet.brownian(1.0), 2.0) == pytest.approx(-2.0)
        assert levy_symbol(LevyTriplet(drift=3.0), 1.0) == pytest.approx(3j)
        cp = LevyTriplet.compound_poisson(2.0, JumpLaw.point(1.0))
        assert levy_symbol(cp, math.pi) == pytest.approx(-4.0, abs=1e-14)
        assert levy_symbol(LevyTriplet.stable(1.5), 2.0) == pytest.approx(-(2.0**1.5))

    def test_compound_poisson_against_quadrature(self):
        # Direct integral against nu = rate * Uniform density, compensating |w| < 1.
        lo, hi, rate, xi = -0.5, 2.0, 0.5, 1.3
        tr = LevyTriplet.compound_poisson(rate, JumpLaw.uniform(lo, hi))
        dens = rate / (hi - lo)
        re = integrate.quad(lambda w: (math.cos(xi * w) - 1) * dens, lo, hi)[0]
        im = integrate.quad(lambda w: (math.sin(xi * w) - xi * w * (abs(w) < 1)) * dens, lo, hi, points=[1.0])[0]
        assert levy_symbol(tr, xi) == pytest.approx(complex(re, im), abs=1e-12)

    @pytest.mark.parametrize("tr", TRIPLETS)
    def test_zero_and_conjugate_symmetry(self, tr):
        assert levy_symbol(tr, 0.0) == 0
        xi = np.linspace(0.1, 5, 9)
        assert np.allclose(levy_symbol(tr, -xi), np.conj(levy_symbol(tr, xi)), rtol=1e-14, atol=1e-14)
        assert np.all(levy_symbol(tr, xi).real <= 1e-15)

    def test_validation(self):
        with pytest.raises(DomainError):
            LevyTriplet(sigma2=-1.0)
        with pytest.raises(DomainError):
            CompoundPoisson(0.0, JumpLaw.point(1.0))
        for a in (0.0, 2.0, 2.5):
            with pytest.raises(DomainError):
                SymmetricStable(a)
        with pytest.raises(DomainError):
            JumpLaw.uniform(1.0, 1.0)


class TestSampling:
    def test_deterministic(self):
        tr = TRIPLETS[-1]
        a = sample_levy_increment(tr, 0.3, stream(4, 50), 7)
        b = sample_levy_increment(tr, 0.3, stream(4, 50), 7)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample_levy_increment(tr, 0.3, stream(4, 50), 8))

    def test_brownian_variance(self):
        x = sample_levy_increment(LevyTriplet.brownian(1.0), 0.01, stream(1), 0)
        dev = (x - x.mean()) ** 2
        se = dev.std(ddof=1) / math.sqrt(N)
        assert abs(x.var(ddof=1) - 0.01) <= 3 * se

    def test_stable_ecf(self):
        x = sample_levy_increment(LevyTriplet.stable(1.5), 1.0, stream(2), 0)
        re, se, _, _ = ecf(x, 1.0)
        assert abs(re - math.exp(-1.0)) <= 3 * se

    @pytest.mark.parametrize("tr", TRIPLETS[1:])
    @pytest.mark.parametrize("xi", [0.5, 2.0])
    def test_ecf_matches_symbol(self, tr, xi):
        delta = 0.5
        x = sample_levy_increment(tr, delta, stream(3), 0)
        ref = np.exp(delta * levy_symbol(tr, xi))
        re, sre, im, sim = ecf(x, xi)
        assert abs(re - ref.real) <= 3.5 * sre + 1e-4
        assert abs(im - ref.imag) <= 3.5 * sim + 1e-4

    def test_cms_unit_scale(self):
        u = stream(5).uniform(0, 0)
        w = stream(5).exponential(0, 1)
        for alpha in (0.6, 1.0, 1.8):
            x = cms_symmetric(alpha, u, w)
            re, se, _, _ = ecf(x, 1.0)
            assert abs(re - math.exp(-1.0)) <= 3.5 * se

    @pytest.mark.parametrize("tr", [LevyTriplet.brownian(1.0), LevyTriplet.stable(1.2), TRIPLETS[-1]])
    def test_additivity_in_law(self, tr):
        delta = 0.2
        s = stream(6)
        one = sample_levy_increment(tr, 2 * delta, s, 0)
        two = sample_levy_increment(tr, delta, s, 1) + sample_levy_increment(tr, delta, s, 2)
        assert stats.ks_2samp(one, two).statistic <= 0.015

    def test_stable_symmetry(self):
        # Skew of a heavy-tailed variable is undefined; use the bounded odd statistic
        # E[sign(x) min(|x|, 1)^3] instead.
        x = sample_levy_increment(LevyTriplet.stable(0.8), 1.0, stream(7), 0)
        v = np.sign(x) * np.minimum(np.abs(x), 1.0) ** 3
        assert abs(v.mean()) <= 3 * v.std(ddof=1) / math.sqrt(N)
        assert abs(stats.skew(np.clip(x, -1, 1))) <= 3 * math.sqrt(6 / N)

    def test_compound_poisson_compensator(self):
        law = JumpLaw.uniform(-0.5, 2.0)
        tr = LevyTriplet.compound_poisson(3.0, law)
        x = sample_levy_increment(tr, 1.0, stream(10), 0)
        expected = 3.0 * (0.75 - law.small_mean)
        assert abs(x.mean() - expected) <= 3 * x.std(ddof=1) / math.sqrt(N)

    def test_broadcast_over_counters(self):
        s = CounterStream(9, "L", path=np.arange(4))
        a = sample_levy_increment(LevyTriplet.stable(1.5), 0.1, s, np.arange(3, dtype=np.uint64)[:, None])
        assert a.shape == (3, 4)
        assert np.array_equal(a[1], sample_levy_increment(LevyTriplet.stable(1.5), 0.1, s, 1))

    def test_delta_domain(self):
        with pytest.raises(DomainError):
            sample_levy_increment(LevyTriplet.brownian(), 0.0, stream(1, 3), 0)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.1, 1.95), st.floats(0.01, 3.0), st.integers(0, 1000))
    def test_stable_draws_finite(self, alpha, delta, counter):
        x = sample_levy_increment(LevyTriplet.stable(alpha), delta, stream(10, 64), counter)
        assert np.all(np.isfinite(x))

import numpy as np
import pytest
from scipy import stats

from mrwvol.model import MrwParams, SvParams
from mrwvol.simulate import (abs_return_acf, gaussian_field, sample_mrw,
                             sample_sv, scaling_curvature, structure_functions)


class TestSampleMrw:
    def test_field_covariance(self):
        m = MrwParams(0.5, 1.0, 40)
        T, reps = 64, 200
        est = np.empty((reps, 6))
        for r in range(reps):
            h = sample_mrw(m, T, r).h
            est[r] = [np.mean(h[:T - k] * h[k:]) for k in range(6)]
        mean = est.mean(axis=0)
        se = est.std(axis=0, ddof=1) / np.sqrt(reps)
        assert np.all(np.abs(mean - m.autocov(5)) <= 3 * se)

    def test_small_intermittency_is_gaussian(self):
        x = sample_mrw(MrwParams(0.01, 1.0, 100), 20000, 3).x
        kurt = stats.kurtosis(x, fisher=False)
        assert abs(kurt - 3) <= 4 * np.sqrt(24 / x.size)

    def test_marginal_variance(self):
        m = MrwParams(0.4, 0.02, 128)
        v = np.array([np.mean(sample_mrw(m, 256, s).x**2) for s in range(200)])
        assert abs(v.mean() - m.sigma**2) <= 3 * v.std(ddof=1) / np.sqrt(v.size)

    def test_determinism(self):
        m = MrwParams(0.33, 0.01, 512)
        a, b, c = sample_mrw(m, 300, 7), sample_mrw(m, 300, 7), sample_mrw(m, 300, 8)
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.h, b.h)
        assert not np.array_equal(a.x, c.x)
        assert a.seed == 7 and a.params == m

    def test_methods_agree(self, rng):
        g = MrwParams(0.5, 1.0, 300).autocov(499)
        z = rng.standard_normal(500)
        np.testing.assert_allclose(gaussian_field(g, z, "cholesky"),
                                   gaussian_field(g, z, "levinson"), atol=1e-10)

    def test_invalid_length(self):
        with pytest.raises(ValueError):
            sample_mrw(MrwParams(0.3, 1, 10), 0, 1)


class TestSampleSv:
    def test_lag_one_autocorrelation(self):
        m = SvParams(0.7, 0.3, 1.0)
        num = np.empty(500)
        den = np.empty(500)
        for r in range(500):
            h = sample_sv(m, 256, r).h
            num[r] = h[:-1] @ h[1:]
            den[r] = h[:-1] @ h[:-1]
        ratio = num.sum() / den.sum()
        se = (num / den).std(ddof=1) / np.sqrt(500)
        assert abs(ratio - 0.7) <= 3 * se

    def test_independent_when_psi_zero(self):
        h = sample_sv(SvParams(0.0, 0.5, 1.0), 5000, 1).h
        assert abs(np.corrcoef(h[:-1], h[1:])[0, 1]) <= 3 / np.sqrt(5000)
        assert stats.kstest(h / 0.5, "norm").pvalue > 0.01

    def test_determinism(self):
        m = SvParams(0.9, 0.2, 0.01)
        np.testing.assert_array_equal(sample_sv(m, 100, 4).x, sample_sv(m, 100, 4).x)
        assert not np.array_equal(sample_sv(m, 100, 4).x, sample_sv(m, 100, 5).x)


class TestStructureFunctions:
    def test_gaussian_walk(self, rng):
        est = structure_functions(rng.standard_normal(2**16), (1, 2, 3, 4))
        assert abs(est.zeta_hat[1] - 1) <= 0.1
        np.testing.assert_allclose(est.zeta_hat, [0.5, 1.0, 1.5, 2.0], atol=0.1)

    def test_linear_trend(self):
        est = structure_functions(np.ones(4096), (0.5, 1, 2, 3))
        np.testing.assert_allclose(est.zeta_hat, [0.5, 1, 2, 3], atol=1e-10)

    def test_zeroth_moment(self, rng):
        est = structure_functions(rng.standard_normal(1000), (0, 1, 2))
        assert est.zeta_hat[0] == 0

    def test_mrw_is_concave(self):
        x = sample_mrw(MrwParams(0.5, 1.0, 2**12), 2**16, 1).x
        est = structure_functions(x, (1, 2, 3, 4),
                                  scales=np.unique(np.geomspace(1, 512, 15).astype(int)))
        assert 2 * est.zeta_hat[1] - est.zeta_hat[3] > est.stderr[3] + 2 * est.stderr[1]
        curv, se = scaling_curvature(est)
        assert np.all(curv + 3 * se < 0)

    def test_too_few_scales(self, rng):
        with pytest.raises(ValueError):
            structure_functions(rng.standard_normal(100), (1, 2), scales=[1, 2, 3])


class TestAbsReturnAcf:
    def test_iid_gaussian(self, rng):
        x = rng.standard_normal(20000)
        res = abs_return_acf(x, 50)
        assert np.all(np.abs(res.acf) <= 3 / np.sqrt(x.size))
        assert not res.reliable

    def test_sv_decay_is_exponential(self):
        x = sample_sv(SvParams(0.9, 0.4, 1.0), 2**17, 2).x
        res = abs_return_acf(x, 40, (1, 40))
        assert res.reliable
        lags, acf = res.lags, res.acf
        lin = stats.linregress(lags, np.log(acf)).rvalue**2
        pow_ = stats.linregress(np.log(lags), np.log(acf)).rvalue**2
        assert lin > pow_

    def test_validation(self, rng):
        with pytest.raises(ValueError):
            abs_return_acf(rng.standard_normal(100), 30)

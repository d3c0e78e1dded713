import numpy as np
import pytest
from scipy import stats

from softimpact.bath import (BathParams, FitError, NoiseGenerator, NoiseModel,
                             classical_correlation, correlation_function,
                             correlation_samples, fit_noise_model,
                             load_or_fit, memory_kernel)


class TestCorrelationFunction:
    def test_classical_limit(self):
        """For kT >> hbar/tau_c the quadrature matches the closed form."""
        b = BathParams(hbar=1e-6)
        for tau in [0.0, 1.0, 3.0, 9.0]:
            assert correlation_function(tau, b) == pytest.approx(
                classical_correlation(tau, b), rel=1e-3)

    def test_even_in_tau(self, bath):
        assert correlation_function(2.0, bath) == pytest.approx(
            correlation_function(-2.0, bath), rel=1e-9)

    def test_quantum_exceeds_classical_at_zero_lag(self):
        """Zero-point fluctuations raise c(0) above the classical value."""
        b = BathParams(kT=1e-4, hbar=0.01)  # hbar/tau_c > kT: quantum regime
        assert correlation_function(0.0, b) > 1.5 * classical_correlation(0.0, b)

    def test_memory_kernel(self, bath):
        t = np.linspace(0, 60, 6001)
        g = memory_kernel(t, bath)
        assert g[0] == pytest.approx(bath.Gamma / bath.tau_c)
        assert np.trapezoid(g, t) == pytest.approx(bath.Gamma, rel=1e-3)
        with pytest.raises(ValueError):
            memory_kernel(-1.0, bath)


class TestFit:
    def test_three_component_residual(self, bath, noise_model):
        taus, target = correlation_samples(bath)
        rms = np.sqrt(np.mean((noise_model.evaluate(taus) - target) ** 2))
        assert rms < 0.02 * target[0]
        assert noise_model.n == 3

    def test_single_exponential_classical_recovery(self, bath):
        """n=1 fit on the classical closed form recovers (Gamma*kT, tau_c)."""
        taus = np.linspace(0.0, 30.0, 301)
        target = classical_correlation(taus, bath)
        model = fit_noise_model(bath, 1, taus, target)
        (D, tau), = model.components
        assert D == pytest.approx(bath.Gamma * bath.kT, rel=1e-4)
        assert tau == pytest.approx(bath.tau_c, rel=1e-4)

    def test_unreachable_tolerance_raises(self, bath):
        taus, target = correlation_samples(bath)
        with pytest.raises(FitError):
            fit_noise_model(bath, 1, taus, target, tolerance_frac=1e-12)

    def test_cache_roundtrip(self, bath, tmp_path):
        m1 = load_or_fit(bath, 3, cache_dir=str(tmp_path))
        m2 = load_or_fit(bath, 3, cache_dir=str(tmp_path))
        assert m1.components == m2.components


class TestNoiseModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            NoiseModel(((-1.0, 1.0),))
        with pytest.raises(ValueError):
            NoiseModel(((1.0, 0.0),))

    def test_scaled(self, noise_model):
        half = noise_model.scaled(0.5)
        assert half.c0() == pytest.approx(0.25 * noise_model.c0())
        assert noise_model.scaled(1.0) is noise_model
        silent = noise_model.scaled(0.0)
        assert silent.c0() == 0.0
        with pytest.raises(ValueError):
            noise_model.scaled(-1.0)

    def test_dict_roundtrip(self, noise_model):
        again = NoiseModel.from_dict(noise_model.to_dict())
        assert again == noise_model


class TestNoiseGenerator:
    def test_sample_matches_step_bitwise(self, noise_model):
        g1 = NoiseGenerator(noise_model, 0.01, np.random.SeedSequence(7))
        g2 = NoiseGenerator(noise_model, 0.01, np.random.SeedSequence(7))
        batch = g1.sample(500)
        series = np.array([g2.step() for _ in range(500)])
        assert np.array_equal(batch, series)
        assert np.array_equal(g1.eta, g2.eta)

    def test_stationary_statistics(self, noise_model):
        """Mean, variance, and lag autocovariance match the model to 5%."""
        dt = 0.05
        gen = NoiseGenerator(noise_model, dt, np.random.SeedSequence(123))
        f = gen.sample(2_000_000)
        c0 = noise_model.c0()
        assert abs(f.mean()) < 3.0 * np.sqrt(c0 / len(f)) * 50  # CLT scale
        assert f.var() == pytest.approx(c0, rel=0.05)
        for lag_t in [1.5, 3.0]:
            lag = int(round(lag_t / dt))
            est = np.dot(f[:-lag], f[lag:]) / (len(f) - lag)
            assert est == pytest.approx(noise_model.evaluate(lag_t),
                                        abs=0.05 * c0)

    def test_increment_normality(self, noise_model):
        """One-step conditional increments are Gaussian (KS test)."""
        dt = 0.01
        gen = NoiseGenerator(noise_model.scaled(1.0), dt,
                             np.random.SeedSequence(5))
        # single-component generator makes the conditional law explicit
        single = NoiseModel(((1.0, 2.0),))
        gen = NoiseGenerator(single, dt, np.random.SeedSequence(5))
        n = 20000
        f = gen.sample(n)
        decay = np.exp(-dt / 2.0)
        sd = np.sqrt(0.5 * (1 - decay**2))
        increments = (f[1:] - decay * f[:-1]) / sd
        assert stats.kstest(increments, "norm").pvalue > 0.01

    def test_determinism(self, noise_model):
        a = NoiseGenerator(noise_model, 0.01, np.random.SeedSequence(3)).sample(100)
        b = NoiseGenerator(noise_model, 0.01, np.random.SeedSequence(3)).sample(100)
        assert np.array_equal(a, b)

    def test_bad_dt(self, noise_model):
        with pytest.raises(ValueError):
            NoiseGenerator(noise_model, 0.0, np.random.SeedSequence(0))

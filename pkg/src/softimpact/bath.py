"""Lorentzian bath: memory kernel, quantum noise correlation, exponential
decomposition and colored-noise synthesis.

The bath enters the dynamics through two channels that share the same
Lorentzian spectral density (2/pi)*Gamma/(1 + omega^2 tau_c^2):

* an exponentially decaying memory kernel gamma(t) = (Gamma/tau_c) e^{-t/tau_c},
  which the integrator folds into an auxiliary ODE variable, and
* a stationary Gaussian noise f(t) whose correlation c(tau) is the
  coth-weighted cosine transform of the spectral density.

c(tau) is computed by adaptive quadrature and approximated as a sum of
exponentially correlated components (D_i, tau_i); each component is then
synthesized exactly as an Ornstein-Uhlenbeck process.
"""

from dataclasses import dataclass, field
import hashlib
import itertools
import json
import math
import os

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize, nnls
from scipy.signal import lfilter


@dataclass(frozen=True)
class BathParams:
    """Dissipation strength, bath correlation time and thermal energy."""

    Gamma: float = 1.0
    tau_c: float = 3.0
    kT: float = 0.01
    hbar: float = 0.01

    def __post_init__(self):
        if self.Gamma <= 0:
            raise ValueError(f"Gamma must be positive, got {self.Gamma}")
        if self.tau_c <= 0:
            raise ValueError(f"tau_c must be positive, got {self.tau_c}")
        if self.kT <= 0:
            raise ValueError(f"kT must be positive, got {self.kT}")
        if self.hbar < 0:
            raise ValueError(f"hbar must be non-negative, got {self.hbar}")


class QuadratureError(RuntimeError):
    """Raised when the correlation-function quadrature fails to converge."""

    def __init__(self, tau, achieved):
        self.tau = tau
        self.achieved = achieved
        super().__init__(
            f"correlation quadrature at tau={tau} reached error estimate "
            f"{achieved:.3e}")


def memory_kernel(t, b: BathParams):
    """gamma(t) = (Gamma/tau_c) * exp(-t/tau_c); integrates to Gamma."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("memory kernel is defined for t >= 0")
    out = (b.Gamma / b.tau_c) * np.exp(-t / b.tau_c)
    return out if out.ndim else float(out)


def _thermal_weight(omega, b: BathParams):
    """hbar*omega*coth(hbar*omega/(2kT)), with the 2kT limit at small argument."""
    x = b.hbar * omega / (2.0 * b.kT)
    if x < 1e-8:
        return 2.0 * b.kT
    if x < 1e-4:
        # x*coth(x) = 1 + x^2/3 - x^4/45 + ...
        return 2.0 * b.kT * (1.0 + x * x / 3.0)
    return b.hbar * omega / math.tanh(x)


# Lorentzian envelope cut where it drops to 1e-12 of its peak.
_ENVELOPE_CUT = 1e6


def correlation_function(tau: float, b: BathParams, rtol: float = 1e-9) -> float:
    """Noise autocorrelation c(tau) of the Lorentzian quantum bath.

    c(tau) = (1/pi) int_0^inf dw  Gamma/(1+w^2 tau_c^2)
                                  * hbar*w*coth(hbar*w/2kT) * cos(w*tau)

    The integral is split at the Lorentzian knee 1/tau_c; for tau > 0 the
    oscillatory tail uses quad's cosine weighting.
    """
    if tau < 0:
        tau = -tau  # c is even
    knee = 1.0 / b.tau_c
    w_max = _ENVELOPE_CUT / b.tau_c

    def integrand(w):
        return (b.Gamma / (1.0 + (w * b.tau_c) ** 2)) * _thermal_weight(w, b) / math.pi

    if tau == 0.0:
        lo, err_lo = quad(integrand, 0.0, knee, epsrel=rtol, limit=400)
        # tail spans ~6 decades; per-decade panels keep quad honest
        hi, err_hi = 0.0, 0.0
        edges = np.geomspace(knee, w_max, 14)
        for a, bb in zip(edges[:-1], edges[1:]):
            v, e = quad(integrand, a, bb, epsrel=rtol, limit=400)
            hi += v
            err_hi += e
    else:
        f = lambda w: integrand(w) * math.cos(w * tau)
        lo, err_lo = quad(f, 0.0, knee, epsrel=rtol, limit=400)
        hi, err_hi = quad(integrand, knee, w_max, weight="cos", wvar=tau,
                          epsrel=rtol, limit=2000)
    total = lo + hi
    err = err_lo + err_hi
    # tolerance relative to the zero-lag magnitude, not the (possibly tiny) tail
    scale = b.Gamma * max(b.kT, b.hbar / b.tau_c) / b.tau_c
    if err > 1e-5 * abs(total) + 1e-4 * scale:
        raise QuadratureError(tau, err)
    return total


def classical_correlation(tau, b: BathParams):
    """hbar -> 0 closed form: c(tau) = (Gamma*kT/tau_c) * exp(-|tau|/tau_c)."""
    tau = np.abs(np.asarray(tau, dtype=float))
    out = (b.Gamma * b.kT / b.tau_c) * np.exp(-tau / b.tau_c)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class NoiseModel:
    """Multi-exponential decomposition c(tau) ~ sum_i (D_i/tau_i) e^{-tau/tau_i}."""

    components: tuple  # of (D_i, tau_i) pairs
    fit_residual: float = 0.0

    def __post_init__(self):
        for D, tau in self.components:
            if D < 0:
                raise ValueError(f"noise strength must be non-negative, got {D}")
            if tau <= 0:
                raise ValueError(f"correlation time must be positive, got {tau}")

    @property
    def n(self) -> int:
        return len(self.components)

    def c0(self) -> float:
        """Model value at zero lag, sum_i D_i/tau_i."""
        return sum(D / tau for D, tau in self.components)

    def evaluate(self, tau):
        tau = np.abs(np.asarray(tau, dtype=float))
        out = np.zeros_like(tau)
        for D, ti in self.components:
            out = out + (D / ti) * np.exp(-tau / ti)
        return out if out.ndim else float(out)

    def scaled(self, amplitude_scale: float) -> "NoiseModel":
        """Model with the noise amplitude multiplied by amplitude_scale.

        The strengths D_i carry the noise power, so they scale with the
        square of the amplitude factor; 0 yields a silent model.
        """
        if amplitude_scale < 0:
            raise ValueError("amplitude_scale must be >= 0")
        if amplitude_scale == 1.0:
            return self
        fac = amplitude_scale ** 2
        return NoiseModel(tuple((D * fac, tau) for D, tau in self.components),
                          self.fit_residual)

    def to_dict(self) -> dict:
        return {"components": [[D, tau] for D, tau in self.components],
                "fit_residual": self.fit_residual}

    @staticmethod
    def from_dict(d: dict) -> "NoiseModel":
        return NoiseModel(tuple((float(D), float(t)) for D, t in d["components"]),
                          float(d["fit_residual"]))


class FitError(RuntimeError):
    """Raised when the exponential fit misses the residual tolerance."""

    def __init__(self, residual, tolerance):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"noise fit residual {residual:.4e} exceeds tolerance {tolerance:.4e}")


def correlation_samples(b: BathParams, tau_max: float = None, dtau: float = None):
    """Sample c(tau) on the default fit grid [0, 10*tau_c] with step tau_c/50."""
    if tau_max is None:
        tau_max = 10.0 * b.tau_c
    if dtau is None:
        dtau = b.tau_c / 50.0
    taus = np.arange(0.0, tau_max + 0.5 * dtau, dtau)
    c = np.array([correlation_function(t, b) for t in taus])
    return taus, c


def _amplitudes_for(taus, target, tau_i):
    """Inner NNLS: best non-negative amplitudes a_i = D_i/tau_i for fixed tau_i."""
    basis = np.exp(-taus[:, None] / tau_i[None, :])
    amps, rnorm = nnls(basis, target)
    return amps, rnorm / math.sqrt(len(taus))


def fit_noise_model(b: BathParams, n: int = 3, taus=None, target=None,
                    tolerance_frac: float = 0.02) -> NoiseModel:
    """Fit an n-exponential model to the noise correlation.

    The fit is separable: amplitudes follow from non-negative least squares
    for any candidate correlation times, so only the tau_i are searched, by
    Nelder-Mead in log-space from a deterministic multistart set.
    Raises FitError if the RMS residual exceeds tolerance_frac * c(0).
    """
    if n < 1:
        raise ValueError(f"need at least one component, got n={n}")
    if taus is None or target is None:
        taus, target = correlation_samples(b)
    taus = np.asarray(taus, dtype=float)
    target = np.asarray(target, dtype=float)
    c0 = target[0]

    def objective(log_tau):
        tau_i = np.exp(log_tau)
        if np.any(tau_i > 1e4 * b.tau_c) or np.any(tau_i < 1e-6 * b.tau_c):
            return 1e6 * abs(c0)
        _, rms = _amplitudes_for(taus, target, tau_i)
        return rms

    # multistart: log-spaced combinations around tau_c
    seeds_1d = np.log(b.tau_c * np.array([0.02, 0.1, 0.3, 1.0, 3.0]))
    if n == 1:
        starts = [[s] for s in seeds_1d]
    else:
        starts = [list(combo) for combo in
                  itertools.combinations(seeds_1d, min(n, len(seeds_1d)))]
        while starts and len(starts[0]) < n:
            starts = [s + [s[-1] + 0.7] for s in starts]

    best = None
    for s0 in starts:
        res = minimize(objective, np.asarray(s0), method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-14, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    tau_i = np.exp(best.x)
    amps, rms = _amplitudes_for(taus, target, tau_i)

    order = np.argsort(tau_i)
    comps = tuple((float(amps[i] * tau_i[i]), float(tau_i[i])) for i in order)
    model = NoiseModel(comps, float(rms))
    if rms > tolerance_frac * abs(c0):
        raise FitError(rms, tolerance_frac * abs(c0))
    return model


def _cache_key(b: BathParams, n: int) -> str:
    raw = json.dumps([b.Gamma, b.tau_c, b.kT, b.hbar, n], sort_keys=True)
    return hashlib.sha256(raw.encode()).hexdigest()[:16]


def load_or_fit(b: BathParams, n: int = 3, cache_dir: str = None) -> NoiseModel:
    """Fit the noise model, reusing a cached result keyed by (Gamma, tau_c, kT, hbar, n)."""
    if cache_dir is None:
        cache_dir = os.environ.get("SOFTIMPACT_CACHE",
                                   os.path.join(os.path.expanduser("~"),
                                                ".cache", "softimpact"))
    path = os.path.join(cache_dir, f"noisefit_{_cache_key(b, n)}.json")
    if os.path.exists(path):
        with open(path) as fh:
            return NoiseModel.from_dict(json.load(fh))
    model = fit_noise_model(b, n)
    os.makedirs(cache_dir, exist_ok=True)
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(model.to_dict(), fh)
    os.replace(tmp, path)
    return model


class NoiseGenerator:
    """Exact Ornstein-Uhlenbeck synthesis of the fitted colored noise.

    Each component eta_i relaxes with time constant tau_i and stationary
    variance D_i/tau_i; the per-step update

        eta <- eta * exp(-dt/tau) + N(0, (D/tau)(1 - exp(-2 dt/tau)))

    is distribution-exact for any dt, so the noise channel carries no
    time-step bias.
    """

    def __init__(self, model: NoiseModel, dt: float, seed):
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.model = model
        self.dt = dt
        self.rng = np.random.default_rng(seed)
        self._tau = np.array([t for _, t in model.components])
        self._var = np.array([D / t for D, t in model.components])
        self._decay = np.exp(-dt / self._tau)
        self._step_sd = np.sqrt(self._var * (1.0 - self._decay**2))
        self._stat_sd = np.sqrt(self._var)
        self.eta = self._stat_sd * self.rng.standard_normal(len(self._tau))

    def step(self) -> float:
        """Advance one dt and return the total force f = sum_i eta_i."""
        eps = self.rng.standard_normal(len(self._tau))
        self.eta = self.eta * self._decay + self._step_sd * eps
        return float(self.eta.sum())

    def sample(self, n_steps: int) -> np.ndarray:
        """Generate n_steps successive values of f, identical to repeated step().

        The OU recursion is linear, so it runs through scipy's lfilter at C
        speed; operand order matches step() so the streams agree bit-for-bit.
        """
        eps = self.rng.standard_normal((n_steps, len(self._tau)))
        etas = np.empty_like(eps)
        for j in range(len(self._tau)):
            zi = np.array([self._decay[j] * self.eta[j]])
            etas[:, j], _ = lfilter([self._step_sd[j]], [1.0, -self._decay[j]],
                                    eps[:, j], zi=zi)
        self.eta = etas[-1].copy() if n_steps else self.eta
        return etas.sum(axis=1)

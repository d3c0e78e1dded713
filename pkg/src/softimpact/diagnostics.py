"""Chaos diagnostics: Poincaré sections, bifurcation scans, largest
Lyapunov exponents for the stochastic flow, Welch power spectra, and the
Gottwald-Melbourne 0-1 test.

All diagnostics are pure functions over immutable inputs; the scans
parallelize across grid points with process workers.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .bath import BathParams, NoiseModel
from .integrator import (BlowUpError, DEFAULT_STEPS_PER_CYCLE, Trajectory,
                         lyapunov_run, run)
from .model import SystemParams


@dataclass(frozen=True)
class PoincareSection:
    """Crossings of the P = 0 plane: times, interpolated X values, direction."""

    t: np.ndarray
    X: np.ndarray
    direction: str

    def __post_init__(self):
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("crossing times must be strictly increasing")

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class BifurcationScan:
    """Per-x_wall Poincaré X samples and Lyapunov exponents over a grid."""

    x_wall: np.ndarray                # strictly increasing grid
    sections: tuple                   # of np.ndarray of Poincaré X values
    lyapunov: np.ndarray              # per-point exponent (NaN on failure)
    failures: dict                    # x_wall -> blow-up time
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.x_wall) == 0:
            raise ValueError("grid must be nonempty")
        if not np.all(np.diff(self.x_wall) > 0):
            raise ValueError("grid must be strictly increasing")


@dataclass(frozen=True)
class LyapunovResult:
    """Per-realization exponents with their mean and standard deviation."""

    estimates: np.ndarray
    mean: float
    std: float
    renorm_interval: float
    d0: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.estimates)):
            raise ValueError("estimates must be finite")


@dataclass(frozen=True)
class SpectrumResult:
    """One-sided power spectral density with frequencies in units of Omega."""

    freq: np.ndarray   # angular frequency / Omega
    power: np.ndarray
    window: str

    def __post_init__(self):
        if np.any(self.power < 0):
            raise ValueError("power must be non-negative")


@dataclass(frozen=True)
class K01Result:
    """0-1 test statistic: median K over random translation frequencies c."""

    K: float
    per_c: np.ndarray
    c_values: np.ndarray

    def __post_init__(self):
        if len(self.per_c) and abs(self.K - float(np.median(self.per_c))) > 1e-12:
            raise ValueError("K must be the median of the per-c values")


def poincare(traj: Trajectory, direction: str = "down") -> PoincareSection:
    """Crossings of P = 0 located by linear interpolation between samples.

    direction 'down' takes P > 0 -> P <= 0 transitions, 'up' the reverse,
    'both' takes every sign change.  An empty section is allowed.
    """
    if direction not in ("up", "down", "both"):
        raise ValueError(f"direction must be up/down/both, got {direction!r}")
    if len(traj) < 2:
        raise ValueError("trajectory must have at least 2 samples")
    t, X, P = traj.t, traj.X, traj.P
    down = (P[:-1] > 0) & (P[1:] <= 0)
    up = (P[:-1] < 0) & (P[1:] >= 0)
    mask = {"down": down, "up": up, "both": down | up}[direction]
    idx = np.nonzero(mask)[0]
    w = P[idx] / (P[idx] - P[idx + 1])  # fraction of the step to the zero
    tc = t[idx] + w * (t[idx + 1] - t[idx])
    xc = X[idx] + w * (X[idx + 1] - X[idx])
    # a sample landing exactly on P=0 can bracket twice; keep unique times
    if len(tc) > 1:
        keep = np.concatenate(([True], np.diff(tc) > 0))
        tc, xc = tc[keep], xc[keep]
    return PoincareSection(tc, xc, direction)


def cluster_sections(xs, tol: float = 0.02):
    """Group sorted section values into clusters separated by gaps > tol."""
    xs = np.sort(np.asarray(xs, dtype=float))
    if len(xs) == 0:
        return []
    return np.split(xs, np.nonzero(np.diff(xs) > tol)[0] + 1)


def cluster_count(xs, tol: float = 0.02, min_frac: float = 0.02) -> int:
    """Number of clusters holding at least min_frac of the points."""
    groups = cluster_sections(xs, tol)
    n = sum(len(g) for g in groups)
    return sum(1 for g in groups if len(g) >= min_frac * n)


def _scan_point(args):
    (xw, p_kw, b, model, seed, n_transient, n_record, stride, spc,
     feed, damp, noise_scale, lyap_seed, lyap_transient, lyap_span) = args
    p = SystemParams(x_wall=xw, **p_kw)
    out = {"x_wall": xw}
    try:
        traj = run(p, b, model, seed, n_transient, n_record,
                   sample_stride=stride, steps_per_cycle=spc,
                   nonlinear_feed=feed, moment_damping_rate=damp,
                   noise_scale=noise_scale)
        out["section"] = poincare(traj, "down").X
    except BlowUpError as e:
        out["blowup"] = e.t
        out["section"] = np.array([])
    try:
        out["lyapunov"] = lyapunov_run(
            p, b, model, lyap_seed, lyap_transient, lyap_span,
            steps_per_cycle=spc, nonlinear_feed=feed,
            moment_damping_rate=damp, noise_scale=noise_scale)
    except BlowUpError as e:
        out.setdefault("blowup", e.t)
        out["lyapunov"] = np.nan
    return out


def bifurcation_scan(p: SystemParams, b: BathParams, model: NoiseModel,
                     x_wall_grid, seed=0, seed_policy: str = "fixed",
                     n_transient_cycles: int = 200,
                     n_record_cycles: int = 500,
                     sample_stride: int = 2,
                     steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE,
                     nonlinear_feed: bool = False,
                     moment_damping_rate: float = None,
                     noise_scale: float = 1.0,
                     n_workers: int = 1) -> BifurcationScan:
    """Poincaré samples and Lyapunov exponent for each wall position.

    seed_policy 'fixed' reuses the same noise realization at every grid
    point; 'fresh' derives a distinct seed per point.  Per-point blow-ups
    are recorded in the failures map and the scan continues.
    """
    grid = np.asarray(x_wall_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    if seed_policy not in ("fixed", "fresh"):
        raise ValueError(f"seed_policy must be fixed/fresh, got {seed_policy!r}")
    from .integrator import DEFAULT_MOMENT_DAMPING_RATE
    if moment_damping_rate is None:
        moment_damping_rate = DEFAULT_MOMENT_DAMPING_RATE

    p_kw = {"k": p.k, "A": p.A, "m": p.m, "F": p.F, "Omega": p.Omega,
            "hbar": p.hbar, "c_slope": p.c_slope}
    if seed_policy == "fixed":
        seeds = [seed] * grid.size
    else:
        seeds = [int(s) for s in
                 np.random.SeedSequence(seed).generate_state(grid.size, np.uint64)]
    tasks = [(float(xw), p_kw, b, model, sd, n_transient_cycles,
              n_record_cycles, sample_stride, steps_per_cycle,
              nonlinear_feed, moment_damping_rate, noise_scale,
              sd, n_transient_cycles, n_record_cycles)
             for xw, sd in zip(grid, seeds)]
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_scan_point, tasks))
    else:
        results = [_scan_point(t) for t in tasks]

    sections = tuple(r["section"] for r in results)
    lams = np.array([r["lyapunov"] for r in results])
    failures = {r["x_wall"]: r["blowup"] for r in results if "blowup" in r}
    md = {"seed": seed, "seed_policy": seed_policy,
          "n_transient_cycles": n_transient_cycles,
          "n_record_cycles": n_record_cycles,
          "nonlinear_feed": nonlinear_feed,
          "moment_damping_rate": moment_damping_rate,
          "noise_scale": noise_scale}
    return BifurcationScan(grid, sections, lams, failures, md)


def lyapunov_largest(p: SystemParams, b: BathParams, model: NoiseModel,
                     seed, d0: float = 1e-8,
                     renorm_cycles: int = 1,
                     n_transient_cycles: int = 200,
                     n_span_cycles: int = 300, **kw) -> float:
    """Largest Lyapunov exponent of one shared-noise twin-trajectory run."""
    if d0 <= 0:
        raise ValueError(f"initial offset d0 must be positive, got {d0}")
    spc = kw.get("steps_per_cycle", DEFAULT_STEPS_PER_CYCLE)
    return lyapunov_run(p, b, model, seed, n_transient_cycles, n_span_cycles,
                        d0=d0, renorm_steps=renorm_cycles * spc, **kw)


def power_spectrum(x, dt: float, Omega: float,
                   window: str = "hann") -> SpectrumResult:
    """Welch periodogram (8 segments, 50% overlap), frequencies in Omega units.

    The reported frequency axis is angular frequency divided by Omega, so a
    pure sinusoid at the forcing frequency peaks at 1.0.  The density
    normalization satisfies Parseval: integrating the PSD over the reported
    axis recovers the series variance.
    """
    x = np.asarray(x, dtype=float)
    if len(x) < 2 ** 14:
        raise ValueError(f"need at least {2**14} samples, got {len(x)}")
    if window not in ("hann", "none"):
        raise ValueError(f"window must be hann/none, got {window!r}")
    win = "hann" if window == "hann" else "boxcar"
    # 8 segments at 50% overlap cover N = 4.5 * nperseg samples
    nperseg = int(2 * len(x) / 9)
    freqs, pxx = signal.welch(x, fs=1.0 / dt, window=win, nperseg=nperseg,
                              noverlap=nperseg // 2, detrend="constant",
                              scaling="density")
    # convert ordinary frequency [Hz] to angular frequency over Omega, and
    # rescale the density so that integral(P dnu) is preserved
    scale = 2.0 * np.pi / Omega
    return SpectrumResult(freqs * scale, pxx / scale, window)


def test_01(phi, n_c: int = 100, seed=0, normalize: bool = True) -> K01Result:
    """Gottwald-Melbourne 0-1 test on a stroboscopically sampled series.

    Translation variables p_c, q_c are driven by the series at n_c random
    frequencies c in (pi/5, 4pi/5); the modified mean-square displacement
    (oscillatory term subtracted) is correlated against time over lags
    n <= N/10, and K is the median of the per-c correlation coefficients
    clamped to [0, 1].  A constant series returns K = 0.
    """
    phi = np.asarray(phi, dtype=float)
    N = len(phi)
    if N < 2000:
        raise ValueError(f"need at least 2000 strobe points, got {N}")
    if n_c < 50:
        raise ValueError(f"need at least 50 c draws, got {n_c}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    cs = rng.uniform(np.pi / 5, 4 * np.pi / 5, size=n_c)

    sd = phi.std()
    # a numerically constant series (e.g. the strobe of a converged periodic
    # orbit) carries no displacement information: define K = 0 rather than
    # amplifying rounding residue through the normalization
    if sd <= 1e-9 * max(1.0, abs(float(phi.mean()))):
        return K01Result(0.0, np.zeros(n_c), cs)
    if normalize:
        phi = (phi - phi.mean()) / sd

    ncut = N // 10
    ns = np.arange(1, ncut + 1)
    Ephi2 = float(np.mean(phi) ** 2)
    ks = np.empty(n_c)
    for i, c in enumerate(cs):
        jc = np.arange(1, N + 1) * c
        pc = np.cumsum(phi * np.cos(jc))
        qc = np.cumsum(phi * np.sin(jc))
        M = np.empty(ncut)
        for j, n in enumerate(ns):
            dp = pc[n:] - pc[:-n]
            dq = qc[n:] - qc[:-n]
            M[j] = np.mean(dp * dp + dq * dq)
        # subtract the bounded oscillatory component of the MSD
        D = M - Ephi2 * (1.0 - np.cos(ns * c)) / (1.0 - np.cos(c))
        with np.errstate(invalid="ignore"):
            r = np.corrcoef(ns, D)[0, 1]
        ks[i] = min(1.0, max(0.0, 0.0 if not np.isfinite(r) else r))
    return K01Result(float(np.median(ks)), ks, cs)


def strobe(traj: Trajectory, steps_per_cycle: int = None) -> np.ndarray:
    """X sampled once per forcing period (stroboscopic section)."""
    md = traj.metadata
    if steps_per_cycle is None:
        steps_per_cycle = int(md["steps_per_cycle"])
    stride = int(md.get("sample_stride", 1))
    if steps_per_cycle % stride != 0:
        raise ValueError("sample_stride must divide steps_per_cycle to strobe")
    return traj.X[:: steps_per_cycle // stride]

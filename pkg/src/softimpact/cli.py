"""Command-line front end: configuration, subcommands, output management,
and gnuplot figure-script emission.

Subcommands: noise-fit, simulate, bifurcation, lyapunov, test01, fft.
Exit codes: 0 success, 1 runtime/integration failure, 2 configuration error.
"""

import argparse
import os
import sys

import numpy as np

from . import __version__
from .bath import FitError, QuadratureError, load_or_fit
from .config import (ConfigError, RunConfig, apply_overrides, config_echo,
                     load_config, validate)
from .diagnostics import (bifurcation_scan, poincare, power_spectrum, strobe,
                          test_01)
from .ensemble import EnsembleSpec, run_ensemble
from .integrator import (BlowUpError, read_trajectory_csv, run,
                         write_trajectory_csv)

FULL_SCALE = {"n_transient_cycles": 1000, "n_record_cycles": 1000,
              "n_realizations": 1000}


def _add_common(sp):
    sp.add_argument("--config", help="key=value configuration file")
    sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override a configuration key (repeatable)")
    sp.add_argument("--seed", type=int, help="master random seed")
    sp.add_argument("--threads", type=int, help="worker process count")
    sp.add_argument("--desk-scale", dest="desk_scale", action="store_true",
                    default=None, help="reduced desk-scale protocol (default)")
    sp.add_argument("--full-scale", dest="desk_scale", action="store_false",
                    help="production-scale cycle and realization counts")
    sp.add_argument("--output-dir", help="output directory "
                    "(default $SOFTIMPACT_OUTPUT or the working directory)")


def _build_config(args) -> RunConfig:
    cfg = RunConfig()
    desk_defaults = RunConfig()
    if args.config:
        cfg = load_config(args.config, cfg)
    cfg = apply_overrides(cfg, args.set)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    if args.desk_scale is not None:
        cfg.desk_scale = args.desk_scale
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    if not cfg.desk_scale:
        for key, full in FULL_SCALE.items():
            if getattr(cfg, key) == getattr(desk_defaults, key):
                setattr(cfg, key, full)
    return validate(cfg)


def _out(cfg: RunConfig, name: str) -> str:
    d = cfg.effective_output_dir()
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, name)


def _write_header(fh, md: dict):
    for key, val in md.items():
        fh.write(f"# {key}={val}\n")


def _gnuplot(path, lines):
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _noise_model(cfg: RunConfig):
    return load_or_fit(cfg.bath_params(), cfg.n_components)


def cmd_noise_fit(args) -> int:
    cfg = _build_config(args)
    model = _noise_model(cfg)
    path = _out(cfg, "noise_model.csv")
    with open(path, "w") as fh:
        _write_header(fh, {**config_echo(cfg),
                           "fit_residual": model.fit_residual,
                           "c0": model.c0(),
                           "package_version": __version__})
        fh.write("component,D,tau\n")
        for i, (D, tau) in enumerate(model.components, start=1):
            fh.write(f"{i},{D:.17g},{tau:.17g}\n")
    print(path)
    return 0


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    model = _noise_model(cfg)
    traj = run(cfg.system_params(), cfg.bath_params(), model, cfg.seed,
               cfg.n_transient_cycles, cfg.n_record_cycles,
               sample_stride=cfg.sample_stride,
               steps_per_cycle=cfg.steps_per_cycle,
               nonlinear_feed=cfg.nonlinear_feed,
               moment_damping_rate=cfg.moment_damping_rate,
               noise_scale=cfg.noise_scale)
    traj.metadata.update(config_echo(cfg))
    path = _out(cfg, "trajectory.csv")
    write_trajectory_csv(traj, path)
    _gnuplot(_out(cfg, "trajectory.gp"), [
        "set datafile separator ','",
        "set xlabel 't'",
        "set ylabel 'X'",
        f"plot 'trajectory.csv' using 1:2 with lines title 'X(t)'",
    ])
    print(path)
    return 0


def cmd_bifurcation(args) -> int:
    cfg = _build_config(args)
    model = _noise_model(cfg)
    n = int(round((cfg.grid_stop - cfg.grid_start) / cfg.grid_step)) + 1
    grid = cfg.grid_start + cfg.grid_step * np.arange(n)
    grid = grid[grid <= cfg.grid_stop + 1e-12]
    scan = bifurcation_scan(
        cfg.system_params(), cfg.bath_params(), model, grid,
        seed=cfg.seed, seed_policy=cfg.seed_policy,
        n_transient_cycles=cfg.n_transient_cycles,
        n_record_cycles=cfg.n_record_cycles,
        sample_stride=cfg.sample_stride,
        steps_per_cycle=cfg.steps_per_cycle,
        nonlinear_feed=cfg.nonlinear_feed,
        moment_damping_rate=cfg.moment_damping_rate,
        noise_scale=cfg.noise_scale, n_workers=cfg.threads)
    path = _out(cfg, "bifurcation.csv")
    with open(path, "w") as fh:
        _write_header(fh, {**config_echo(cfg),
                           "n_failures": len(scan.failures),
                           "package_version": __version__})
        fh.write("x_wall,X_poincare,lambda\n")
        for xw, xs, lam in zip(scan.x_wall, scan.sections, scan.lyapunov):
            if len(xs) == 0:
                fh.write(f"{xw:.17g},nan,{lam:.17g}\n")
            for x in xs:
                fh.write(f"{xw:.17g},{x:.17g},{lam:.17g}\n")
    _gnuplot(_out(cfg, "bifurcation.gp"), [
        "set datafile separator ','",
        "set xlabel 'x_wall'",
        "set ylabel 'X on Poincare section'",
        "plot 'bifurcation.csv' using 1:2 with dots title 'bifurcation'",
    ])
    print(path)
    return 0


def cmd_lyapunov(args) -> int:
    cfg = _build_config(args)
    model = _noise_model(cfg)
    spec = EnsembleSpec(cfg.system_params(), cfg.bath_params(), model,
                        count=cfg.n_realizations, master_seed=cfg.seed,
                        n_transient_cycles=cfg.n_transient_cycles,
                        n_span_cycles=cfg.n_record_cycles,
                        run_kwargs={
                            "d0": cfg.d0,
                            "renorm_steps": cfg.renorm_cycles * cfg.steps_per_cycle,
                            "steps_per_cycle": cfg.steps_per_cycle,
                            "nonlinear_feed": cfg.nonlinear_feed,
                            "moment_damping_rate": cfg.moment_damping_rate,
                            "noise_scale": cfg.noise_scale})
    res = run_ensemble(spec, task="lyapunov", n_workers=cfg.threads,
                       progress=True)
    path = _out(cfg, "lyapunov.csv")
    with open(path, "w") as fh:
        _write_header(fh, {**config_echo(cfg),
                           "n_failed": res.n_failed,
                           "degenerate_count": res.degenerate_count,
                           "d0": cfg.d0,
                           "package_version": __version__})
        fh.write("realization,lambda\n")
        for i, lam in enumerate(res.values):
            fh.write(f"{i},{lam:.17g}\n")
        fh.write(f"summary,{res.mean:.17g},{res.std:.17g}\n")
    print(path)
    return 0


def _load_or_run_trajectory(args, cfg):
    if getattr(args, "input", None):
        return read_trajectory_csv(args.input)
    model = _noise_model(cfg)
    return run(cfg.system_params(), cfg.bath_params(), model, cfg.seed,
               cfg.n_transient_cycles, cfg.n_record_cycles,
               sample_stride=cfg.sample_stride,
               steps_per_cycle=cfg.steps_per_cycle,
               nonlinear_feed=cfg.nonlinear_feed,
               moment_damping_rate=cfg.moment_damping_rate,
               noise_scale=cfg.noise_scale)


def cmd_test01(args) -> int:
    cfg = _build_config(args)
    traj = _load_or_run_trajectory(args, cfg)
    phi = strobe(traj)
    res = test_01(phi, n_c=cfg.n_c, seed=cfg.seed)
    path = _out(cfg, "test01.csv")
    with open(path, "w") as fh:
        _write_header(fh, {**config_echo(cfg), "K": res.K,
                           "n_strobe": len(phi),
                           "package_version": __version__})
        fh.write("c,K_c\n")
        for c, k in zip(res.c_values, res.per_c):
            fh.write(f"{c:.17g},{k:.17g}\n")
    print(f"K={res.K:.6f}")
    print(path)
    return 0


def cmd_fft(args) -> int:
    cfg = _build_config(args)
    traj = _load_or_run_trajectory(args, cfg)
    Omega = float(traj.metadata.get("Omega", cfg.Omega))
    spec = power_spectrum(traj.X, traj.dt_sample, Omega, window=cfg.window)
    path = _out(cfg, "spectrum.csv")
    with open(path, "w") as fh:
        _write_header(fh, {**config_echo(cfg), "window": spec.window,
                           "package_version": __version__})
        fh.write("freq_over_Omega,power\n")
        for f, p in zip(spec.freq, spec.power):
            fh.write(f"{f:.17g},{p:.17g}\n")
    _gnuplot(_out(cfg, "spectrum.gp"), [
        "set datafile separator ','",
        "set logscale y",
        "set xlabel 'frequency / Omega'",
        "set ylabel 'PSD'",
        "plot 'spectrum.csv' using 1:2 with lines title 'FFT of X'",
    ])
    print(path)
    return 0


COMMANDS = {
    "noise-fit": cmd_noise_fit,
    "simulate": cmd_simulate,
    "bifurcation": cmd_bifurcation,
    "lyapunov": cmd_lyapunov,
    "test01": cmd_test01,
    "fft": cmd_fft,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="softimpact",
        description="Dissipative quantum soft-impact oscillator toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        _add_common(sp)
        if name in ("test01", "fft"):
            sp.add_argument("--input", help="trajectory CSV to analyze "
                            "(otherwise simulate from the configuration)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (BlowUpError, FitError, QuadratureError, OSError) as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

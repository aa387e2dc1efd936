"""Command-line front end: sweeps, oracle verification and experiment replay.

Every command reads one YAML config (defaults used where absent), writes
machine-readable outputs into --out and echoes the resolved config next to
them.  Runs are deterministic for a fixed (config, seed): CSV floats are
printed with 12 significant digits and JSON keys are sorted.  Exit codes:
0 success, 1 at least one verification check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

from .config import RunConfig
from .errors import ConfigError, CycleSenseError
from .fisher import GeneratorMoments
from .grid import make_gaussian, moments
from .network import KickVector
from . import oracle
from .pipeline import (TABLETOP_PRECISION_TABLE, calibrate_noise_floor,
                       end_to_end_sweep, fit_scaling_law, qcrb_comparison)
from .wva import (first_order_momentum_shift, min_detectable_tilt,
                  momentum_readout, qpd_signal, weak_value, wva_final_probe)

THREADS_ENV = "CYCLESENSE_THREADS"


def _fmt(x: float) -> str:
    return f"{x:.12e}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _prepare_out(cfg: RunConfig, out: str) -> Path:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg.echo_yaml(out_dir / "config.yaml")
    return out_dir


# -- commands -----------------------------------------------------------------


def cmd_qcrb_sweep(cfg: RunConfig, out: str, threads: int) -> int:
    out_dir = _prepare_out(cfg, out)
    rows = qcrb_comparison(cfg.n_values, cfg.probe_spec(), cfg.z_bar,
                           cfg.switch_modes(), cfg.trials)
    _write_csv(out_dir / "qcrb_sweep.csv",
               ["n_sensors", "mode", "qcrb", "qcrb_times_N4", "per_shot_precision"],
               [[r.n_sensors, r.mode.value, r.bound, r.scaled_bound,
                 r.per_shot_precision] for r in rows])
    return 0


def cmd_oracle_verify(cfg: RunConfig, out: str, threads: int) -> int:
    out_dir = _prepare_out(cfg, out)
    checks = oracle.run_all_checks(cfg.num_points, cfg.oracle_seeds,
                                   cfg.oracle_instances)
    payload = {
        "checks": [dataclasses.asdict(c) for c in checks],
        "all_passed": all(c.passed for c in checks),
    }
    _write_json(out_dir / "oracle_report.json", payload)
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name}: rel_error={c.rel_error:.3e} tol={c.tolerance:g}")
    return 0 if payload["all_passed"] else 1


def cmd_reproduce_experiment(cfg: RunConfig, out: str, threads: int,
                             source: str) -> int:
    if source == "synthetic" and len(set(cfg.n_values)) < 3:
        raise ConfigError("sweep.n_values: the scaling fit needs at least "
                          "three distinct sensor counts")
    out_dir = _prepare_out(cfg, out)
    probe = cfg.probe_spec()
    ps = cfg.post_selection()
    readout = cfg.readout_model()
    drive = cfg.drive_model()

    if source == "tabletop":
        points = [(n, phi) for n, _, phi in TABLETOP_PRECISION_TABLE]
        fit = fit_scaling_law(points)
        _write_csv(out_dir / "precision_points.csv",
                   ["n_sensors", "min_voltage_pp", "delta_phi_min"],
                   [[n, v, phi] for n, v, phi in TABLETOP_PRECISION_TABLE])
    else:
        floor = calibrate_noise_floor(cfg.geometry, probe.waist_radius, ps,
                                      readout, drive)
        noise = cfg.noise_model(calibrated_floor=floor)
        result = end_to_end_sweep(cfg.n_values, cfg.voltages, cfg.replicates,
                                  probe, ps, readout, drive, noise, cfg.z_bar,
                                  cfg.lead_in, cfg.lead_out, cfg.seed, threads)
        _write_csv(out_dir / "snr_sweep.csv",
                   ["n_sensors", "drive_voltage_pp", "replicate", "snr"],
                   [[s.n_sensors, s.drive_voltage_pp, s.replicate_index, s.snr]
                    for s in result.samples])
        points = list(result.precision_points)
        fit = result.scaling

    _write_json(out_dir / "scaling_fit.json", {
        "source": source,
        "a_rad": fit.a,
        "b": fit.b,
        "r_squared": fit.r_squared,
        "points": [{"n_sensors": int(n), "delta_phi_min_rad": float(d)}
                   for n, d in points],
    })
    n_max = max(int(n) for n, _ in points)
    dense = [1.0 + 0.1 * i for i in range(10 * (n_max - 1) + 1)]
    _write_csv(out_dir / "fitted_curve.csv", ["n_sensors", "delta_phi_min"],
               [[_fmt(n), fit.predict(n)] for n in dense])
    _write_csv(out_dir / "heisenberg_curve.csv", ["n_sensors", "delta_phi_min"],
               [[_fmt(n), fit.heisenberg_comparison(n)] for n in dense])
    return 0


def cmd_wva_sim(cfg: RunConfig, out: str, threads: int, n_sensors: int) -> int:
    if n_sensors < 1:
        raise ConfigError(f"--n: need at least one sensor, got {n_sensors}")
    out_dir = _prepare_out(cfg, out)
    probe = cfg.probe_spec()
    ps = cfg.post_selection()
    geom = cfg.geometry(n_sensors)
    grid = cfg.grid(n_sensors)
    psi = make_gaussian(probe, grid)
    kicks = KickVector.uniform(n_sensors, cfg.theta_bar)

    chi, prob = wva_final_probe(psi, geom, kicks, ps, method="exact_grid")
    mean_exact, spread_exact = momentum_readout(chi, cfg.readout_model(),
                                                probe.wave_number)
    payload = {
        "n_sensors": n_sensors,
        "theta_bar": cfg.theta_bar,
        "phi_bar": cfg.theta_bar / probe.wave_number,
        "weak_value_imag": weak_value(ps).imag,
        "success_probability": prob,
        "success_probability_no_signal": math.sin(ps.epsilon) ** 2,
        "mean_momentum_exact": moments(chi).mean_p,
        "predicted_momentum_shift": first_order_momentum_shift(
            geom, probe.delta_p**2, ps, cfg.theta_bar),
        "detector_mean": mean_exact,
        "detector_spread": spread_exact,
    }
    try:
        chi_lin, prob_lin = wva_final_probe(psi, geom, kicks, ps,
                                            method="first_order")
        payload["mean_momentum_first_order"] = moments(chi_lin).mean_p
        payload["success_probability_first_order"] = prob_lin
    except CycleSenseError as exc:
        payload["first_order_skipped"] = f"{type(exc).__name__}: {exc}"
    theta_min, phi_min = min_detectable_tilt(geom, probe.delta_p, ps)
    payload["min_detectable_theta_bar"] = theta_min
    payload["min_detectable_phi_bar"] = phi_min
    i_delta, v_delta = qpd_signal(cfg.theta_bar / probe.wave_number, geom,
                                  probe.waist_radius, ps, cfg.readout_model())
    payload["qpd_differential_power_w"] = i_delta
    payload["qpd_voltage_v"] = v_delta
    gm = GeneratorMoments.from_moments(moments(psi), probe.wave_number,
                                       geom.z_bar, n_sensors)
    payload["probe_moments"] = {"var_x": gm.var_x, "var_p": gm.var_p,
                                "cov_xp": gm.cov_xp, "mean_p": gm.mean_p}
    _write_json(out_dir / "wva_sim.json", payload)
    return 0


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cyclesense",
        description="Cyclic sensing-network toolkit: precision bounds, "
                    "grid simulation and experiment-analysis replay.")
    parser.add_argument("--config", default=None, help="YAML config path")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config RNG seed")
    parser.add_argument("--threads", type=int, default=1,
                        help=f"worker threads (env {THREADS_ENV} overrides)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("qcrb-sweep", help="closed-form bound table over N and mode")
    sub.add_parser("oracle-verify", help="run every analytic-vs-oracle check")
    p_rep = sub.add_parser("reproduce-experiment",
                           help="SNR sweep, threshold extraction and scaling fit")
    p_rep.add_argument("--source", choices=("synthetic", "tabletop"),
                       default="synthetic",
                       help="generate data from the forward model or reuse the "
                            "embedded tabletop table")
    p_sim = sub.add_parser("wva-sim", help="single-point readout chain dump")
    p_sim.add_argument("--n", type=int, default=3, help="number of sensors")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_yaml(args.config) if args.config else RunConfig()
        if args.seed is not None:
            cfg.seed = args.seed
        cfg.validate()
        threads = args.threads
        if os.environ.get(THREADS_ENV):
            try:
                threads = int(os.environ[THREADS_ENV])
            except ValueError:
                raise ConfigError(f"environment variable {THREADS_ENV} must be "
                                  f"an integer") from None
        if threads < 1:
            raise ConfigError("threads must be at least 1")

        if args.command == "qcrb-sweep":
            return cmd_qcrb_sweep(cfg, args.out, threads)
        if args.command == "oracle-verify":
            return cmd_oracle_verify(cfg, args.out, threads)
        if args.command == "reproduce-experiment":
            return cmd_reproduce_experiment(cfg, args.out, threads, args.source)
        if args.command == "wva-sim":
            return cmd_wva_sim(cfg, args.out, threads, args.n)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

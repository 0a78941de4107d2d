"""Command-line entry point.

Exit codes: 0 success, 2 configuration/usage error, 3 physics-domain error,
4 input/output error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, gaussian
from .config import ConfigError, RunConfig, get_float, get_int, load_config, parse_list
from .effective import (
    SCHEME1_MODES,
    coupling_constants,
    scheme1_propagator,
    scheme2_coupling,
    scheme2_r,
    squeeze_time,
)
from .errors import PhysicsDomainError
from .homodyne import (
    figure2,
    moments_from_state,
    quadrature_moments,
    scheme2_correlation,
    scheme2_pulse_state,
    write_gnuplot_script,
)
from .lindblad import compare_full_vs_effective
from .regimes import indium_preset, validate_scheme1, validate_scheme2

FIGURE2_R = [1.8, 1.5, 1.3, 1.1, 1.05]
EXIT_USAGE, EXIT_PHYSICS, EXIT_IO = 2, 3, 4


def _encode(value):
    if isinstance(value, complex) or isinstance(value, np.complexfloating):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return [_encode(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def _write_metadata(out: Path, name: str, command: str, config: RunConfig, results: dict,
                    truncation: dict | None = None) -> None:
    meta = {
        "version": __version__,
        "command": command,
        "config": config.resolved(),
        "results": results,
        "truncation": truncation or {},
    }
    (out / name).write_text(json.dumps(_encode(meta), indent=2, sort_keys=True) + "\n")


def _resolve(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if args.preset == "indium":
        params, cavity = indium_preset()
        config.params = config.params or params
        config.cavity = config.cavity or cavity
    return config


def _need_params(config: RunConfig):
    if config.params is None:
        raise ConfigError("this command needs a [params] section or --preset indium")
    return config.params


# --- subcommands -------------------------------------------------------------


def cmd_effective(args, config: RunConfig, out: Path) -> dict:
    params = _need_params(config)
    knobs = config.section("effective")
    c = coupling_constants(params)
    n_points = get_int(knobs, "n_points", 101)
    times = np.linspace(0.0, get_float(knobs, "periods", 1.0) * c.half_period, n_points)
    rows = []
    for t in times:
        state = gaussian.apply_bogoliubov(gaussian.vacuum(SCHEME1_MODES), scheme1_propagator(c, t))
        ex, ep = gaussian.epr_variance(state)
        rows.append([t, gaussian.occupation(state, "cav1"), gaussian.occupation(state, "cav2"),
                     gaussian.occupation(state, "motion"), ex, ep])
    with open(out / "effective.csv", "w") as fh:
        fh.write("t,n_cav1,n_cav2,n_motion,epr_x,epr_p\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    m = quadrature_moments(c)
    results = {"chi1": c.chi1, "chi2": c.chi2, "r": c.r, "phi": c.phi, "theta": c.theta,
               "T_pi": c.half_period, "mean_photons": c.mean_photons(),
               "q1_sq": m.q1_sq, "q2_sq": m.q2_sq, "q1q2": m.q1q2,
               "epr_at_T_pi": rows[-1][4:] if math.isclose(times[-1], c.half_period) else None}
    _write_metadata(out, "effective.json", "effective", config, results)
    print(f"r = {c.r:.6g}, Theta = {c.theta:.6g}, T_pi = {c.half_period:.6g}, <n> = {c.mean_photons():.6g}")
    return results


def cmd_full_compare(args, config: RunConfig, out: Path) -> dict:
    params = _need_params(config)
    knobs = config.section("full-compare")
    dims = [int(v) for v in parse_list(knobs.get("dims", "2,12,14,14"), "dims")]
    duration = get_float(knobs, "duration", -1.0)
    strict = knobs.get("strict", "false").strip().lower() in ("1", "true", "yes")
    report = compare_full_vs_effective(params, None if duration < 0 else duration, dims, strict=strict,
                                       lamb_dicke=knobs.get("lamb_dicke", "second_order").strip())
    results = report.to_dict()
    _write_metadata(out, "full_compare.json", "full-compare", config, results,
                    {"flag": report.truncation_flag, "top_levels": report.top_levels,
                     "tolerance": report.truncation_tol})
    print(f"max occupation error {report.max_occupation_error:.4g}, fidelity {report.fidelity:.4g}, "
          f"truncation flag {report.truncation_flag}")
    return results


def cmd_figure2(args, config: RunConfig, out: Path) -> dict:
    knobs = config.section("figure2")
    if args.r_list is not None:
        r_list = parse_list(args.r_list, "--r-list")
    elif "r_list" in knobs:
        r_list = parse_list(knobs["r_list"], "r_list")
    else:
        r_list = list(FIGURE2_R)
    if not r_list:
        raise ConfigError("r_list is empty")
    kappa_dt = get_float(knobs, "kappa_dt", 0.1)
    grid = np.linspace(0.0, get_float(knobs, "kappa_t_max", 3.0), get_int(knobs, "n_points", 301))
    theta = get_float(knobs, "theta", 0.0)

    def one(r):
        return figure2([r], grid, kappa_dt, theta)[0]

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        series = list(pool.map(one, r_list))
    files, labels = [], []
    for s in series:
        stem = f"figure2_r{s.metadata['r']:g}"
        s.to_csv(out / f"{stem}.csv")
        s.to_gnuplot(out / f"{stem}.dat")
        files.append(f"{stem}.dat")
        labels.append(f"r = {s.metadata['r']:g}")
    write_gnuplot_script(out / "figure2.gp", files, labels)
    results = {"series": [s.metadata for s in series], "files": [f.replace(".dat", ".csv") for f in files]}
    _write_metadata(out, "figure2.json", "figure2", config, results)
    print(f"wrote {len(series)} series to {out}")
    return results


def cmd_scheme2(args, config: RunConfig, out: Path) -> dict:
    knobs = config.section("scheme2")
    if config.params is not None and "chi" not in knobs:
        chi = scheme2_coupling(config.params)
        kappa = config.params.kappa1 or get_float(knobs, "kappa", 1.0)
    else:
        chi = complex(get_float(knobs, "chi", 1.0))
        kappa = get_float(knobs, "kappa", 1.0)
    if "T1" in knobs or "t1" in knobs:
        t1 = get_float(knobs, "t1" if "t1" in knobs else "T1")
    else:
        t1 = squeeze_time(chi, get_float(knobs, "target_n", 100.0))
    kappa_tau = get_float(knobs, "kappa_tau", 3.0)
    theta = get_float(knobs, "theta", -float(np.angle(chi)))
    grid = np.linspace(0.0, get_float(knobs, "kappa_t_max", 3.0), get_int(knobs, "n_points", 301))
    series = scheme2_correlation(chi, t1, kappa_tau / kappa, grid, get_float(knobs, "kappa_dt", 0.1),
                                 kappa, theta, theta)
    series.to_csv(out / "scheme2.csv")
    series.to_gnuplot(out / "scheme2.dat")
    write_gnuplot_script(out / "scheme2.gp", ["scheme2.dat"], [f"r = {series.metadata['r']:.5g}"])
    state = scheme2_pulse_state(chi, t1)
    m = moments_from_state(state, theta, theta)
    results = {**series.metadata, "r": scheme2_r(chi, t1), "mean_photons": math.sinh(abs(chi) * t1) ** 2,
               "epr_variance": gaussian.epr_variance(state, theta, theta),
               "q1_sq": m.q1_sq, "q2_sq": m.q2_sq, "q1q2": m.q1q2}
    _write_metadata(out, "scheme2.json", "scheme2", config, results)
    print(f"r = {results['r']:.6g}, <n> = {results['mean_photons']:.6g}")
    return results


def cmd_regimes(args, config: RunConfig, out: Path) -> dict:
    params = _need_params(config)
    if config.cavity is None:
        raise ConfigError("regimes needs a [cavity] section or --preset indium")
    knobs = config.section("regimes")
    threshold = get_float(knobs, "threshold", 5.0)
    report = validate_scheme1(params, config.cavity, threshold)
    results = {"scheme1": report.to_dict()}
    print(report.table())
    if "target_n" in knobs:
        p2 = params
        if "eta2" in knobs:
            p2 = p2.replace(eta=get_float(knobs, "eta2"))
        rep2 = validate_scheme2(p2, config.cavity, get_float(knobs, "target_n"), threshold)
        results["scheme2"] = rep2.to_dict()
        print()
        print(rep2.table())
    _write_metadata(out, "regimes.json", "regimes", config, results)
    return results


COMMANDS = {
    "effective": cmd_effective,
    "full-compare": cmd_full_compare,
    "figure2": cmd_figure2,
    "scheme2": cmd_scheme2,
    "regimes": cmd_regimes,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI or JSON configuration file")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for independent series")
    common.add_argument("--preset", choices=["indium"], help="use the built-in In+ parameter set")
    parser = argparse.ArgumentParser(prog="epr-cavity", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("effective", parents=[common], help="effective two-mode dynamics and T_pi moments")
    sub.add_parser("full-compare", parents=[common], help="full Fock-space model vs effective model")
    fig = sub.add_parser("figure2", parents=[common], help="homodyne correlation signal C(t) for several r")
    fig.add_argument("--r-list", help="comma-separated ratios r > 1")
    sub.add_parser("scheme2", parents=[common], help="sequential-pulse scheme correlations")
    sub.add_parser("regimes", parents=[common], help="validity conditions and margins")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, config, out)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhysicsDomainError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())

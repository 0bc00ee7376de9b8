"""Command line front end.

Verbs: trace, psivar, holder, unifmap, bessel, gridsum, witness,
exponents.  Flags beat config-file entries, which beat per-verb
defaults; config files are flat key=value text.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import io as sio
from .exponents import exponent_formulas
from .experiments import (
    ExperimentConfig,
    config_from_mapping,
    experiment_bessel_suite,
    experiment_holder_modulus,
    experiment_psi_variation,
    experiment_unif_map_scaling,
    load_config_file,
    run_sle_trace,
    write_metadata,
    write_plot_script,
)
from .grid import fw_grid_witness, rate_sweep, sample_derivative_events
from .loewner import DrivingPath

# representatives of the nine lattice-sum regimes
SUM_REGIMES = (
    (2.0, -3.0), (2.0, -2.0), (2.0, 0.0),
    (1.0, -3.0), (1.0, -2.0), (1.0, 0.0),
    (0.5, -2.0), (0.5, -1.5), (0.5, 0.0),
)

_VERB_DEFAULTS = {
    "trace": {"kappa": "2.0", "n": "1"},
    "psivar": {"kappa": "2.0", "dt": "0.0002", "n": "20"},
    "holder": {"kappa": "6.0", "dt": "0.0002", "n": "10"},
    "unifmap": {"kappa": "12.0", "dt": "0.0002", "n": "5"},
    "bessel": {"kappa": "2.0", "n": "10000"},
    "witness": {"kappa": "6.0", "dt": "0.0001", "n": "10"},
    "gridsum": {},
    "exponents": {},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sleflow", description="Loewner flow experiments")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kappa", type=float, default=None)
    common.add_argument("--T", type=float, default=None)
    common.add_argument("--dt", type=float, default=None)
    common.add_argument("--n", type=int, default=None,
                        help="paths / events, per verb")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=str, default=None)
    common.add_argument("--config", type=str, default=None,
                        help="flat key=value config file")
    sub = parser.add_subparsers(dest="command", required=True)
    for verb in _VERB_DEFAULTS:
        sub.add_parser(verb, parents=[common])
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    merged = dict(_VERB_DEFAULTS[args.command])
    merged["name"] = args.command
    if args.config is not None:
        entries = load_config_file(args.config)
        if entries.get("name", args.command) != args.command:
            raise ValueError(
                f"config file is for {entries['name']!r}, not {args.command!r}")
        merged.update(entries)
    for key in ("kappa", "T", "dt", "n", "seed", "out"):
        value = getattr(args, key)
        if value is not None:
            merged[key] = str(value)
    merged["name"] = args.command
    return config_from_mapping(merged)


def _cmd_trace(config: ExperimentConfig) -> int:
    result = run_sle_trace(config)
    print(f"trace: {result.n_steps} steps, end {result.end_point:.4f}, "
          f"max jump {result.max_jump:.3e} -> {result.csv_path}")
    return 0


def _cmd_psivar(config: ExperimentConfig) -> int:
    result = experiment_psi_variation(config)
    for c in result.curves:
        print(f"psivar: p={c.p:g} q={c.q:g} medians "
              + " ".join(f"{m:.4f}" for m in c.medians)
              + f" total ratio {c.total_ratio:.3f}")
    print(f"psivar -> {result.csv_path}")
    return 0


def _cmd_holder(config: ExperimentConfig) -> int:
    result = experiment_holder_modulus(config)
    if result.mode == "log_only":
        print(f"holder: log-only fit slope {result.slope_mean:.4f} "
              f"+- {result.slope_ci95:.4f} (95% CI, asymptotic -1/4)")
    else:
        for b in result.brackets:
            print(f"holder: alpha={b.alpha:+.3f} sup medians "
                  + " ".join(f"{m:.4f}" for m in b.medians)
                  + f" total ratio {b.total_ratio:.4f}")
        print(f"holder: window spread growth {result.window_spread_growth:.4f}")
    print(f"holder -> {result.csv_path}")
    return 0


def _cmd_unifmap(config: ExperimentConfig) -> int:
    result = experiment_unif_map_scaling(config)
    print(f"unifmap: fitted power {result.slope_mean:.4f} "
          f"+- {result.slope_ci95:.4f} (predicted {result.predicted_power:.4f})")
    if result.control_rel_err is not None:
        print(f"unifmap: control rel err {result.control_rel_err:.2e}, "
              f"envelope fit {result.envelope_fit_power:.4f}")
    print(f"unifmap: T-doubling monotone: {result.t_doubling_ok} "
          f"-> {result.csv_path}")
    return 0


def _cmd_bessel(config: ExperimentConfig) -> int:
    result = experiment_bessel_suite(config)
    for row in result.rows:
        print(f"bessel: {row.metric:<16} {row.value:.4f} in "
              f"[{row.lo:.4f}, {row.hi:.4f}] {'ok' if row.ok else 'FAIL'}")
    print(f"bessel -> {result.csv_path}")
    return 0 if result.all_ok else 1


def _cmd_gridsum(config: ExperimentConfig) -> int:
    t0 = time.perf_counter()
    hs = [2.0 ** -e for e in range(4, 9)]
    rows = []
    worst = 0.0
    for a, zeta in SUM_REGIMES:
        sweep = rate_sweep(a, zeta, hs)
        rows.extend(sweep)
        # the predicted column carries the h-shape only, so the ratio
        # sum/predicted must stay in a constant band across the sweep
        ratios = [s / p for _, _, _, s, p in sweep]
        worst = max(worst, max(ratios) / min(ratios))
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "gridsum.csv"
    sio.write_gridsum_csv(csv_path, rows)
    wall = time.perf_counter() - t0
    write_metadata(out / "gridsum.meta", config, wall,
                   {"worst_band": repr(worst)})
    write_plot_script(out / "gridsum.gp", "lattice sums", "h", "sum",
                      [f"'{csv_path.name}' using 1:4 with points notitle",
                       f"'{csv_path.name}' using 1:5 with lines notitle"],
                      logscale="xy")
    print(f"gridsum: {len(rows)} rows over {len(SUM_REGIMES)} regimes, "
          f"worst sum/predicted band {worst:.3f} -> {csv_path}")
    return 0


def _cmd_witness(config: ExperimentConfig) -> int:
    t0 = time.perf_counter()
    if config.kappa <= 0.0:
        raise ValueError(f"witness sweep needs kappa > 0, got {config.kappa}")
    driving = DrivingPath.brownian(config.kappa, config.T, config.n_steps,
                                   config.seed)
    events = sample_derivative_events(driving, config.n_paths, config.seed)
    results = [fw_grid_witness(driving, k, v, r) for k, v, r in events]
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{config.stem}.csv"
    sio.write_witness_csv(csv_path, [w.as_csv_row() for w in results])
    found = sum(w.found for w in results)
    wall = time.perf_counter() - t0
    write_metadata(out / f"{config.stem}.meta", config, wall,
                   {"found": found, "events": len(results)})
    write_plot_script(out / f"{config.stem}.gp",
                      f"witnesses kappa={config.kappa:g}", "t", "v",
                      [f"'{csv_path.name}' using 1:2 with points notitle"],
                      logscale="y")
    print(f"witness: {found}/{len(results)} events certified -> {csv_path}")
    return 0 if found == len(results) else 1


def _cmd_exponents(config: ExperimentConfig) -> int:
    t0 = time.perf_counter()
    if config.kappa > 0.0:
        kappas = [config.kappa]
    else:
        kappas = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 8.5, 10.0, 12.0]
    tables = [exponent_formulas(k) for k in kappas]
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "exponents.csv"
    sio.write_exponent_csv(csv_path, [t.as_csv_row() for t in tables])
    print(f"{'kappa':>6} {'d':>8} {'alpha':>10} {'beta':>10} {'p':>10}")
    for t in tables:
        note = "  (log-only boundary)" if t.log_only else ""
        print(f"{t.kappa:>6g} {t.d:>8.4f} {t.alpha:>10.6f} {t.beta:>10.6f} "
              f"{t.p:>10.6f}{note}")
    wall = time.perf_counter() - t0
    write_metadata(out / "exponents.meta", config, wall,
                   {"n_rows": len(tables)})
    write_plot_script(out / "exponents.gp", "regularity exponents", "kappa",
                      "value",
                      [f"'{csv_path.name}' using 1:{c} with linespoints "
                       f"title '{name}'"
                       for c, name in ((2, "d"), (3, "alpha"), (4, "beta"))])
    print(f"exponents -> {csv_path}")
    return 0


_HANDLERS = {
    "trace": _cmd_trace,
    "psivar": _cmd_psivar,
    "holder": _cmd_holder,
    "unifmap": _cmd_unifmap,
    "bessel": _cmd_bessel,
    "gridsum": _cmd_gridsum,
    "witness": _cmd_witness,
    "exponents": _cmd_exponents,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = resolve_config(args)
    return _HANDLERS[args.command](config)


if __name__ == "__main__":
    sys.exit(main())

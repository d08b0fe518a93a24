"""Command-line front end.

Subcommands: params, teleport, classical, cat, epr-demo, sweep.
Exit codes: 0 success, 1 error, 2 success with design warnings.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .collision import (
    CollisionValidityError,
    collision_range,
    momentum_resolution,
    position_resolution,
    validity_threshold,
)
from .config import ConfigError, apply_overrides, config_from_dict, load_config, normalize_config
from .phasespace import BinSpec, CatState, histogram
from .source import com_temperature, design_check, epr_pair_state, sample_epr_pair, squeezing_parameter
from .teleport import (
    SWEEP_PARAMETERS,
    ConfigurationError,
    RunConfig,
    RunReport,
    error_budget,
    f_max,
    input_densities,
    nonclassicality,
    resolve_noise,
    run_cat_output,
    run_classical,
    run_ensemble,
    sweep,
)

EXIT_OK, EXIT_ERROR, EXIT_WARN = 0, 1, 2


class CliError(Exception):
    pass


# -- output helpers ---------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        raise CliError("refusing to write a non-finite value")
    return f"{v:.16e}"


def write_table(path: Path, header: list[str], rows, fmt: str) -> Path:
    rows = [list(r) for r in rows]
    if fmt == "json":
        path = path.with_suffix(".json")
        data = [dict(zip(header, (float(c) if not isinstance(c, (bool, int, np.integer))
                                  else int(c) for c in r))) for r in rows]
        path.write_text(json.dumps(data, indent=1) + "\n", encoding="utf-8")
        return path
    path = path.with_suffix(".csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(c) for c in r])
    return path


def _write_summary(out: Path, summary: dict):
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def _hist_rows(h, ref):
    return zip(h.bin_edges[:-1], h.bin_edges[1:], h.counts, h.density(), ref)


def _write_hist(out: Path, name: str, h, ref, unit: str, fmt: str):
    header = [f"bin_lo_{unit}", f"bin_hi_{unit}", "count",
              f"density_per_{unit}", f"input_density_per_{unit}"]
    write_table(out / name, header, _hist_rows(h, ref), fmt)


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise CliError(f"output directory {out} is not writable: {exc}") from None
    return out


# -- config -----------------------------------------------------------------

def _build_config(args, require_file: bool = True) -> tuple[dict, RunConfig]:
    if args.config:
        raw = load_config(args.config)
    elif require_file:
        raise CliError("--config is required for this subcommand")
    else:
        raw = {}
    raw = apply_overrides(raw, args.set or [])
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.events is not None:
        raw["events"] = args.events
    if args.workers is not None:
        raw["workers"] = args.workers
    norm = normalize_config(raw)
    return norm, config_from_dict(norm)


def _base_summary(norm: dict, report: RunReport | None = None) -> dict:
    s = {"version": __version__, "config": norm}
    if report is not None:
        s.update(report.summary())
    return s


# -- params -----------------------------------------------------------------

_DISPLAY = {"m": ("nm", 1e9), "K": ("uK", 1e6), "mps": ("mm/s", 1e3)}


def derived_parameters(config: RunConfig) -> tuple[list[tuple[str, float, str]], list[str]]:
    """Every derived quantity as (name, SI value, SI unit), plus design warnings."""
    src = config.source
    sp = src.species
    epr = epr_pair_state(src)
    rows = [
        ("fragment_mass", sp.mass, "kg"),
        ("molecule_mass", sp.molecule_mass, "kg"),
        ("charge", sp.charge_number, "e"),
        ("com_temperature", com_temperature(sp, src.D), "K"),
        ("squeezing_parameter", squeezing_parameter(src.D, src.dd), ""),
        ("epr_product_over_hbar", epr.epr_product_over_hbar, ""),
        ("com_momentum_spread", epr.sigma_psum, "kgmps"),
        ("com_velocity_spread", epr.sigma_psum / sp.mass, "mps"),
    ]
    warnings = []
    col = config.collision
    if col is not None:
        thr = validity_threshold(sp, src.D)
        rows += [
            ("collision_range", collision_range(sp, col.v_y), "m"),
            ("validity_threshold_momentum", thr, "kgmps"),
            ("validity_threshold_speed", thr / sp.mass, "mps"),
            ("position_resolution", position_resolution(sp, src.D, src.dd_v, col.v_y), "m"),
            ("momentum_resolution", momentum_resolution(src.D, col.p_instr), "kgmps"),
        ]
        warnings = design_check(src, col)
    if col is not None or (config.noise.dx_meas is not None and config.noise.dp_meas is not None):
        budget = error_budget(epr.sigma_xdiff, epr.sigma_psum, resolve_noise(config))
        rows += [
            ("dxT", budget.dxT, "m"),
            ("dpT", budget.dpT, "kgmps"),
            ("product_over_hbar", budget.product_over_hbar, ""),
            ("nonclassical", float(nonclassicality(budget).nonclassical), ""),
            ("f_max", f_max(budget.product_over_hbar), ""),
        ]
    return rows, warnings


def cmd_params(args) -> int:
    norm, config = _build_config(args, require_file=False)
    rows, warnings = derived_parameters(config)
    if args.format == "json":
        doc = {"config": norm,
               "derived": {n: {"value": v, "unit": u} for n, v, u in rows},
               "warnings": warnings}
        text = json.dumps(doc, indent=2, ensure_ascii=False)
    else:
        lines = [f"species {config.source.species.name}"]
        for name, value, unit in rows:
            line = f"{name:<30} {value:.6g} {unit}".rstrip()
            if unit == "kgmps":
                line += f"   (m x {value / config.source.species.mass * 1e3:.4g} mm/s)"
            elif unit in _DISPLAY and not (unit == "mps" and value >= 1):
                du, k = _DISPLAY[unit]
                line += f"   ({value * k:.4g} {du})"
            lines.append(line)
        for w in warnings:
            lines.append(f"WARNING: {w}")
        text = "\n".join(lines)
    print(text)
    if args.out:
        out = _out_dir(args)
        (out / "params.json").write_text(json.dumps(
            {"config": norm, "derived": {n: {"value": v, "unit": u} for n, v, u in rows},
             "warnings": warnings}, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return EXIT_WARN if warnings else EXIT_OK


# -- runs -------------------------------------------------------------------

def _emit_trajectory_run(args, norm: dict, report: RunReport) -> int:
    out = _out_dir(args)
    ref_x, ref_p = input_densities(report)
    _write_hist(out, "hist_x", report.hist_x, ref_x, "m", args.format)
    _write_hist(out, "hist_p", report.hist_p, ref_p, "kgmps", args.format)
    _write_summary(out, _base_summary(norm, report))
    _print_summary(report)
    return EXIT_WARN if report.warnings else EXIT_OK


def _emit_cat_run(args, norm: dict, report: RunReport) -> int:
    out = _out_dir(args)
    c = report.cat
    write_table(out / "density_x", ["x_m", "input_density_per_m", "output_density_per_m"],
                zip(c.input_x.axis, c.input_x.values, c.output_x.values), args.format)
    write_table(out / "density_p",
                ["p_kgmps", "input_density_per_kgmps", "output_density_per_kgmps"],
                zip(c.input_p.axis, c.input_p.values, c.output_p.values), args.format)
    _write_summary(out, _base_summary(norm, report))
    _print_summary(report)
    return EXIT_WARN if report.warnings else EXIT_OK


def _print_summary(report: RunReport):
    b = report.budget
    print(f"mode {report.mode}: dxT dpT / hbar = {b.product_over_hbar:.4g}, "
          f"F_max = {report.f_max:.4f}, fidelity estimate = {report.fidelity_estimate:.4f}")
    for w in report.warnings:
        print(f"WARNING: {w}")


def cmd_teleport(args) -> int:
    norm, config = _build_config(args)
    report = run_ensemble(config)
    if report.cat is not None:
        return _emit_cat_run(args, norm, report)
    return _emit_trajectory_run(args, norm, report)


def cmd_classical(args) -> int:
    norm, config = _build_config(args)
    norm["mode"] = "classical"
    return _emit_trajectory_run(args, norm, run_classical(replace(config, mode="classical")))


def cmd_cat(args) -> int:
    norm, config = _build_config(args)
    if not isinstance(config.input, CatState):
        raise CliError("the cat subcommand needs an input of type 'cat'")
    return _emit_cat_run(args, norm, run_cat_output(config))


def cmd_epr_demo(args) -> int:
    norm, config = _build_config(args)
    epr = epr_pair_state(config.source)
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    p0, p1 = sample_epr_pair(epr, rng, config.n_events)
    bins = config.histogram.bins
    sx0 = 0.5 * math.hypot(epr.sigma_xsum, epr.sigma_xdiff)
    sp0 = 0.5 * math.hypot(epr.sigma_psum, epr.sigma_pdiff)
    series = {
        "hist_xdiff": (p0.x - p1.x, epr.sigma_xdiff, "m"),
        "hist_x0": (p0.x, sx0, "m"),
        "hist_psum": (p0.p + p1.p, epr.sigma_psum, "kgmps"),
        "hist_p0": (p0.p, sp0, "kgmps"),
    }
    out = _out_dir(args)
    stats = {}
    for name, (values, sigma, unit) in series.items():
        h = histogram(values, BinSpec(-5 * sigma, 5 * sigma, bins))
        ref = np.exp(-0.5 * (h.centers / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
        _write_hist(out, name, h, ref, unit, args.format)
        stats[name] = {"std": float(np.std(values, ddof=1)), "expected_std": sigma,
                       "unit": unit}
    summary = _base_summary(norm)
    summary.update({"n_events": config.n_events, "seed": config.seed, "workers": 1,
                    "epr": stats, "epr_product_over_hbar": epr.epr_product_over_hbar})
    _write_summary(out, summary)
    for name, st in stats.items():
        print(f"{name:<11} std {st['std']:.4g} {st['unit']} (expected {st['expected_std']:.4g})")
    return EXIT_OK


def _parse_values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"--values must be comma-separated numbers, got {text!r}") from None


def cmd_sweep(args) -> int:
    norm, config = _build_config(args)
    values = _parse_values(args.values)
    if not values:
        raise CliError("--values is empty")
    rows = sweep(config, args.param, values, monte_carlo=not args.no_mc)
    unit = SWEEP_PARAMETERS[args.param][2]
    header = [f"{args.param}_{unit}", "valid", "product_over_hbar", "f_max"]
    if not args.no_mc:
        header.append("fidelity_estimate")
    table = [list(r)[: len(header)] for r in rows]
    out = _out_dir(args)
    write_table(out / "sweep", header, table, args.format)
    summary = _base_summary(norm)
    summary.update({"sweep_parameter": args.param, "values": values,
                    "seed": config.seed, "workers": config.workers,
                    "invalid_values": [r.value for r in rows if not r.valid]})
    _write_summary(out, summary)
    for r in rows:
        flag = "" if r.valid else "  (below validity threshold)"
        print(f"{args.param} = {r.value:.4g}: product {r.product_over_hbar:.4g}, "
              f"F_max {r.f_max:.4f}{flag}")
    return EXIT_WARN if any(not r.valid for r in rows) else EXIT_OK


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", default="out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int)
    common.add_argument("--events", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable, dotted for nested)")

    p = argparse.ArgumentParser(
        prog="epr-teleport",
        description="Matter-wave teleportation with dissociation EPR pairs.",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    pp = sub.add_parser("params", parents=[common], help="print derived parameters")
    pp.set_defaults(func=cmd_params, out=None)
    sub.add_parser("teleport", parents=[common], help="quantum ensemble run").set_defaults(
        func=cmd_teleport)
    sub.add_parser("classical", parents=[common],
                   help="measure-and-prepare baseline").set_defaults(func=cmd_classical)
    sub.add_parser("cat", parents=[common], help="two-peak density prediction").set_defaults(
        func=cmd_cat)
    sub.add_parser("epr-demo", parents=[common],
                   help="sample EPR pair correlations").set_defaults(func=cmd_epr_demo)
    sw = sub.add_parser("sweep", parents=[common], help="scan one parameter")
    sw.add_argument("--param", required=True, choices=sorted(SWEEP_PARAMETERS))
    sw.add_argument("--values", required=True, help="comma-separated SI values")
    sw.add_argument("--no-mc", action="store_true", help="formula columns only")
    sw.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, ConfigurationError, CollisionValidityError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``ssh-transfer <command> [options]``.

Commands
--------
transfer   propagate one run and write the occupation trajectory
drive      export the engineered NNN couplings on a time grid
ensemble   disorder ensemble with histogram and per-realization records
sweep      one ensemble per value of a swept parameter
compare    NNN protocol against its adiabatic baseline on shared seeds

Settings are resolved as built-in defaults < ``--preset`` < ``--config``
file < explicit flags. Config files are flat YAML mappings using the keys
listed by ``ssh-transfer --help``. Exit codes: 0 success, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__
from . import disorder as dis
from .drive import engineer_drive, simplify_drive
from .dynamics import default_steps, propagate
from .ensemble import SWEEP_AXES, EnsembleConfig, EnsembleError, baseline_compare, run_ensemble, sweep
from .lattice import ChainKind, ChainSpec
from .modes import DegenerateModeError
from .schedules import SCHEDULE_KINDS, Schedule

log = logging.getLogger("ssh_transfer")

OUTPUT_ENV = "SSH_TRANSFER_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

DEFAULTS: dict[str, Any] = {
    "chain": "single",
    "sites": 19,
    "schedule": "polynomial",
    "T": None,
    "delta": 0.01,
    "Omega": 0.01,
    "Omega_m": 0.9,
    "w_frac": 3 / 16,
    "delta_frac": 1 / 3,
    "drive": True,
    "simplification": None,
    "disorder": "none",
    "alpha": 0.0,
    "gamma": 0.0,
    "realizations": 1000,
    "seed": 20240101,
    "steps": None,
    "points": 401,
    "record_every": None,
    "axis": None,
    "values": None,
    "baseline_realizations": None,
    "baseline_T": None,
    "bins": 100,
    "workers": 1,
    "output_dir": None,
    "formats": ["csv", "json"],
    "verbosity": 1,
}

KEY_HELP = {
    "chain": "single | interface",
    "sites": "total number of lattice sites (2N-1 single, 4N-1 interface)",
    "schedule": "polynomial | sinusoidal | interface_plateau | adiabatic_pump | stirap",
    "T": "transfer time in 1/t0 (default 2, or 900 for stirap; pump uses pi/Omega)",
    "delta": "interface plateau offset",
    "Omega": "adiabatic pump frequency",
    "Omega_m": "STIRAP pulse amplitude",
    "w_frac": "STIRAP pulse width as a fraction of T",
    "delta_frac": "STIRAP pulse delay as a fraction of T",
    "drive": "true to apply the engineered NNN drive",
    "simplification": "simplified-drive index i (single chain)",
    "disorder": "none | diagonal | offdiagonal | correlated | drive_bias",
    "alpha": "disorder strength, dE = t0 * alpha",
    "gamma": "correlation exponent for correlated disorder",
    "realizations": "ensemble size",
    "seed": "master seed",
    "steps": "time steps (default: T/8000 grid for T <= 2, T/40000 otherwise; ensembles converge automatically)",
    "points": "drive export grid points",
    "record_every": "trajectory sampling stride in steps",
    "axis": "sweep axis: " + " | ".join(SWEEP_AXES),
    "values": "sweep values (list)",
    "baseline_realizations": "ensemble size for the adiabatic baseline",
    "baseline_T": "baseline transfer time (STIRAP default 900)",
    "bins": "histogram bins on [0, 1]",
    "workers": "worker processes for ensembles",
    "output_dir": f"output directory (env {OUTPUT_ENV} overrides the default '.')",
    "formats": "output formats among csv, json",
    "verbosity": "0 quiet, 1 normal, 2 debug",
}

_SWEEP_DEFAULTS = {
    "disorder_strength": [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
    "gamma": [0, 1, 2, 3, 4, 5],
    "simplification_index": [1, 2, 3, 4, 5],
    "transfer_time": [1, 2, 4, 8],
}

PRESETS: dict[str, dict[str, Any]] = {
    "fig1": {"chain": "single", "sites": 19, "schedule": "polynomial", "T": 2.0, "steps": 8000},
    "fig2": {"chain": "single", "sites": 19, "schedule": "polynomial", "T": 2.0, "points": 401},
    "fig4b": {"chain": "interface", "sites": 19, "schedule": "interface_plateau", "T": 40.0, "points": 401},
    "fig4c": {"chain": "interface", "sites": 19, "schedule": "interface_plateau", "T": 40.0, "steps": 8000},
    "fig5": {"schedule": "polynomial", "T": 2.0, "disorder": "drive_bias", "alpha": 0.2, "realizations": 10000},
    "fig6": {
        "schedule": "polynomial",
        "T": 2.0,
        "disorder": "diagonal",
        "alpha": 0.2,
        "axis": "disorder_strength",
        "values": _SWEEP_DEFAULTS["disorder_strength"],
        "realizations": 10000,
    },
    "fig7": {"schedule": "polynomial", "T": 2.0, "disorder": "diagonal", "alpha": 0.1, "realizations": 10000},
    "fig8": {"schedule": "polynomial", "T": 2.0, "disorder": "offdiagonal", "alpha": 0.1, "realizations": 10000},
    "fig9": {
        "schedule": "polynomial",
        "T": 2.0,
        "disorder": "correlated",
        "alpha": 0.2,
        "axis": "gamma",
        "values": _SWEEP_DEFAULTS["gamma"],
        "realizations": 2000,
    },
    "tableI": {
        "schedule": "polynomial",
        "T": 2.0,
        "disorder": "none",
        "axis": "simplification_index",
        "values": [1, 2, 3, 4, 5],
        "realizations": 1,
        "steps": 8000,
    },
}

PRESET_INFO = {
    "fig1": "transfer: single chain N_A=10, polynomial schedule, T=2",
    "fig2": "drive: NNN couplings of the fig1 run",
    "fig4b": "drive: interface chain (19 sites), plateau schedule, T=40",
    "fig4c": "transfer: interface chain (19 sites), plateau schedule, T=40",
    "fig5": "ensemble: drive-bias factor, alpha=0.2, 10000 realizations",
    "fig6": "sweep/compare: diagonal disorder strength, single chain",
    "fig7": "ensemble/compare: diagonal disorder alpha=0.1",
    "fig8": "ensemble: off-diagonal disorder alpha=0.1",
    "fig9": "sweep: correlated disorder exponent gamma, alpha=0.2, 2000 realizations",
    "tableI": "sweep: simplified drive index i=1..5, no disorder",
}

_PROTOCOL = {
    "polynomial": "nnn_single",
    "interface_plateau": "nnn_interface",
    "adiabatic_pump": "adiabatic_pump",
    "stirap": "stirap",
}


class ConfigError(ValueError):
    pass


# --- configuration ----------------------------------------------------------------------


def load_config_file(path) -> dict[str, Any]:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config file must be a flat key/value mapping")
    unknown = set(data) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for k, v in data.items():
        if isinstance(v, dict):
            raise ConfigError(f"config key {k!r} must not be nested")
    return data


def resolve_config(preset: str | None, config_path: str | None, overrides: dict[str, Any]) -> dict[str, Any]:
    cfg = dict(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; see --list-presets")
        cfg.update(PRESETS[preset])
    if config_path is not None:
        cfg.update(load_config_file(config_path))
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    return validate(cfg)


def _as_bool(name, v):
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "yes", "1", "false", "no", "0"):
        return v.lower() in ("true", "yes", "1")
    raise ConfigError(f"{name} must be a boolean, got {v!r}")


def _num(name, v, kind=float, minimum=None, positive=False):
    try:
        x = kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {v!r}") from None
    if kind is int and float(v) != x:
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    if isinstance(x, float) and not math.isfinite(x):
        raise ConfigError(f"{name} must be finite")
    if positive and not x > 0:
        raise ConfigError(f"{name} must be positive, got {v!r}")
    if minimum is not None and x < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {v!r}")
    return x


def validate(cfg: dict[str, Any]) -> dict[str, Any]:
    """Type-check and cross-check a resolved config; raises :class:`ConfigError`."""
    out = dict(cfg)
    if out["chain"] not in ("single", "interface"):
        raise ConfigError(f"chain must be single or interface, got {out['chain']!r}")
    if out["schedule"] not in SCHEDULE_KINDS:
        raise ConfigError(f"unknown schedule {out['schedule']!r}; choose from {sorted(SCHEDULE_KINDS)}")
    want = SCHEDULE_KINDS[out["schedule"]].chain.value
    if want != out["chain"]:
        raise ConfigError(f"schedule {out['schedule']!r} runs on the {want} chain, not {out['chain']!r}")
    out["sites"] = _num("sites", out["sites"], int)
    s = out["sites"]
    if out["chain"] == "single" and (s < 3 or s % 2 == 0):
        raise ConfigError(f"a single chain needs an odd number of sites >= 3, got {s}")
    if out["chain"] == "interface" and (s < 7 or s % 4 != 3):
        raise ConfigError(f"an interface chain needs 4N-1 sites with N >= 2, got {s}")
    if out["T"] is None:
        out["T"] = 900.0 if out["schedule"] == "stirap" else 2.0
    for key in ("T", "delta", "Omega", "Omega_m", "w_frac", "delta_frac"):
        out[key] = _num(key, out[key], positive=True)
    for key in ("alpha", "gamma"):
        out[key] = _num(key, out[key], minimum=0.0)
    out["drive"] = _as_bool("drive", out["drive"])
    try:
        out["disorder"] = dis.DisorderKind(out["disorder"]).value
    except ValueError:
        raise ConfigError(f"unknown disorder {out['disorder']!r}") from None
    out["realizations"] = _num("realizations", out["realizations"], int, minimum=1)
    out["seed"] = _num("seed", out["seed"], int, minimum=0)
    out["points"] = _num("points", out["points"], int, minimum=2)
    out["bins"] = _num("bins", out["bins"], int, minimum=1)
    out["workers"] = _num("workers", out["workers"], int, minimum=1)
    out["verbosity"] = _num("verbosity", out["verbosity"], int, minimum=0)
    for key in ("steps", "record_every", "baseline_realizations"):
        if out[key] is not None:
            out[key] = _num(key, out[key], int, minimum=1)
    if out["baseline_T"] is not None:
        out["baseline_T"] = _num("baseline_T", out["baseline_T"], positive=True)
    if out["simplification"] is not None:
        out["simplification"] = _num("simplification", out["simplification"], int, minimum=1)
        n_cells = (out["sites"] + 1) // 2
        if out["chain"] != "single" or out["simplification"] > math.ceil(n_cells / 2):
            raise ConfigError("simplification needs a single chain and 1 <= i <= ceil(N/2)")
    if out["axis"] is not None and out["axis"] not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {out['axis']!r}; choose from {sorted(SWEEP_AXES)}")
    if out["values"] is not None:
        vals = out["values"]
        if isinstance(vals, str):
            vals = [v for v in vals.replace(",", " ").split() if v]
        if not isinstance(vals, (list, tuple)) or not vals:
            raise ConfigError("values must be a non-empty list")
        out["values"] = [_num("values", v) for v in vals]
    fmts = out["formats"]
    if isinstance(fmts, str):
        fmts = [f.strip() for f in fmts.split(",") if f.strip()]
    if not fmts or set(fmts) - {"csv", "json"}:
        raise ConfigError(f"formats must be a subset of csv,json, got {out['formats']!r}")
    out["formats"] = list(fmts)
    return out


def output_dir(cfg: dict[str, Any]) -> Path:
    path = Path(cfg["output_dir"] or os.environ.get(OUTPUT_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def provenance(command: str, cfg: dict[str, Any]) -> str:
    shown = {k: v for k, v in sorted(cfg.items()) if k not in ("output_dir", "verbosity", "workers")}
    return f"ssh-transfer {__version__} {command} master_seed={cfg['seed']} config={json.dumps(shown, sort_keys=True)}"


def _round12(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def write_json(path: Path, command: str, cfg: dict[str, Any], payload: dict[str, Any]) -> None:
    data = {"provenance": {"header": provenance(command, cfg), "master_seed": cfg["seed"]}}
    data.update(_round12(payload))
    with open(path, "w", newline="\n") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


# --- builders -------------------------------------------------------------------------------


def build_spec(cfg) -> ChainSpec:
    n_a = (cfg["sites"] + 1) // 2
    if cfg["chain"] == ChainKind.SINGLE.value:
        return ChainSpec.single(n_a)
    return ChainSpec.interface(n_a // 2)


def build_schedule(cfg) -> Schedule:
    kind = cfg["schedule"]
    cls = SCHEDULE_KINDS[kind]
    if kind == "adiabatic_pump":
        return cls(cfg["Omega"])
    if kind == "interface_plateau":
        return cls(cfg["T"], delta=cfg["delta"])
    if kind == "stirap":
        return cls(cfg["T"], Omega_m=cfg["Omega_m"], w_frac=cfg["w_frac"], delta_frac=cfg["delta_frac"])
    return cls(cfg["T"])


def ensemble_config(cfg) -> EnsembleConfig:
    if cfg["schedule"] not in _PROTOCOL:
        raise ConfigError(f"schedule {cfg['schedule']!r} has no ensemble protocol")
    return EnsembleConfig(
        protocol=_PROTOCOL[cfg["schedule"]],
        n_a=(cfg["sites"] + 1) // 2,
        T=cfg["T"],
        disorder=cfg["disorder"],
        alpha=cfg["alpha"],
        gamma=cfg["gamma"],
        n_realizations=cfg["realizations"],
        master_seed=cfg["seed"],
        n_steps=cfg["steps"],
        delta=cfg["delta"],
        Omega=cfg["Omega"],
        Omega_m=cfg["Omega_m"],
        w_frac=cfg["w_frac"],
        delta_frac=cfg["delta_frac"],
        simplification=cfg["simplification"],
        drive=cfg["drive"],
        bins=cfg["bins"],
    )


def _stem(cfg, preset, command):
    if preset:
        return f"{command}_{preset}"
    return f"{command}_{cfg['chain']}_{cfg['schedule']}"


# --- commands -------------------------------------------------------------------------------


def cmd_transfer(cfg, preset=None) -> int:
    spec = build_spec(cfg)
    schedule = build_schedule(cfg)
    T = schedule.T
    n_steps = cfg["steps"] or default_steps(T)
    drive = None
    if cfg["drive"]:
        drive = "exact"
        if cfg["simplification"] is not None:
            i = cfg["simplification"]
            drive = lambda grid: simplify_drive(engineer_drive(spec, schedule, grid), i)  # noqa: E731
    realization = None
    if cfg["disorder"] != "none":
        seed = dis.realization_seed(cfg["seed"], 0)
        realization = dis.realize(cfg["disorder"], spec, {"alpha": cfg["alpha"], "gamma": cfg["gamma"]}, seed)
    every = cfg["record_every"] or max(1, n_steps // 400)
    result = propagate(spec, schedule, drive, realization, n_steps=n_steps, record_every=every)
    path = output_dir(cfg) / f"{_stem(cfg, preset, 'transfer')}.csv"
    result.write_trajectory(path, provenance("transfer", cfg))
    log.info("dt=%.6g steps=%d max_norm_drift=%.3g trajectory=%s", result.dt, n_steps, result.max_norm_drift, path)
    print(f"transfer_probability={result.transfer_probability:.12g}")
    return EXIT_OK


def cmd_drive(cfg, preset=None) -> int:
    spec = build_spec(cfg)
    schedule = build_schedule(cfg)
    grid = np.linspace(0.0, schedule.T, cfg["points"])
    profile = engineer_drive(spec, schedule, grid)
    if cfg["simplification"] is not None:
        profile = simplify_drive(profile, cfg["simplification"])
    path = output_dir(cfg) / f"{_stem(cfg, preset, 'drive')}.csv"
    profile.to_csv(path, provenance("drive", cfg))
    print(f"bonds={profile.n_bonds} max_abs_rho={np.max(np.abs(profile.rho)):.12g} file={path}")
    return EXIT_OK


def _progress(total):
    done = [0]

    def report(n):
        done[0] += n
        log.debug("realizations %d/%d", done[0], total)

    return report


def cmd_ensemble(cfg, preset=None) -> int:
    ec = ensemble_config(cfg)
    stats = run_ensemble(ec, workers=cfg["workers"], progress=_progress(ec.n_realizations))
    out = output_dir(cfg)
    stem = f"{ec.protocol.value}_{ec.disorder.value}_ensemble"
    frac95 = stats.fraction_above(0.95)
    frac98 = stats.fraction_above(0.98)
    if "json" in cfg["formats"]:
        payload = stats.to_dict()
        payload.update({"fraction_above_0.95": frac95, "fraction_above_0.98": frac98})
        write_json(out / f"{stem}.json", "ensemble", cfg, payload)
    if "csv" in cfg["formats"]:
        with open(out / f"{stem}_histogram.csv", "w", newline="\n") as fh:
            fh.write(f"# {provenance('ensemble', cfg)}\n")
            fh.write("bin_lo,bin_hi,count\n")
            for lo, hi, c in zip(stats.bin_edges[:-1], stats.bin_edges[1:], stats.counts):
                fh.write(f"{lo:.12g},{hi:.12g},{c}\n")
    print(
        f"mean={stats.mean:.12g} std={stats.std:.12g} stderr={stats.stderr:.12g} n={stats.n_realizations} "
        f"steps={stats.n_steps} fraction_above_0.95={frac95:.12g} fraction_above_0.98={frac98:.12g}"
    )
    return EXIT_OK


def cmd_sweep(cfg, preset=None) -> int:
    if cfg["axis"] is None:
        raise ConfigError("sweep needs an axis")
    values = cfg["values"] if cfg["values"] is not None else _SWEEP_DEFAULTS[cfg["axis"]]
    ec = ensemble_config(cfg)
    table = sweep(ec, cfg["axis"], values, workers=cfg["workers"])
    out = output_dir(cfg)
    stem = f"{ec.protocol.value}_{ec.disorder.value}_{cfg['axis']}"
    if "csv" in cfg["formats"]:
        table.to_csv(out / f"{stem}.csv", provenance("sweep", cfg))
    if "json" in cfg["formats"]:
        payload = {"axis": cfg["axis"], "values": list(values), "stats": [s.to_dict() for s in table.stats]}
        write_json(out / f"{stem}.json", "sweep", cfg, payload)
    means = np.array([s.mean for s in table.stats])
    for v, s in zip(values, table.stats):
        print(f"{cfg['axis']}={v:.12g} mean={s.mean:.12g} stderr={s.stderr:.12g}")
    increasing = bool(np.all(np.diff(means) > 0))
    decreasing = bool(np.all(np.diff(means) < 0))
    print(
        f"monotone_increasing={str(increasing).lower()} monotone_decreasing={str(decreasing).lower()} "
        f"endpoint_improvement={str(bool(means[-1] > means[0])).lower()}"
    )
    return EXIT_OK


def cmd_compare(cfg, preset=None) -> int:
    ec = ensemble_config(cfg)
    if ec.protocol.value not in ("nnn_single", "nnn_interface"):
        raise ConfigError("compare needs an NNN schedule (polynomial or interface_plateau)")
    cmp = baseline_compare(
        ec,
        baseline_realizations=cfg["baseline_realizations"],
        baseline_T=cfg["baseline_T"],
        workers=cfg["workers"],
    )
    out = output_dir(cfg)
    stem = f"{ec.protocol.value}_{ec.disorder.value}_compare"
    rows = [("nnn", cmp.nnn), (cmp.baseline.config["protocol"], cmp.baseline)]
    if "csv" in cfg["formats"]:
        with open(out / f"{stem}.csv", "w", newline="\n") as fh:
            fh.write(f"# {provenance('compare', cfg)}\n")
            fh.write("protocol,mean,std,stderr,n\n")
            for name, s in rows:
                fh.write(f"{name},{s.mean:.12g},{s.std:.12g},{s.stderr:.12g},{s.n_realizations}\n")
    if "json" in cfg["formats"]:
        write_json(out / f"{stem}.json", "compare", cfg, cmp.to_dict())
    for name, s in rows:
        print(f"{name} mean={s.mean:.12g} stderr={s.stderr:.12g} n={s.n_realizations}")
    print(f"paired_mean_difference={cmp.paired_mean_difference:.12g} n_paired={cmp.n_paired}")
    return EXIT_OK


COMMAND_HELP = {
    "transfer": "propagate one run and write occupation trajectories",
    "drive": "export the engineered NNN couplings on a time grid",
    "ensemble": "disorder ensemble statistics and histogram",
    "sweep": "ensemble statistics along one parameter axis",
    "compare": "NNN protocol against its adiabatic baseline on shared seeds",
}

COMMANDS = {
    "transfer": cmd_transfer,
    "drive": cmd_drive,
    "ensemble": cmd_ensemble,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


# --- argument parsing -----------------------------------------------------------------------


def _keys_epilog() -> str:
    lines = ["config keys (flat YAML, flags override):"]
    lines += [f"  {k:<22} {KEY_HELP[k]}" for k in DEFAULTS]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", help="named reference configuration (see --list-presets)")
    common.add_argument("--list-presets", action="store_true", help="list presets and exit")
    common.add_argument("--config", help="flat YAML config file")
    common.add_argument("--chain", choices=["single", "interface"])
    common.add_argument("--sites", type=int, help="total number of sites")
    common.add_argument("--schedule", choices=sorted(SCHEDULE_KINDS))
    common.add_argument("--T", dest="T", type=float, help="transfer time in 1/t0")
    common.add_argument("--delta", type=float)
    common.add_argument("--Omega", type=float)
    common.add_argument("--no-drive", dest="drive", action="store_const", const=False, help="switch the NNN drive off")
    common.add_argument("--simplification", type=int, help="simplified drive index i")
    common.add_argument("--disorder", choices=[k.value for k in dis.DisorderKind])
    common.add_argument("--alpha", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--realizations", type=int)
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--steps", type=int)
    common.add_argument("--points", type=int)
    common.add_argument("--axis", choices=sorted(SWEEP_AXES))
    common.add_argument("--values", help="comma-separated sweep values")
    common.add_argument("--baseline-realizations", dest="baseline_realizations", type=int)
    common.add_argument("--baseline-T", dest="baseline_T", type=float)
    common.add_argument("--bins", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--formats", help="comma-separated subset of csv,json")
    common.add_argument("-v", "--verbose", action="count", default=0)
    common.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(
        prog="ssh-transfer",
        description="Topological state transfer in SSH chains with engineered NNN couplings.",
        epilog=_keys_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--list-presets", action="store_true", help="list presets and exit")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        sub.add_parser(
            name,
            parents=[common],
            help=COMMAND_HELP[name],
            epilog=_keys_epilog(),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
    return parser


def _overrides(ns: argparse.Namespace) -> dict[str, Any]:
    out = {k: getattr(ns, k, None) for k in DEFAULTS if k not in ("verbosity",)}
    if getattr(ns, "quiet", False):
        out["verbosity"] = 0
    elif getattr(ns, "verbose", 0):
        out["verbosity"] = 1 + ns.verbose
    return out


def list_presets() -> None:
    for name in PRESETS:
        print(f"{name:<7} {PRESET_INFO[name]}")


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.list_presets:
        list_presets()
        return EXIT_OK
    if ns.command is None:
        parser.print_help()
        return EXIT_CONFIG
    try:
        cfg = resolve_config(ns.preset, ns.config, _overrides(ns))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(
        level={0: logging.WARNING, 1: logging.INFO}.get(cfg["verbosity"], logging.DEBUG),
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[ns.command](cfg, ns.preset)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, DegenerateModeError, EnsembleError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

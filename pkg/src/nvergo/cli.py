"""Command-line front end writing CSV tables and a JSON run manifest.

Exit codes: 0 success, 2 when a run violates its acceptance threshold,
1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import json
import math
import os
import sys
import typing
from pathlib import Path

import numpy as np

from . import __version__, ergo, experiments
from .experiments import ExperimentConfig
from .qmath import nats_to_bits
from .protocol import EnergyMeasurementConfig, estimate_mean_energy

COMMANDS = ("ergo", "protocol", "grape", "fig3", "fig4", "figs2", "all")
THREADS_ENV = "NVERGO_THREADS"
DEFAULT_FIG4_GRID = "0:0.9428:10"
GRAPE_MIN_FIDELITY = 0.99
TARGET_NAMES = {
    "u_p": "U_P",
    "v_pi": "V_pi",
    "e_sigma": "E_sigma",
    "e_rho": "E_rho",
    "u_p1": "U_P1",
    "u_p2": "U_P2",
    "e_rho_prime": "E_rho_prime",
}


class ConfigError(ValueError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}" if path else reason)
        self.path = path
        self.reason = reason


# --- configuration -------------------------------------------------------------


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(path, "expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else key
        kind = hints[key]
        if dataclasses.is_dataclass(kind):
            kwargs[key] = _build(kind, value, sub)
        elif kind is bool:
            if not isinstance(value, bool):
                raise ConfigError(sub, "expected true or false")
            kwargs[key] = value
        elif kind in (int, float):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(sub, "expected a number")
            if kind is int and not float(value).is_integer():
                raise ConfigError(sub, "expected an integer")
            kwargs[key] = kind(value)
        elif kind is str:
            if not isinstance(value, str):
                raise ConfigError(sub, "expected a string")
            kwargs[key] = value
        else:
            raise ConfigError(sub, "not configurable")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "")


def parse_config(path) -> ExperimentConfig:
    """Load a JSON config; missing keys take their defaults, unknown keys are rejected."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc
    return config_from_dict(data)


# --- output ----------------------------------------------------------------------


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def write_csv(path: Path, header: list[str], rows: list[dict]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(row.get(col)) for col in header])
    return path


def write_manifest(out: Path, command: str, config_path, config: ExperimentConfig, files) -> Path:
    manifest = {
        "command": command,
        "config_path": None if config_path is None else str(config_path),
        "config_hash": config.digest(),
        "seed": config.seed,
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
        "outputs": [p.name for p in files],
    }
    path = out / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# --- commands --------------------------------------------------------------------

STATE_HEADER = ["label", "energy_eps", "energy_err_eps", "exact_energy_eps", "coherence_nats", "coherence_bits"]


def cmd_ergo(config: ExperimentConfig, out: Path, args) -> tuple[int, list[Path]]:
    h = config.hamiltonian
    gates = experiments.experiment_gates()
    rows, worst = [], 0.0
    ideal = config.replace(mode="ideal")
    for label, steps in experiments.FIG3_SEQUENCES.items():
        rho = experiments._ideal_state(steps, gates, ideal)
        rep = ergo.ergotropy_report(rho, h).normalized(h.span)
        worst = max(worst, abs(rep.additivity_residual))
        rows.append(
            {
                "label": label,
                "energy_eps": rep.mean_energy,
                "ergotropy_eps": rep.total,
                "ergotropy_incoherent_eps": rep.incoherent,
                "ergotropy_coherent_eps": rep.coherent,
                "additivity_residual_eps": rep.additivity_residual,
                "coherence_nats": rep.coherence_nats,
                "coherence_bits": nats_to_bits(rep.coherence_nats),
            }
        )
    header = list(rows[0])
    path = write_csv(out / "ergo.csv", header, rows)
    return (0 if worst < 1e-10 else 2), [path]


def cmd_protocol(config: ExperimentConfig, out: Path, args) -> tuple[int, list[Path]]:
    h = config.hamiltonian
    taus = experiments.parse_grid(args.grid) if args.grid else [config.tau_us]
    gates = experiments.experiment_gates()
    ideal = config.replace(mode="ideal")
    rows, worst = [], 0.0
    for tau in taus:
        meas = EnergyMeasurementConfig(tau=tau)
        for label, steps in experiments.FIG3_SEQUENCES.items():
            rho = experiments._ideal_state(steps, gates, ideal)
            raw, norm = estimate_mean_energy(rho, h, meas)
            exact = ergo.mean_energy(rho, h)
            worst = max(worst, abs(norm - exact / h.span))
            rows.append(
                {
                    "label": label,
                    "tau_us": tau,
                    "energy_raw_eps": raw / h.span,
                    "energy_norm_eps": norm,
                    "exact_energy_eps": exact / h.span,
                    "raw_error_bound_eps": exact / h.span * (h.span * tau) ** 2 / 6.0,
                }
            )
    path = write_csv(out / "protocol.csv", list(rows[0]), rows)
    return (0 if worst < 1e-12 else 2), [path]


def cmd_grape(config: ExperimentConfig, out: Path, args) -> tuple[int, list[Path]]:
    key = (args.target or "v_pi").lower()
    if key not in TARGET_NAMES:
        raise ConfigError("--target", f"unknown gate {args.target!r}; choose from {sorted(TARGET_NAMES)}")
    name = TARGET_NAMES[key]
    res = experiments.grape_pulse(experiments.experiment_gates()[name], config)
    seg = res.sequence.segments
    rows = [
        {
            "label": f"seg{i + 1}",
            "duration_us": s[0],
            "omega1_rad_per_us": s[1],
            "phi1_rad": s[2],
            "omega2_rad_per_us": s[3],
            "phi2_rad": s[4],
        }
        for i, s in enumerate(seg)
    ]
    path = write_csv(out / f"grape_{key}.csv", list(rows[0]), rows)
    print(f"{name} fidelity {fmt(res.fidelity)} after {res.iterations} iterations")
    return (0 if res.fidelity >= GRAPE_MIN_FIDELITY else 2), [path]


def _fig3_rows(result) -> list[dict]:
    rows = [
        {
            "label": s.label,
            "energy_eps": s.energy,
            "energy_err_eps": s.energy_err,
            "exact_energy_eps": s.exact_energy,
            "coherence_nats": s.coherence_nats,
            "coherence_bits": s.coherence_bits,
        }
        for s in result.states
    ]
    for name, (value, err) in result.components.items():
        rows.append({"label": name, "energy_eps": value, "energy_err_eps": err})
    rows.append(
        {
            "label": "additivity_residual",
            "energy_eps": result.residuals["additivity"],
            "energy_err_eps": result.metadata.get("additivity_err", 0.0),
        }
    )
    return rows


def _fig3_ok(result, config) -> bool:
    resid = abs(result.residuals["additivity"])
    if config.mode == "ideal":
        return resid < 1e-10
    return resid <= 3.0 * result.metadata["additivity_err"]


def cmd_fig3(config: ExperimentConfig, out: Path, args) -> tuple[int, list[Path]]:
    result = experiments.run_fig3(config)
    path = write_csv(out / "fig3.csv", STATE_HEADER, _fig3_rows(result))
    return (0 if _fig3_ok(result, config) else 2), [path]


FIG4_HEADER = [
    "label",
    "c_dimless",
    "coherence_nats",
    "coherence_bits",
    "ergotropy_total_eps",
    "coherent_ergotropy_eps",
    "coherent_ergotropy_err_eps",
    "analytic_eps",
    "theory_beta_form_eps",
    "beta_per_rad_per_us",
]


def _fig4_row(label, p) -> dict:
    return {
        "label": label,
        "c_dimless": p["c"],
        "coherence_nats": p["coherence_nats"],
        "coherence_bits": p["coherence_bits"],
        "ergotropy_total_eps": p.get("ergotropy_total"),
        "coherent_ergotropy_eps": p.get("coherent_ergotropy"),
        "coherent_ergotropy_err_eps": p.get("coherent_ergotropy_err"),
        "analytic_eps": p["analytic"],
        "theory_beta_form_eps": p.get("theory_beta_form", p.get("coherent_ergotropy")),
        "beta_per_rad_per_us": p["beta"],
    }


def cmd_fig4(config: ExperimentConfig, out: Path, args) -> tuple[int, list[Path]]:
    grid = experiments.parse_grid(args.grid or DEFAULT_FIG4_GRID)
    result = experiments.run_fig4(config, grid, workers=thread_count())
    points = [_fig4_row(f"c{i + 1}", p) for i, p in enumerate(result.sweep)]
    curve = [
        _fig4_row(f"curve{i + 1}", p | {"coherent_ergotropy": None, "theory_beta_form": p["coherent_ergotropy"]})
        for i, p in enumerate(result.curve)
    ]
    files = [write_csv(out / "fig4.csv", FIG4_HEADER, points), write_csv(out / "fig4_curve.csv", FIG4_HEADER, curve)]
    if config.mode == "ideal":
        ok = result.residuals["curve_max_abs"] < 1e-9
    else:
        ok = all(
            abs(p["coherent_ergotropy"] - p["analytic"]) <= 3.0 * p["coherent_ergotropy_err"] for p in result.sweep
        )
    return (0 if ok else 2), files


FIGS2_HEADER = [
    "label",
    "t2_star_us",
    "residual_eps",
    "residual_err_eps",
    "ergotropy_incoherent_eps",
    "ergotropy_coherent_eps",
    "ergotropy_total_eps",
]


def cmd_figs2(config: ExperimentConfig, out: Path, args) -> tuple[int, list[Path]]:
    result = experiments.run_figS2(config)
    rows = [
        {
            "label": p["label"],
            "t2_star_us": p["t2_star_us"],
            "residual_eps": p["residual"],
            "residual_err_eps": p["residual_err"],
            "ergotropy_incoherent_eps": p["ergotropy_incoherent"],
            "ergotropy_coherent_eps": p["ergotropy_coherent"],
            "ergotropy_total_eps": p["ergotropy_total"],
        }
        for p in result.sweep
    ]
    path = write_csv(out / "figs2.csv", FIGS2_HEADER, rows)
    long_, short = (abs(result.residuals[f"additivity_t2_{t:g}us"]) for t in experiments.FIGS2_T2_STAR)
    ok = abs(result.sweep[0]["residual"]) < 1e-10 and long_ < 0.05 and short > 0.1
    return (0 if ok else 2), [path]


HANDLERS = {
    "ergo": cmd_ergo,
    "protocol": cmd_protocol,
    "grape": cmd_grape,
    "fig3": cmd_fig3,
    "fig4": cmd_fig4,
    "figs2": cmd_figs2,
}


def cmd_all(config: ExperimentConfig, out: Path, args) -> tuple[int, list[Path]]:
    code, files = 0, []
    for name, handler in HANDLERS.items():
        if name == "all":
            continue
        # --grid means c values here; protocol keeps the configured tau
        sub = argparse.Namespace(**vars(args))
        if name == "protocol":
            sub.grid = None
        c, f = handler(config, out, sub)
        code = max(code, c)
        files.extend(f)
    return code, files


HANDLERS["all"] = cmd_all


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(THREADS_ENV, f"expected an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(THREADS_ENV, "must be >= 1")
    return n


def dispatch(command: str, config: ExperimentConfig, out: Path, args, config_path=None) -> int:
    if command not in HANDLERS:
        raise ConfigError("command", f"unknown command {command!r}")
    out.mkdir(parents=True, exist_ok=True)
    code, files = HANDLERS[command](config, out, args)
    write_manifest(out, command, config_path, config, files)
    return code


def build_parser() -> argparse.ArgumentParser:
    defaults = json.dumps(ExperimentConfig().to_dict(), indent=1)
    parser = argparse.ArgumentParser(
        prog="nvergo",
        description="Simulate ergotropy and coherence measurements on an NV-center electron/nuclear pair.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"Config defaults (JSON keys for --config):\n{defaults}\n\n"
        f"{THREADS_ENV}: worker threads for sweep points (default 1).",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, default=None, help="JSON config file (default: built-in defaults)")
    parser.add_argument("--mode", choices=experiments.MODES, default=None, help="override config mode (default: ideal)")
    parser.add_argument("--seed", type=int, default=None, help="override config seed (default: 0)")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory (default: out)")
    parser.add_argument(
        "--grid",
        default=None,
        help=f"START:END:COUNT; c values for fig4 and all (default {DEFAULT_FIG4_GRID}), tau values in us for protocol",
    )
    parser.add_argument("--target", default=None, help=f"grape gate, one of {sorted(TARGET_NAMES)} (default: v_pi)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config) if args.config else ExperimentConfig()
        overrides = {}
        if args.mode is not None:
            overrides["mode"] = args.mode
        if args.seed is not None:
            overrides["seed"] = args.seed
        if overrides:
            config = config.replace(**overrides)
        return dispatch(args.command, config, args.out, args, args.config)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

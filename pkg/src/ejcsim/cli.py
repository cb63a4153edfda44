"""Command-line scenario runner.

``ejcsim run <config.toml>`` executes one named scenario and writes a CSV of
sweep columns plus a JSON manifest of every resolved parameter and
integrator diagnostic. ``report`` emits the phase-matching report only;
``selftest`` runs the built-in consistency checks.

Config keys carry explicit units in their names; a minimal config is just
``scenario = "single_photon"`` with every other value defaulted.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import scenarios
from .constants import CONSTANTS
from .errors import ConfigError, EjcsimError
from .scenarios import NumericsOptions, ScenarioResult, resolve_setup

CSV_FORMAT = "{:.14e}"

SETUP_DEFAULTS: dict[str, float] = {
    "kinetic_energy_ev": 100.0,
    "energy_uncertainty_ev": 0.010,
    "cavity_length_m": 1.0e-5,
    "design_wavelength_m": 5.32e-7,
    "refractive_index": 1.5,
    "free_spectral_range_rad_per_s": scenarios.FIG2_FREE_SPECTRAL_RANGE,
    "dimensionless_coupling": math.pi / 2.0,
    "loss_probability": 1.0e-2,
}

#: scenarios that sweep through two sequential transitions default to the
#: coupling that completes the cascade
SCENARIO_COUPLING_DEFAULTS = {
    "photon_pair": math.pi / math.sqrt(2.0),
    "swap": math.pi / math.sqrt(2.0),
}

NUMERICS_KEYS = {
    "points_per_recoil": int,
    "photon_cutoff": int,
    "signal_mode_count": int,
    "loss_mode_count": int,
    "tolerance": float,
    "method": str,
    "sinc_prune": float,
    "population_prune": float,
    "output_samples": int,
}

SCENARIOS: dict[str, Callable[..., ScenarioResult]] = {
    "single_photon": scenarios.run_single_photon,
    "detuning_sweep": scenarios.run_detuning_sweep,
    "photon_pair": scenarios.run_photon_pair,
    "swap": scenarios.run_swap,
    "symmetric_n": scenarios.run_symmetric_n,
    "phase_match_report": scenarios.run_phase_match_report,
}


def load_config(path: Path) -> dict:
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}")


def validate_config(config: dict) -> tuple[str, Any, NumericsOptions, dict]:
    """Resolve scenario name, setup, numerics, and scenario parameters."""
    if "scenario" not in config:
        raise ConfigError("config must name a scenario")
    name = config["scenario"]
    if name not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")

    raw_setup = dict(config.get("setup", {}))
    values = dict(SETUP_DEFAULTS)
    if name in SCENARIO_COUPLING_DEFAULTS:
        values["dimensionless_coupling"] = SCENARIO_COUPLING_DEFAULTS[name]
    grating = raw_setup.pop("grating_period_m", None)
    for key, value in raw_setup.items():
        if key not in values:
            raise ConfigError(f"unknown setup key {key!r}")
        values[key] = float(value)
    try:
        setup = resolve_setup(
            kinetic_energy_ev=values["kinetic_energy_ev"],
            energy_uncertainty_ev=values["energy_uncertainty_ev"],
            cavity_length_m=values["cavity_length_m"],
            design_wavelength_m=values["design_wavelength_m"],
            refractive_index=values["refractive_index"],
            free_spectral_range=values["free_spectral_range_rad_per_s"],
            dimensionless_coupling=values["dimensionless_coupling"],
            loss_probability=values["loss_probability"],
            grating_period_m=grating,
            constants=CONSTANTS,
        )
    except ValueError as exc:
        raise ConfigError(str(exc))

    raw_numerics = dict(config.get("numerics", {}))
    kwargs = {}
    for key, value in raw_numerics.items():
        if key not in NUMERICS_KEYS:
            raise ConfigError(f"unknown numerics key {key!r}")
        kwargs[key] = NUMERICS_KEYS[key](value)
    numerics = NumericsOptions(**kwargs)

    params = dict(config.get("sweep", {}))
    return name, setup, numerics, params


def _scenario_kwargs(name: str, params: dict, override: bool) -> dict:
    kwargs: dict[str, Any] = {}
    if name == "single_photon":
        kwargs["sweep_points"] = int(params.pop("points", 33))
        kwargs["sweep_maximum"] = float(params.pop("maximum_g_q", math.pi))
        kwargs["override_criterion"] = override
    elif name == "detuning_sweep":
        kwargs["points"] = int(params.pop("points", 12))
        kwargs["fraction_min"] = float(params.pop("min_detuning_fraction", 0.05))
        kwargs["fraction_max"] = float(params.pop("max_detuning_fraction", 0.5))
    elif name in ("photon_pair", "swap"):
        kwargs["sweep_points"] = int(params.pop("points", 33))
        kwargs["sweep_maximum"] = float(
            params.pop("maximum_g_q", math.pi * math.sqrt(2.0)))
        kwargs["override_criterion"] = override
    elif name == "symmetric_n":
        kwargs["electron_counts"] = tuple(
            int(n) for n in params.pop("electron_counts", (1, 2, 4, 9)))
        kwargs["sweep_points"] = int(params.pop("points", 65))
    if params:
        raise ConfigError(f"unknown sweep keys for {name}: {sorted(params)}")
    return kwargs


def write_csv(result: ScenarioResult, path: Path) -> None:
    keys = list(result.columns)
    lengths = {len(result.columns[k]) for k in keys}
    if len(lengths) != 1:
        raise ValueError("all columns must share one length")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(",".join(keys) + "\n")
        for row in zip(*(result.columns[k] for k in keys)):
            handle.write(",".join(CSV_FORMAT.format(float(v))
                                  for v in row) + "\n")


def _json_ready(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


def write_manifest(result: ScenarioResult, path: Path) -> None:
    payload = {"scenario": result.name}
    payload.update(_json_ready(result.manifest))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def run_scenario(config_path: Path, out_dir: Path, *,
                 tol: float | None = None,
                 override_criterion: bool = False) -> list[Path]:
    """Execute the configured scenario; returns the written file paths."""
    config = load_config(config_path)
    name, setup, numerics, params = validate_config(config)
    if tol is not None:
        from dataclasses import replace
        numerics = replace(numerics, tolerance=tol)
    kwargs = _scenario_kwargs(name, params, override_criterion)
    result = SCENARIOS[name](setup, numerics, **kwargs)

    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    manifest_path = out_dir / f"{name}_manifest.json"
    write_csv(result, csv_path)
    write_manifest(result, manifest_path)
    return [csv_path, manifest_path]


def selftest() -> int:
    """Quick oracle-equivalence and invariant checks; returns an exit code."""
    import time

    from .dynamics import integrate, propagate_oracle
    from .hamiltonian import build_dense_hamiltonian, rhs_flat
    from .model import FockSpace, initial_state
    from .phasematch import electron_kinematics

    failures = 0

    def check(label: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {label}" + (f" ({detail})" if detail else ""))
        failures += 0 if ok else 1

    start = time.time()
    setup = resolve_setup()
    numerics = NumericsOptions(points_per_recoil=1, photon_cutoff=2,
                               signal_mode_count=3, loss_mode_count=1)
    bundle = scenarios.build_single_photon_system(setup, numerics)
    table = bundle.table

    dense = build_dense_hamiltonian(0.37 * bundle.transit_time, table)
    herm = float(np.max(np.abs(dense - dense.conj().T)))
    scale = float(np.max(np.abs(dense)))
    check("dense Hamiltonian Hermitian", herm <= 1e-12 * max(scale, 1.0),
          f"max |H - H^dag| = {herm:.2e}")

    rng = np.random.default_rng(7)
    y = rng.normal(size=table.basis.dim) + 1j * rng.normal(size=table.basis.dim)
    y /= np.linalg.norm(y)
    t_probe = 0.41 * bundle.transit_time
    dy = rhs_flat(t_probe, y, table)
    anti = abs(np.vdot(y, dy).real) / max(np.linalg.norm(dy), 1e-300)
    check("generator anti-Hermitian on random state", anti <= 1e-12,
          f"Re<psi|dpsi> = {anti:.2e}")

    ref = (-1j / CONSTANTS.hbar) * (build_dense_hamiltonian(t_probe, table) @ y)
    agree = np.linalg.norm(dy - ref) / np.linalg.norm(ref)
    check("dense and sparse actions agree", agree <= 1e-12,
          f"relative deviation {agree:.2e}")

    kin = electron_kinematics(setup.kinetic_energy_ev)
    psi0 = initial_state(bundle.grid, bundle.fock, 0.0,
                         (0,) * bundle.fock.mode_count,
                         velocity=kin.velocity)
    traj = integrate(psi0, table, bundle.transit_time, tol=1e-11)
    oracle = propagate_oracle(psi0, table, bundle.transit_time, steps=2048)
    gap = float(np.linalg.norm(traj.final().amplitudes - oracle.amplitudes))
    check("integrator matches unitary oracle", gap <= 1e-6,
          f"l2 distance {gap:.2e}")
    check("norm drift within budget", traj.max_norm_drift <= 1e-9,
          f"drift {traj.max_norm_drift:.2e}")
    check("oracle exactly unitary", abs(oracle.norm() - 1.0) <= 1e-12,
          f"|norm-1| = {abs(oracle.norm() - 1.0):.2e}")

    fock = FockSpace(mode_count=2, cutoff=2)
    seen = {fock.flatten(fock.unflatten(f)) for f in range(fock.dim)}
    check("occupation index bijection", seen == set(range(fock.dim)))

    print(f"selftest finished in {time.time() - start:.1f} s")
    return 1 if failures else 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ejcsim",
        description="electron-microcavity Jaynes-Cummings simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario from a config file")
    run_p.add_argument("config", type=Path)
    run_p.add_argument("--out-dir", type=Path, default=Path("out"))
    run_p.add_argument("--tol", type=float, default=None,
                       help="override the integrator tolerance")
    run_p.add_argument("--override-criterion", action="store_true",
                       help="run even when the few-level criterion fails")

    report_p = sub.add_parser("report", help="phase-matching report only")
    report_p.add_argument("config", type=Path)
    report_p.add_argument("--out-dir", type=Path, default=Path("out"))

    sub.add_parser("selftest", help="run built-in consistency checks")

    args = parser.parse_args(argv)
    try:
        if args.command == "selftest":
            return selftest()
        if args.command == "report":
            config = load_config(args.config)
            _, setup, numerics, _ = validate_config(
                {**config, "scenario": "phase_match_report"})
            result = scenarios.run_phase_match_report(setup, numerics)
            args.out_dir.mkdir(parents=True, exist_ok=True)
            csv_path = args.out_dir / "phase_match_report.csv"
            manifest_path = args.out_dir / "phase_match_report_manifest.json"
            write_csv(result, csv_path)
            write_manifest(result, manifest_path)
            print(f"wrote {csv_path} and {manifest_path}")
            return 0
        paths = run_scenario(args.config, args.out_dir, tol=args.tol,
                             override_criterion=args.override_criterion)
        for path in paths:
            print(f"wrote {path}")
        return 0
    except EjcsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line interface: scans, designs, verification and optimization runs.

Configuration is a single JSON document in which every dimensioned quantity is
an object {"value": x, "unit": "..."}; frequencies must carry "two_pi_mhz" or
"rad_per_s" so the bare-MHz ambiguity of the literature cannot enter.  All
CSV output is byte-stable for a given config and seed: '#' metadata lines
(tool version, config hash), a header row, then rows of 12-significant-digit
scientific floats.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .analysis import (PoleError, corridor_check, envelope_dynamical,
                       envelope_static, static_closed_form)
from .design import (DesignConstraints, DesignError, design_aux_multi,
                     design_aux_single, design_fourier, target_integral)
from .dynamics import (IntegrationError, excess_energy_exact,
                       trap_from_classical)
from .model import (Perturbation, PhysicalParams, Polynomial5, validate)
from .optimize import (GaConfig, SingularSystemError, corridor_cost,
                       ga_minimize, oct_solve)
from .perturbation import (fourier_dynamical, second_order_energy_freq,
                           second_order_energy_pos)
from .quadrature import QuadratureError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_DESIGN = 4

# relative floor (vs the scan peak) for the verify error column: scan ranges
# cross exact-vanishing points where a pointwise relative error is 0/0
VERIFY_FLOOR = 1e-6


class ConfigError(ValueError):
    pass


# -- config parsing ----------------------------------------------------------

def _quantity(node, unit_table: dict[str, float], what: str) -> float:
    if not isinstance(node, dict) or "value" not in node or "unit" not in node:
        raise ConfigError(f"{what} must be an object {{'value': x, 'unit': one of "
                          f"{sorted(unit_table)}}}")
    unit = node["unit"]
    if unit not in unit_table:
        raise ConfigError(f"{what}: unknown unit '{unit}' (allowed: {sorted(unit_table)})")
    try:
        value = float(node["value"])
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: value must be a number") from None
    return value * unit_table[unit]


_FREQ_UNITS = {"two_pi_mhz": 2.0 * math.pi * 1e6, "rad_per_s": 1.0}
_TIME_UNITS = {"s": 1.0, "us": 1e-6}
_LENGTH_UNITS = {"m": 1.0, "um": 1e-6}
_MASS_UNITS = {"kg": 1.0}


def parse_frequency(node, what: str) -> float:
    return _quantity(node, _FREQ_UNITS, what)


def parse_params(config: dict) -> PhysicalParams:
    try:
        phys = config["physical"]
    except KeyError:
        raise ConfigError("missing 'physical' section") from None
    params = PhysicalParams(
        mass=_quantity(phys.get("mass"), _MASS_UNITS, "physical.mass"),
        omega0=parse_frequency(phys.get("trap_frequency"), "physical.trap_frequency"),
        distance=_quantity(phys.get("distance"), _LENGTH_UNITS, "physical.distance"),
        duration=_quantity(phys.get("duration"), _TIME_UNITS, "physical.duration"),
    )
    report = validate(params)
    if not report.ok:
        raise ConfigError("; ".join(i.message for i in report.errors))
    return params


def parse_perturbation(config: dict, params: PhysicalParams) -> Perturbation:
    node = config.get("perturbation")
    if node is None:
        raise ConfigError("missing 'perturbation' section")
    kind = node.get("kind")
    try:
        amplitude = float(node.get("amplitude"))
    except (TypeError, ValueError):
        raise ConfigError("perturbation.amplitude must be a number") from None
    try:
        if kind == "frequency_sine":
            return Perturbation.frequency_sine(
                parse_frequency(node.get("frequency"), "perturbation.frequency"), amplitude)
        if kind == "position_sine":
            return Perturbation.position_sine(
                parse_frequency(node.get("frequency"), "perturbation.frequency"), amplitude)
        if kind == "frequency_sum":
            comps = [(parse_frequency(c.get("frequency"), "component.frequency"),
                      float(c.get("phase", 0.0)), float(c.get("weight", 1.0)))
                     for c in node.get("components", [])]
            return Perturbation.frequency_sum(comps, amplitude)
        if kind in ("frequency_tabulated", "position_tabulated"):
            samples = node.get("samples")
            ctor = (Perturbation.frequency_tabulated if kind == "frequency_tabulated"
                    else Perturbation.position_tabulated)
            return ctor(samples, amplitude, params.duration)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"perturbation: {exc}") from None
    raise ConfigError(f"unknown perturbation kind '{kind}'")


def _scan_axis(config: dict) -> tuple[str, np.ndarray]:
    node = config.get("scan")
    if node is None:
        raise ConfigError("missing 'scan' section")
    variable = node.get("variable")
    if variable not in ("omega", "duration"):
        raise ConfigError("scan.variable must be 'omega' or 'duration'")
    points = node.get("points")
    if not isinstance(points, int) or points < 1:
        raise ConfigError("scan.points must be a positive integer")
    units = _FREQ_UNITS if variable == "omega" else _TIME_UNITS
    lo = _quantity(node.get("min"), units, "scan.min")
    hi = _quantity(node.get("max"), units, "scan.max") if points > 1 else lo
    spacing = node.get("spacing", "linear")
    if spacing == "linear":
        values = np.linspace(lo, hi, points)
    elif spacing == "log":
        if lo <= 0 or hi <= 0:
            raise ConfigError("log spacing needs positive bounds")
        values = np.geomspace(lo, hi, points)
    else:
        raise ConfigError("scan.spacing must be 'linear' or 'log'")
    return variable, values


# -- output helpers ----------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.11e}"


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_csv(path: str, config: dict, header: list[str], rows) -> None:
    lines = [f"# stashuttle {__version__}",
             f"# config_sha256={config_hash(config)}",
             ",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def echo(key: str, value) -> None:
    print(f"{key}={_fmt(value) if isinstance(value, float) else value}")


def echo_frequency(key: str, rad_per_s: float) -> None:
    echo(f"{key}_rad_per_s", float(rad_per_s))
    echo(f"{key}_two_pi_mhz", float(rad_per_s / (2.0 * math.pi * 1e6)))


def _pool_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# -- subcommands -------------------------------------------------------------

def cmd_scan(config: dict, out: str, seed: int | None, threads: int) -> int:
    params = parse_params(config)
    pert = parse_perturbation(config, params)
    if pert.kind.value != "frequency_sine":
        raise ConfigError("scan currently supports the frequency_sine perturbation")
    level = int(config.get("level", 0))
    variable, values = _scan_axis(config)
    omega_pert = pert.components[0][0]
    proto0 = Polynomial5(params)
    echo_frequency("omega0", params.omega0)
    echo_frequency("omega", omega_pert)

    def point(value: float):
        if variable == "omega":
            p, omega = params, value
        else:
            p, omega = replace(params, duration=float(value)), omega_pert
        local = Perturbation.frequency_sine(omega, pert.amplitude)
        proto = Polynomial5(p) if variable == "duration" else proto0
        report = second_order_energy_freq(p, proto, local, level)
        try:
            env_s = envelope_static(p, omega, p.duration, level)
        except PoleError:
            env_s = math.nan
        try:
            env_d = envelope_dynamical(p, omega, p.duration)
        except PoleError:
            env_d = math.nan
        return (float(value), report.static_quanta, report.dynamical_quanta,
                report.total_quanta, env_s, env_d)

    rows = _pool_map(point, values, threads)
    write_csv(out, config, ["scan_value", "static_quanta", "dynamical_quanta",
                            "total_quanta", "envelope_static_quanta",
                            "envelope_dynamical_quanta"], rows)
    echo("rows", len(rows))
    return EXIT_OK


def cmd_verify(config: dict, out: str, seed: int | None, threads: int) -> int:
    params = parse_params(config)
    pert = parse_perturbation(config, params)
    if not pert.is_frequency or pert.kind.value != "frequency_sine":
        raise ConfigError("verify supports the frequency_sine perturbation")
    if pert.amplitude > 0.05:
        raise ConfigError("verify needs amplitude <= 0.05 for a meaningful comparison")
    level = int(config.get("level", 0))
    variable, values = _scan_axis(config)
    omega_pert = pert.components[0][0]
    steps_per_cycle = int(config.get("steps_per_cycle", 400))
    echo_frequency("omega0", params.omega0)

    def point(value: float):
        if variable == "omega":
            p, omega = params, float(value)
        else:
            p, omega = replace(params, duration=float(value)), omega_pert
        local = Perturbation.frequency_sine(omega, pert.amplitude)
        proto = Polynomial5(p)
        report = second_order_energy_freq(p, proto, local, level)
        pert_quanta = pert.amplitude**2 * report.total_quanta
        cycles = p.duration * max(2.0 * p.omega0, omega) / (2.0 * math.pi)
        n_steps = max(4000, int(steps_per_cycle * cycles))
        exact = excess_energy_exact(p, proto, local, level, n_steps).value
        return float(value), exact, pert_quanta

    triples = _pool_map(point, values, threads)
    peak = max((abs(t[2]) for t in triples), default=0.0)
    floor = VERIFY_FLOOR * peak
    rows = []
    max_err = 0.0
    for value, exact, pert_quanta in triples:
        denom = max(abs(pert_quanta), floor, 1e-300)
        err = abs(exact - pert_quanta) / denom if pert.amplitude > 0 else 0.0
        max_err = max(max_err, err)
        rows.append((value, exact, pert_quanta, err))
    write_csv(out, config, ["scan_value", "exact_quanta", "perturbative_quanta",
                            "relative_error"], rows)
    echo("max_relative_error", max_err)
    return EXIT_OK


def _design_protocol(config: dict, params: PhysicalParams):
    node = config.get("design")
    if node is None:
        raise ConfigError("missing 'design' section")
    method = node.get("method")
    if method == "fourier":
        targets = node.get("targets")
        if not targets:
            raise ConfigError("design.targets must list at least one frequency")
        constraints = DesignConstraints(
            targets=tuple(parse_frequency(t, "design.targets[]") for t in targets),
            omega_derivatives=int(node.get("omega_derivatives", 0)),
            omega0_derivatives=int(node.get("omega0_derivatives", 0)),
            n_terms=node.get("n_terms"))
        try:
            proto, system = design_fourier(params, constraints)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return proto, system, constraints.targets
    if method == "aux":
        targets = tuple(parse_frequency(t, "design.targets[]")
                        for t in node.get("targets", []))
        if not targets:
            raise ConfigError("design.targets must list at least one frequency")
        proto = (design_aux_single(params, targets[0]) if len(targets) == 1
                 else design_aux_multi(params, targets))
        return proto, None, targets
    raise ConfigError("design.method must be 'fourier' or 'aux'")


def _write_protocol_csv(out: str, config: dict, params: PhysicalParams, proto,
                        n_points: int = 1001) -> None:
    t = np.linspace(0.0, params.duration, n_points)
    trap = trap_from_classical(proto, params)
    rows = zip(t.tolist(),
               np.asarray(proto.position(t), dtype=float).tolist(),
               np.asarray(proto.velocity(t), dtype=float).tolist(),
               np.asarray(proto.acceleration(t), dtype=float).tolist(),
               np.asarray(trap(t), dtype=float).tolist())
    write_csv(out, config, ["t", "qc0", "qc0_dot", "qc0_ddot", "Q0"], rows)


def cmd_design(config: dict, out: str, seed: int | None, threads: int) -> int:
    params = parse_params(config)
    proto, system, targets = _design_protocol(config, params)
    _write_protocol_csv(out, config, params, proto,
                        int(config.get("design", {}).get("points", 1001)))
    for k, omega in enumerate(targets):
        echo(f"abs_I_target_{k}", abs(target_integral(params, proto, omega)))
    echo("abs_I_bound", 1e-9 * params.distance / params.duration)
    if system is not None:
        echo("condition_number", system.condition_number)
        echo("nullspace_dim", system.nullspace_dim)
    above, below = corridor_check(trap_from_classical(proto, params), params)
    echo("corridor_above_m", above)
    echo("corridor_below_m", below)
    echo("endpoint_compliant", proto.endpoint_compliant)
    return EXIT_OK


def cmd_ga(config: dict, out: str, seed: int | None, threads: int) -> int:
    params = parse_params(config)
    node = config.get("design")
    if node is None or node.get("method", "fourier") != "fourier":
        raise ConfigError("ga requires a 'design' section with method 'fourier'")
    _, system, targets = _design_protocol(config, params)
    ga_node = config.get("ga", {})
    cfg = GaConfig(
        seed=int(seed if seed is not None else ga_node.get("seed", 0)),
        population=int(ga_node.get("population", 64)),
        generations=int(ga_node.get("generations", 500)),
        stagnation_limit=int(ga_node.get("stagnation_limit", 60)))
    if system.nullspace_dim < 1:
        raise ConfigError("nothing to optimize: add sine terms beyond the constraint count")
    samples = int(ga_node.get("corridor_samples", 2001))
    result = ga_minimize(params, system,
                         lambda trap: corridor_cost(trap, params, samples), cfg)
    _write_protocol_csv(out, config, params, result.protocol)
    echo("best_cost", result.best_cost)
    echo("generations_used", result.generations_used)
    echo("seed", cfg.seed)
    echo("converged", result.converged)
    return EXIT_OK


def cmd_oct(config: dict, out: str, seed: int | None, threads: int) -> int:
    params = parse_params(config)
    node = config.get("oct")
    if node is None:
        raise ConfigError("missing 'oct' section")
    omega = parse_frequency(node.get("omega"), "oct.omega")
    n_steps = int(node.get("n_steps", 8000))
    sweep = node.get("sweep")
    if sweep is None:
        sol = oct_solve(params, omega, n_steps)
        rows = zip(sol.times.tolist(), sol.u.tolist(),
                   np.asarray(sol.trap_trajectory()(sol.times), dtype=float).tolist(),
                   sol.x[0].tolist(), sol.x[1].tolist(),
                   sol.x[2].tolist(), sol.x[3].tolist())
        write_csv(out, config, ["t", "u", "Q0", "x1", "x2", "x3", "x4"], rows)
        echo("e_bar_joules", sol.e_bar)
        echo("endpoint_residual", sol.endpoint_residual)
        echo("jump_start_m", sol.jump_start)
        echo("jump_end_m", sol.jump_end)
        return EXIT_OK

    variable = sweep.get("variable")
    units = {"duration": _TIME_UNITS, "omega0": _FREQ_UNITS,
             "omega": _FREQ_UNITS, "distance": _LENGTH_UNITS}.get(variable)
    if units is None:
        raise ConfigError("oct.sweep.variable must be duration, omega0, omega or distance")
    points = int(sweep.get("points", 10))
    lo = _quantity(sweep.get("min"), units, "oct.sweep.min")
    hi = _quantity(sweep.get("max"), units, "oct.sweep.max")
    values = np.geomspace(lo, hi, points) if sweep.get("spacing", "log") == "log" \
        else np.linspace(lo, hi, points)

    def point(value: float):
        p, om = params, omega
        if variable == "duration":
            p = replace(params, duration=float(value))
        elif variable == "omega0":
            p = replace(params, omega0=float(value))
        elif variable == "distance":
            p = replace(params, distance=float(value))
        else:
            om = float(value)
        cycles = p.duration * max(p.omega0, om) / (2.0 * math.pi)
        steps = max(n_steps, int(300 * cycles))
        return float(value), oct_solve(p, om, steps).e_bar

    rows = _pool_map(point, values, threads)
    write_csv(out, config, ["value", "e_bar_joules"], rows)
    logs = np.log(np.asarray(rows, dtype=float))
    slope = float(np.polyfit(logs[:, 0], logs[:, 1], 1)[0])
    echo("fitted_slope", slope)
    return EXIT_OK


# -- entry point -------------------------------------------------------------

_COMMANDS = {
    "scan": cmd_scan,
    "design": cmd_design,
    "verify": cmd_verify,
    "oct": cmd_oct,
    "ga": cmd_ga,
}


def _error_line(code: int, kind: str, message: str) -> None:
    print(json.dumps({"error": {"code": code, "kind": kind, "message": message}}),
          file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="stashuttle",
        description="Shuttling protocols robust against oscillatory trap perturbations")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--out", required=True, help="output CSV path")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for scans")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _error_line(EXIT_CONFIG, "config", f"cannot read config: {exc}")
        return EXIT_CONFIG

    try:
        return _COMMANDS[args.command](config, args.out, args.seed, max(1, args.threads))
    except ConfigError as exc:
        _error_line(EXIT_CONFIG, "config", str(exc))
        return EXIT_CONFIG
    except (IntegrationError, QuadratureError, SingularSystemError) as exc:
        _error_line(EXIT_NUMERICAL, "numerical", str(exc))
        return EXIT_NUMERICAL
    except DesignError as exc:
        _error_line(EXIT_DESIGN, "design", str(exc))
        return EXIT_DESIGN


if __name__ == "__main__":
    sys.exit(main())

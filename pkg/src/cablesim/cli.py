"""Command-line front end: run scenario files, compare runs, reproduce
the canned experiment suites, and serve the teleoperation bridge."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import click
import numpy as np
import yaml

from .actuator import (
    ActuatorConfig,
    ActuatorState,
    rise_and_settle,
    run_step_response,
    step_actuator,
)
from .errors import CableSimError
from .harness import RunLog, Scenario, compare_scaling, compute_metrics, run_scenario
from .presets import PRESETS
from .scenario_io import (
    apply_override,
    dumps_scenario,
    load_scenario,
    scenario_from_dict,
)

RUNLOG_FILE = "runlog.csv"
SCENARIO_FILE = "scenario.scenario"
METRICS_TEXT = "metrics.txt"
METRICS_JSON = "metrics.json"


def _fail(err: Exception) -> "click.ClickException":
    return click.ClickException(f"{type(err).__name__}: {err}")


def _load_with_overrides(path: str, overrides: tuple[str, ...],
                         seed: int | None, duration: float | None,
                         modules: int | None,
                         ideal_actuators: bool) -> Scenario:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh.read())
        if data is None:
            raise CableSimError(f"{path}: empty document")
        for item in overrides:
            if "=" not in item:
                raise CableSimError(
                    f"override {item!r} is not of the form key=value")
            key, _, value = item.partition("=")
            apply_override(data, key.strip(), value.strip())
        scenario = scenario_from_dict(data, source=str(path))
    except (CableSimError, OSError, yaml.YAMLError) as err:
        raise _fail(err)

    try:
        if seed is not None:
            scenario = dataclasses.replace(scenario, seed=seed)
        if duration is not None:
            scenario = dataclasses.replace(scenario, duration=duration)
        if modules is not None:
            if len(scenario.modules) < modules:
                raise CableSimError(
                    f"scenario defines {len(scenario.modules)} modules, "
                    f"cannot select {modules}")
            scenario = dataclasses.replace(
                scenario, modules=scenario.modules[:modules])
        if ideal_actuators:
            scenario = dataclasses.replace(
                scenario,
                actuator=ActuatorConfig.ideal(t_max=scenario.actuator.t_max))
    except (CableSimError, ValueError) as err:
        raise _fail(err)
    return scenario


def _write_run(directory: Path, scenario: Scenario, log: RunLog) -> dict:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / SCENARIO_FILE).write_text(dumps_scenario(scenario))
    log.to_csv(directory / RUNLOG_FILE)
    metrics = compute_metrics(log)
    (directory / METRICS_TEXT).write_text(metrics.to_text())
    (directory / METRICS_JSON).write_text(
        json.dumps(metrics.to_dict(), indent=2) + "\n")
    return metrics.to_dict()


def _load_run(directory: Path) -> RunLog:
    scenario_path = directory / SCENARIO_FILE
    log_path = directory / RUNLOG_FILE
    if not scenario_path.exists() or not log_path.exists():
        raise CableSimError(
            f"{directory} is not a run directory (expected {SCENARIO_FILE} "
            f"and {RUNLOG_FILE})")
    scenario = load_scenario(scenario_path)
    return RunLog.from_csv(log_path.read_text(), scenario)


@click.group()
@click.version_option(package_name="cablesim")
def main():
    """Planar cable-robot simulation: run, compare, serve, reproduce."""


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("overrides", nargs=-1)
@click.option("--output", "-o", type=click.Path(file_okay=False),
              default=None, help="Run directory (default runs/<name>).")
@click.option("--seed", type=int, default=None,
              help="Replace the scenario seed.")
@click.option("--duration", type=float, default=None,
              help="Replace the scenario duration in seconds.")
@click.option("--modules", type=click.Choice(["2", "4"]), default=None,
              help="Use only the first 2 or 4 modules of the scenario.")
@click.option("--ideal-actuators", is_flag=True,
              help="Swap in friction-free, instantly-slewing actuators.")
def run(scenario_path, overrides, output, seed, duration, modules,
        ideal_actuators):
    """Simulate a scenario file; write the per-tick log and metrics.

    OVERRIDES are dotted key=value pairs applied to the scenario before
    validation, e.g. payload.mass=20 noise.sigma_pos=0.001.
    """
    scenario = _load_with_overrides(
        scenario_path, overrides, seed, duration,
        int(modules) if modules else None, ideal_actuators)
    out_dir = Path(output) if output else \
        Path("runs") / (scenario.name or Path(scenario_path).stem)
    try:
        log = run_scenario(scenario)
    except CableSimError as err:
        raise _fail(err)
    metrics = _write_run(out_dir, scenario, log)
    click.echo(f"run complete: {log.n_ticks} ticks -> {out_dir}")
    for key in ("mean_tension", "max_tension", "max_tracking_error",
                "solve_time_p99"):
        click.echo(f"  {key}: {metrics[key]}")


@main.command()
@click.argument("run_small", type=click.Path(exists=True, file_okay=False))
@click.argument("run_large", type=click.Path(exists=True, file_okay=False))
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None,
              help="Also write the report to this file.")
def compare(run_small, run_large, output):
    """Compare cable tensions between two run directories.

    RUN_SMALL and RUN_LARGE are directories produced by `cablesim run`
    (typically the 2-module and 4-module variants of one trajectory).
    """
    try:
        log_small = _load_run(Path(run_small))
        log_large = _load_run(Path(run_large))
        report = compare_scaling(log_small, log_large)
    except CableSimError as err:
        raise _fail(err)
    text = report.to_text()
    click.echo(text, nl=False)
    if output:
        Path(output).write_text(text)


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--port", type=int, default=8712, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--realtime-factor", type=float, default=1.0, show_default=True,
              help="Simulated seconds per wall second (0 = unpaced).")
def serve(scenario_path, port, host, realtime_factor):
    """Serve a scenario over the WebSocket teleoperation bridge."""
    try:
        scenario = load_scenario(scenario_path)
    except CableSimError as err:
        raise _fail(err)
    from .bridge import serve_scenario

    click.echo(f"serving {scenario.name or scenario_path} "
               f"on ws://{host}:{port}/session (Ctrl-C to stop)")
    serve_scenario(scenario, host=host, port=port,
                   realtime_factor=realtime_factor)


@main.command()
@click.argument("suite", type=click.Choice(["step", "backdrive", "square",
                                            "amplify"]))
@click.option("--output", "-o", type=click.Path(file_okay=False),
              default="runs", show_default=True)
def experiments(suite, output):
    """Reproduce a canned experiment family end to end."""
    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if suite == "step":
            _experiment_step(out)
        elif suite == "backdrive":
            _experiment_backdrive(out)
        elif suite == "square":
            _experiment_square(out)
        else:
            _experiment_amplify(out)
    except CableSimError as err:
        raise _fail(err)


def _experiment_step(out: Path):
    """50 N command step on the inner tension loop."""
    config = ActuatorConfig()
    times, applied = run_step_response(config, 100.0, 150.0)
    rise, settle = rise_and_settle(times, applied, 100.0, 150.0)
    directory = out / "step"
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "step_response.csv", "w") as fh:
        fh.write("time,commanded,applied\n")
        for t, a in zip(times, applied):
            fh.write(f"{t:.9g},150,{a:.9g}\n")
    report = (f"step: 100 -> 150 N\nrise_time_s: {rise:.6g}\n"
              f"settle_time_s: {settle:.6g}\n"
              "limits: rise <= 0.075 s, settle(+-2 N) <= 0.1 s\n")
    (directory / "report.txt").write_text(report)
    click.echo(report, nl=False)


def _experiment_backdrive(out: Path):
    """Constant commands while the cable is forced through a triangle
    velocity profile; the tension error stays inside the friction band."""
    config = ActuatorConfig()
    dt = 1e-3
    v_peak, period = 0.05, 2.0
    n = int(4.0 / dt)
    directory = out / "backdrive"
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["level,max_abs_error,max_error_near_zero_velocity"]
    traces = {}
    velocities = np.empty(n)
    for level in (50.0, 100.0, 150.0, 200.0):
        state = ActuatorState.at_rest(level)
        errors = np.empty(n)
        for k in range(n):
            t = k * dt
            phase = (t % period) / period
            v = v_peak * (4 * phase - 1) if phase < 0.5 \
                else v_peak * (3 - 4 * phase)
            velocities[k] = v
            state, applied = step_actuator(state, config, level,
                                           state.applied_tension, v, dt)
            errors[k] = applied - level
        traces[level] = errors
        near_zero = np.abs(velocities) < config.v_stick
        lines.append(f"{level:.9g},{np.abs(errors).max():.9g},"
                     f"{np.abs(errors[near_zero]).max():.9g}")
    spread = max(np.abs(traces[a] - traces[b]).max()
                 for a in traces for b in traces)
    lines.append(f"cross_level_max_difference,{spread:.9g},-")
    report = "\n".join(lines) + "\n"
    (directory / "report.csv").write_text(report)
    click.echo(report, nl=False)


def _experiment_square(out: Path):
    """2- vs 4-module square tracking and the tension scaling report."""
    log2 = run_scenario(PRESETS["square_2mod"]())
    log4 = run_scenario(PRESETS["square_4mod"]())
    _write_run(out / "square_2mod", log2.scenario, log2)
    _write_run(out / "square_4mod", log4.scenario, log4)
    report = compare_scaling(log2, log4).to_text()
    (out / "square_scaling.txt").write_text(report)
    click.echo(report, nl=False)


def _experiment_amplify(out: Path):
    """Operator effort with frictional vs ideal actuators."""
    lines = []
    for name in ("amplify", "amplify_ideal"):
        log = run_scenario(PRESETS[name]())
        metrics = _write_run(out / name, log.scenario, log)
        weight = log.scenario.payload.weight
        lines.append(
            f"{name}: operator mean {metrics['operator_force_mean']:.3g} N "
            f"({100 * metrics['operator_ratio_mean']:.2f}% of {weight:.4g} N "
            f"weight), peak {metrics['operator_force_max']:.3g} N "
            f"({100 * metrics['operator_ratio_max']:.2f}%)")
    report = "\n".join(lines) + "\n"
    (out / "amplify_report.txt").write_text(report)
    click.echo(report, nl=False)


if __name__ == "__main__":
    main()

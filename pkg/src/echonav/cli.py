"""Command-line entry points: batch campaigns, live serving, figure export
and threshold calibration.  Batch subcommands call the engine in-process;
``serve`` hands the scenario to the FastAPI live service."""

from __future__ import annotations

import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

import click

from .calibrate import run_calibration, write_calibration
from .engine import (
    aggregate_heatmap,
    heatmap_csv,
    heatmap_pgm_bytes,
    report_to_dict,
    run_scenario,
    write_run_outputs,
)
from .layouts import SENSOR_LAYOUTS
from .scenario import (
    ScenarioError,
    load_scenario,
    resolve_scenario,
    serialize_scenario,
)

EXIT_OK = 0
EXIT_FAILED_RUNS = 1
EXIT_BAD_SCHEMA = 2


@click.group()
def main() -> None:
    """Multi-sonar acoustic-flow navigation workbench."""


def _load_or_exit(scenario: str):
    try:
        return load_scenario(resolve_scenario(scenario))
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_BAD_SCHEMA)
    except ScenarioError as exc:
        click.echo("scenario schema errors:", err=True)
        for problem in exc.problems:
            click.echo(f"  - {problem}", err=True)
        sys.exit(EXIT_BAD_SCHEMA)


def _one_run(args):
    scenario, layout, seed, fast = args
    scn = scenario.with_layout(layout) if layout is not None else scenario
    report = run_scenario(scn, seed=seed, fast_sonar=fast)
    return layout, seed, report


def _campaign(scenario, layouts, reps, base_seed, fast, out, workers, sink=None):
    jobs = []
    for layout in layouts:
        for rep in range(reps):
            jobs.append((scenario, layout, base_seed + rep, fast))
    if sink is not None:
        results = []
        for scn_, layout, seed, fast_ in jobs:
            s = scn_.with_layout(layout) if layout is not None else scn_
            results.append((layout, seed, run_scenario(s, seed=seed, fast_sonar=fast_,
                                                       energyscape_sink=sink)))
    elif workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "scenario.json").write_text(serialize_scenario(scenario))
    reports = []
    for layout, seed, report in results:
        label = f"l{layout if layout is not None else 'file'}_s{seed}"
        write_run_outputs(out_dir, label, report)
        reports.append((layout, seed, report))

    hm = aggregate_heatmap([r for _, _, r in reports])
    (out_dir / "heatmap.pgm").write_bytes(heatmap_pgm_bytes(hm))
    (out_dir / "heatmap.csv").write_text(heatmap_csv(hm))

    header = f"{'setup':>6} {'seed':>6} {'result':>10} {'sim_s':>7} {'collisions':>10} {'stuck':>6} {'step_ms':>8}"
    click.echo(header)
    click.echo("-" * len(header))
    all_ok = True
    for layout, seed, report in reports:
        ok = report.goal_reached and not report.collisions and not report.stuck_intervals
        all_ok &= ok
        click.echo(
            f"{str(layout) if layout is not None else 'file':>6} {seed:>6} "
            f"{report.termination:>10} {report.sim_time:>7.1f} "
            f"{len(report.collisions):>10} {len(report.stuck_intervals):>6} "
            f"{report.wallclock['mean_step_ms']:>8.1f}"
        )
    goals = sum(1 for _, _, r in reports if r.goal_reached)
    click.echo(f"goal rate: {goals}/{len(reports)}; outputs in {out_dir}")

    summary = {
        "runs": [
            {"layout": layout, "seed": seed, **report_to_dict(r)}
            for layout, seed, r in reports
        ],
        "goal_rate": goals / len(reports) if reports else 0.0,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if all_ok else EXIT_FAILED_RUNS


@main.command()
@click.option("--scenario", required=True, help="scenario file path or built-in name")
@click.option("--setup", type=int, default=None, help="override sensors with a layout row (1-10)")
@click.option("--reps", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=None, help="base seed (default: scenario seed)")
@click.option("--out", default="runs", show_default=True)
@click.option("--fast-sonar", is_flag=True, help="point-spread splat instead of the DSP pipeline")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--dump-energyscapes", is_flag=True,
              help="write one binary energyscape per (step, sensor) under <out>/escapes")
def run(scenario, setup, reps, seed, out, fast_sonar, workers, dump_energyscapes) -> None:
    """Run one scenario (optionally repeated) and write reports."""
    scn = _load_or_exit(scenario)
    if setup is not None and setup not in SENSOR_LAYOUTS:
        click.echo(f"error: unknown setup {setup}", err=True)
        sys.exit(EXIT_BAD_SCHEMA)
    base_seed = scn.seed if seed is None else seed
    sink = None
    if dump_energyscapes:
        from .sonar.io import dump_energyscape

        dump_dir = Path(out) / "escapes"
        dump_dir.mkdir(parents=True, exist_ok=True)

        def sink(step, sensor, scape):
            dump_energyscape(scape, dump_dir / f"step{step:05d}_sensor{sensor}.esc")

    sys.exit(_campaign(scn, [setup], reps, base_seed, fast_sonar, out, workers, sink))


@main.command()
@click.option("--scenario", required=True)
@click.option("--setups", default="1,4,8", show_default=True,
              help="comma-separated layout rows")
@click.option("--reps", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", default="runs", show_default=True)
@click.option("--fast-sonar", is_flag=True)
@click.option("--workers", type=int, default=1, show_default=True)
def batch(scenario, setups, reps, seed, out, fast_sonar, workers) -> None:
    """Campaign over several sensor layouts."""
    scn = _load_or_exit(scenario)
    try:
        layout_ids = [int(s) for s in setups.split(",") if s.strip()]
    except ValueError:
        click.echo(f"error: bad --setups {setups!r}", err=True)
        sys.exit(EXIT_BAD_SCHEMA)
    bad = [s for s in layout_ids if s not in SENSOR_LAYOUTS]
    if bad:
        click.echo(f"error: unknown setups {bad}", err=True)
        sys.exit(EXIT_BAD_SCHEMA)
    base_seed = scn.seed if seed is None else seed
    sys.exit(_campaign(scn, layout_ids, reps, base_seed, fast_sonar, out, workers))


@main.command()
@click.option("--scenario", default="empty_room", show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--full-sonar", is_flag=True, help="run the DSP pipeline live (slow)")
@click.option("--pace", type=float, default=0.1, show_default=True, help="step period, s")
@click.option("--ui-dir", type=click.Path(), default=None,
              help="static teleop UI directory (default: ./frontend/dist if present)")
def serve(scenario, host, port, full_sonar, pace, ui_dir) -> None:
    """Serve the live teleop loop over HTTP + WebSocket."""
    import uvicorn

    from .service.app import create_app

    _load_or_exit(scenario)  # fail fast with diagnostics before binding
    if ui_dir is None:
        candidate = Path.cwd() / "frontend" / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    app = create_app(scenario, fast_sonar=not full_sonar, pace=pace,
                     ui_dir=Path(ui_dir) if ui_dir else None)
    click.echo(f"serving {scenario} on ws://{host}:{port}/ws")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.option("--run-dir", required=True, help="directory produced by run/batch")
@click.option("--out", default=None, help="figure output dir (default: <run-dir>/figures)")
def export(run_dir, out) -> None:
    """Regenerate figures (flow lines, masks, trajectories, heat map)."""
    from .figures import export_run_figures

    run_path = Path(run_dir)
    scn_file = run_path / "scenario.json"
    if not scn_file.exists():
        click.echo(f"error: {scn_file} not found", err=True)
        sys.exit(EXIT_BAD_SCHEMA)
    scn = _load_or_exit(scn_file)
    out_dir = Path(out) if out else run_path / "figures"
    written = export_run_figures(scn, run_path, out_dir)
    for path in written:
        click.echo(str(path))


@main.command("calibrate-thresholds")
@click.option("--out", default=None, help="write the calibration JSON here")
def calibrate_thresholds(out) -> None:
    """Derive controller thresholds from the rendering pipeline."""
    if out:
        cal = write_calibration(out)
        click.echo(f"wrote {out}")
    else:
        cal = run_calibration()
    click.echo(json.dumps(cal.controller_overrides(), indent=2))
    click.echo(f"raw pipeline peak: {cal.raw_pipeline_peak}")


if __name__ == "__main__":
    main()

"""Command-line entry point.

Subcommands cover the three phases plus fixture capture:

  classify   classify requirements, score against gold labels
  generate   generate location maps (single / batch / dropped trial),
             assemble validated test cases, score
  golden     run the fault-free reference simulation
  inject     execute test cases against the plant and diff vs golden
  record     capture a live-provider recording for later replay
  demo       classify -> generate -> golden -> inject -> report,
             offline over the bundled fixture

Exit codes are a stable contract: 0 success, 2 configuration error,
3 transport failure, 4 data mismatch. Outputs land under the configured
output directory, which is guarded by a lock file against concurrent
invocations; no command mutates its inputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import contextmanager
from pathlib import Path

from .config import PROVIDER_FIXTURE, PROVIDER_LIVE, RunConfig, parse_grid
from .dataset import load_dataset
from .errors import (
    AutofiError,
    ConcurrencyBoundExceeded,
    ConfigError,
    DigestMismatch,
    FixtureMiss,
    FormatError,
    TimeBaseMismatch,
    TransportError,
    UnknownChannel,
)
from .evaluation.diffing import compare_traces, default_thresholds
from .evaluation.report import (
    metrics_to_csv,
    metrics_to_json,
    plot_metrics,
    plot_trace_overlays,
    render_metrics_table,
)
from .llm.prompts import load_template
from .llm.provider import FixtureProvider, HttpProvider, ProviderConfig, RecordingProvider
from .model import (
    ComponentCatalog,
    ComponentClass,
    LocationMap,
    load_test_cases,
    save_test_cases,
    validate_test_case,
)
from .outcomes import EmptySelection, Failure
from .sim.cycle import DrivingCycle, default_cycle
from .sim.plant import PlantConfig
from .sim.run import PaceMode, run_golden, run_with_faults
from .sim.trace import load_trace, save_trace
from .trials import (
    TRIAL_BATCH,
    TRIAL_DROPPED,
    TRIAL_SINGLE,
    run_classification_trial,
    run_generation_trial,
    assemble_test_cases,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRANSPORT = 3
EXIT_DATA = 4


@contextmanager
def output_lock(out_dir: Path):
    """Refuse concurrent invocations against the same output directory."""
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise ConfigError(
            f"output directory is in use (lock file {lock} exists; remove it if stale)"
        ) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        try:
            lock.unlink()
        except FileNotFoundError:
            pass


def make_provider(cfg: RunConfig):
    if cfg.provider_kind == PROVIDER_FIXTURE:
        return FixtureProvider(cfg.fixture, cfg.model)
    return HttpProvider(
        ProviderConfig(
            endpoint=cfg.endpoint,
            model=cfg.model,
            temperature=cfg.temperature,
            seed=cfg.seed,
            api_key_env=cfg.api_key_env,
            timeout_s=cfg.timeout_s,
            max_format_retries=cfg.max_format_retries,
            parallelism=cfg.parallelism,
        )
    )


def load_cycle(cfg: RunConfig) -> DrivingCycle:
    if cfg.cycle is not None:
        try:
            return DrivingCycle.load(cfg.cycle)
        except ValueError as exc:
            raise ConfigError(f"cycle file {cfg.cycle}: {exc}") from None
    return default_cycle(cfg.cycle_duration_s, cfg.cycle_dt_s)


def load_plant(cfg: RunConfig) -> PlantConfig:
    try:
        return PlantConfig.load(cfg.plant_config)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_metrics(outdir: Path, reports) -> None:
    _write(outdir / "metrics.json", metrics_to_json(reports))
    _write(outdir / "metrics.csv", metrics_to_csv(reports))
    table = render_metrics_table(reports)
    _write(outdir / "metrics.txt", table)
    plot_metrics(reports, outdir / "metrics.svg")
    print(table)


def _outcome_obj(outcome) -> dict:
    if isinstance(outcome, Failure):
        return {"failure": outcome.reason}
    if isinstance(outcome, EmptySelection):
        return {"empty": True}
    if isinstance(outcome, LocationMap):
        return {"map": outcome.to_json_obj()}
    return {"class": outcome.label}


# --- commands ---------------------------------------------------------------


def cmd_classify(cfg: RunConfig) -> int:
    dataset = load_dataset(cfg.dataset, cfg.pool_size)
    catalog = ComponentCatalog.load(cfg.catalog_components)
    template = load_template(Path(cfg.templates_dir) / "classify.txt")
    provider = make_provider(cfg)

    result = run_classification_trial(
        provider,
        dataset,
        catalog,
        template,
        cfg.n_grid_classify,
        max_retries=cfg.max_format_retries,
        parallelism=cfg.parallelism,
        strict_grid=not cfg.allow_off_grid,
    )
    outdir = Path(cfg.out_dir) / "classify"
    for cell in result.cells:
        lines = [
            json.dumps({"id": fsr.id, **_outcome_obj(out)})
            for fsr, out in zip(dataset.eval_split, cell.outputs)
        ]
        _write(outdir / f"predictions_n{cell.report.n_examples}.jsonl", "\n".join(lines) + "\n")
    _write_metrics(outdir, result.reports)
    return EXIT_OK


def cmd_generate(cfg: RunConfig, trial: str) -> int:
    dataset = load_dataset(cfg.dataset, cfg.pool_size)
    catalog = ComponentCatalog.load(cfg.catalog_sensors)
    if trial == TRIAL_DROPPED:
        try:
            catalog = catalog.drop(cfg.dropped_sensors)
        except KeyError as exc:
            raise ConfigError(f"cannot drop {exc} from {cfg.catalog_sensors}") from None
    template = load_template(Path(cfg.templates_dir) / "generate.txt")
    provider = make_provider(cfg)

    bs_grid = cfg.bs_grid if trial == TRIAL_BATCH else (1,)
    result = run_generation_trial(
        provider,
        dataset,
        catalog,
        template,
        trial,
        cfg.n_grid_generate,
        bs_grid=bs_grid,
        max_retries=cfg.max_format_retries,
        parallelism=cfg.parallelism,
        strict_grid=not cfg.allow_off_grid,
    )

    outdir = Path(cfg.out_dir) / "generate" / trial
    fsrs = dataset.eval_of_class(ComponentClass.SENSOR)
    for cell in result.cells:
        name = f"outcomes_n{cell.report.n_examples}_bs{cell.report.batch_size}.jsonl"
        lines = [
            json.dumps({"id": fsr.id, **_outcome_obj(out)})
            for fsr, out in zip(fsrs, cell.outputs)
        ]
        _write(outdir / name, "\n".join(lines) + "\n")

    # assemble executable TCs from the highest-N cell of the first batch size
    best = max(
        (c for c in result.cells if c.report.batch_size == bs_grid[0]),
        key=lambda c: c.report.n_examples,
    )
    tcs, skipped = assemble_test_cases(best.outputs, fsrs, catalog, cfg.tc_defaults)
    save_test_cases(tcs, outdir / "testcases.json")
    _write(outdir / "skipped.txt", "\n".join(skipped) + ("\n" if skipped else ""))
    print(f"{trial}: {len(tcs)} executable test cases (from N={best.report.n_examples}), "
          f"{len(skipped)} skipped; see {outdir}")
    _write_metrics(outdir, result.reports)
    return EXIT_OK


def cmd_golden(cfg: RunConfig) -> int:
    cycle = load_cycle(cfg)
    plant = load_plant(cfg)
    trace = run_golden(cycle, plant, PaceMode.parse(cfg.pace))
    outdir = Path(cfg.out_dir) / "traces"
    outdir.mkdir(parents=True, exist_ok=True)
    save_trace(trace, outdir / "golden.csv")
    print(
        f"golden run: {trace.steps} steps at dt={trace.dt} s, run id {trace.run_id}; "
        f"saved to {outdir / 'golden.csv'}"
    )
    return EXIT_OK


def cmd_inject(cfg: RunConfig, tc_file: Path) -> int:
    cycle = load_cycle(cfg)
    plant = load_plant(cfg)
    outdir = Path(cfg.out_dir)
    golden_path = outdir / "traces" / "golden.csv"
    if not golden_path.exists():
        raise ConfigError(f"golden trace not found at {golden_path}; run the golden command first")
    golden = load_trace(golden_path)
    if golden.cycle_digest != cycle.digest() or golden.plant_digest != plant.digest():
        raise DigestMismatch(
            "golden trace was produced from a different cycle/plant configuration; "
            "re-run the golden command"
        )

    tcs = load_test_cases(tc_file)
    if cfg.inject_limit > 0:
        tcs = tcs[: cfg.inject_limit]
    # TCs must be Valid against the catalog they were generated for
    catalog = ComponentCatalog.load(cfg.catalog_sensors)
    for tc in tcs:
        verdict = validate_test_case(tc, catalog)
        if not verdict:
            raise FormatError(f"test case {tc.id} is invalid: {'; '.join(verdict.violations)}")
    thresholds = default_thresholds(golden, cfg.threshold_fraction)
    thresholds.update(dict(cfg.channel_thresholds))
    pace = PaceMode.parse(cfg.pace)

    for tc in tcs:
        faulty_path = outdir / "traces" / f"{tc.id}.csv"
        save_trace(run_with_faults(cycle, plant, [tc], pace), faulty_path)
        # compare persisted against persisted: both sides then share the
        # same 9-significant-digit serialization of the time base
        faulty = load_trace(faulty_path)
        report = compare_traces(golden, faulty, thresholds)
        _write(outdir / "reports" / f"{tc.id}.violation.json",
               json.dumps(report.to_json_obj(), indent=2) + "\n")
        _write(outdir / "reports" / f"{tc.id}.md", report.to_markdown())
        focus = sorted({ch for ch, _ in tc.faults} | {f.channel for f in report.violated})
        plot_trace_overlays(golden, faulty, [tc], outdir / "figures" / tc.id, channels=focus)
        print(f"{tc.id}: {report.summary}")
    return EXIT_OK


def cmd_record(cfg: RunConfig) -> int:
    if cfg.provider_kind != PROVIDER_LIVE:
        raise ConfigError("record needs --provider live")
    dataset = load_dataset(cfg.dataset, cfg.pool_size)
    components = ComponentCatalog.load(cfg.catalog_components)
    sensors = ComponentCatalog.load(cfg.catalog_sensors)
    classify_tpl = load_template(Path(cfg.templates_dir) / "classify.txt")
    generate_tpl = load_template(Path(cfg.templates_dir) / "generate.txt")

    outdir = Path(cfg.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    recording_path = outdir / f"{cfg.model}.recording.jsonl"
    provider = RecordingProvider(make_provider(cfg), recording_path)
    try:
        run_classification_trial(
            provider, dataset, components, classify_tpl, cfg.n_grid_classify,
            max_retries=cfg.max_format_retries, parallelism=cfg.parallelism,
            strict_grid=not cfg.allow_off_grid,
        )
        for trial, catalog, bs_grid in (
            (TRIAL_SINGLE, sensors, (1,)),
            (TRIAL_BATCH, sensors, cfg.bs_grid),
            (TRIAL_DROPPED, sensors.drop(cfg.dropped_sensors), (1,)),
        ):
            run_generation_trial(
                provider, dataset, catalog, generate_tpl, trial,
                cfg.n_grid_generate, bs_grid=bs_grid,
                max_retries=cfg.max_format_retries, parallelism=cfg.parallelism,
                strict_grid=not cfg.allow_off_grid,
            )
    except TransportError:
        print(
            f"transport failure; partial recording preserved at {recording_path} "
            "(re-running resumes where it stopped)",
            file=sys.stderr,
        )
        raise
    print(f"recording complete: {recording_path}")
    return EXIT_OK


def cmd_demo(cfg: RunConfig) -> int:
    print("== classification trial ==")
    cmd_classify(cfg)
    print("== generation trials ==")
    for trial in (TRIAL_SINGLE, TRIAL_BATCH, TRIAL_DROPPED):
        cmd_generate(cfg, trial)
    print("== golden run ==")
    cmd_golden(cfg)
    print("== fault injection ==")
    tc_file = Path(cfg.out_dir) / "generate" / TRIAL_SINGLE / "testcases.json"
    limit_cfg = cfg if cfg.inject_limit > 0 else cfg.override(inject_limit=2)
    cmd_inject(limit_cfg, tc_file)
    print(f"demo complete; outputs under {cfg.out_dir}")
    return EXIT_OK


# --- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autofi",
        description="Fault test cases from safety requirements, executed on a simulated plant.",
    )
    parser.add_argument("--config", type=Path, help="JSON config file (flags override it)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--provider", choices=[PROVIDER_LIVE, PROVIDER_FIXTURE],
                        help="chat-completion provider kind")
    parser.add_argument("--model", help="model name (also keys the fixture digests)")
    parser.add_argument("--endpoint", help="chat-completion endpoint base URL")
    parser.add_argument("--fixture", type=Path, help="fixture recording for --provider fixture")
    parser.add_argument("--dataset", type=Path, help="FSR dataset (JSON Lines)")
    parser.add_argument("--catalog", type=Path, help="sensor catalog used by generation trials")
    parser.add_argument("--pace", help="pacing mode: afap or wall[:rate]")
    parser.add_argument("--allow-off-grid", action="store_true", default=None,
                        help="accept N/BS values outside the documented grids")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify FSRs as sensor- or actuator-related")
    p.add_argument("--n", help="comma-separated example counts (default 1,3,5)")

    p = sub.add_parser("generate", help="generate fault locations and test cases")
    p.add_argument("--trial", choices=[TRIAL_SINGLE, TRIAL_BATCH, TRIAL_DROPPED],
                   default=TRIAL_SINGLE)
    p.add_argument("--n", help="comma-separated example counts (default 1,3,5,8)")
    p.add_argument("--bs", help="comma-separated batch sizes for the batch trial")
    p.add_argument("--drop", help="comma-separated sensor ids to drop (dropped trial)")

    p = sub.add_parser("golden", help="run the fault-free reference simulation")
    p.add_argument("--cycle", type=Path, help="driving cycle CSV (default: built-in 400 s cycle)")
    p.add_argument("--plant", type=Path, help="plant config JSON")

    p = sub.add_parser("inject", help="execute test cases and diff against the golden trace")
    p.add_argument("--tcs", type=Path, required=True, help="test case file (JSON array)")
    p.add_argument("--cycle", type=Path)
    p.add_argument("--plant", type=Path)
    p.add_argument("--limit", type=int, help="inject only the first N test cases")

    p = sub.add_parser("record", help="record a live provider run for later fixture replay")
    p.add_argument("--n", help="example counts to cover")
    p.add_argument("--bs", help="batch sizes to cover")

    p = sub.add_parser("demo", help="full offline pipeline over the bundled fixture")
    p.add_argument("--limit", type=int, help="how many test cases to inject (default 2)")

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    overrides: dict = {
        "out_dir": args.out,
        "provider_kind": args.provider,
        "model": args.model,
        "endpoint": args.endpoint,
        "fixture": args.fixture,
        "dataset": args.dataset,
        "pace": args.pace,
        "allow_off_grid": args.allow_off_grid,
    }
    if getattr(args, "catalog", None):
        overrides["catalog_sensors"] = args.catalog
    if getattr(args, "cycle", None):
        overrides["cycle"] = args.cycle
    if getattr(args, "plant", None):
        overrides["plant_config"] = args.plant
    if getattr(args, "limit", None) is not None:
        overrides["inject_limit"] = args.limit
    if getattr(args, "drop", None):
        overrides["dropped_sensors"] = tuple(s.strip() for s in args.drop.split(",") if s.strip())
    if getattr(args, "n", None):
        grid = parse_grid(args.n)
        if args.command == "classify":
            overrides["n_grid_classify"] = grid
        elif args.command == "record":
            overrides["n_grid_classify"] = grid
            overrides["n_grid_generate"] = grid
        else:
            overrides["n_grid_generate"] = grid
    if getattr(args, "bs", None):
        overrides["bs_grid"] = parse_grid(args.bs)
    return cfg.override(**overrides).validated()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        with output_lock(Path(cfg.out_dir)):
            if args.command == "classify":
                return cmd_classify(cfg)
            if args.command == "generate":
                return cmd_generate(cfg, args.trial)
            if args.command == "golden":
                return cmd_golden(cfg)
            if args.command == "inject":
                return cmd_inject(cfg, args.tcs)
            if args.command == "record":
                return cmd_record(cfg)
            if args.command == "demo":
                return cmd_demo(cfg)
            raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (
        DigestMismatch,
        UnknownChannel,
        ConcurrencyBoundExceeded,
        TimeBaseMismatch,
        FixtureMiss,
        FormatError,
    ) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AutofiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

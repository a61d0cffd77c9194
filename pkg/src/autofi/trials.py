"""Trial orchestration: grid sweeps over example counts and batch sizes,
plus assembly of executable test cases from generation outputs.

Requests inside one grid cell may run concurrently (bounded by the
provider config); outputs are merged back in input order, so results
never depend on completion order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .dataset import FsrDataset, gold_map
from .evaluation.metrics import MetricsReport, score_classification_cell, score_generation_cell
from .llm.pipeline import GenerationOutcome, classify_fsr, generate_location_maps
from .llm.provider import UsageTally
from .model import (
    ChannelFault,
    ComponentCatalog,
    ComponentClass,
    FaultTestCase,
    InjectionWindow,
    LocationMap,
    fault_type_of,
    params_from_json_obj,
    validate_test_case,
)
from .outcomes import EmptySelection, Failure

TRIAL_CLASSIFY = "classify"
TRIAL_SINGLE = "single"
TRIAL_BATCH = "batch"
TRIAL_DROPPED = "dropped"


@dataclass
class CellResult:
    report: MetricsReport
    outputs: list


@dataclass
class TrialResult:
    trial: str
    cells: list[CellResult] = field(default_factory=list)

    @property
    def reports(self) -> list[MetricsReport]:
        return [c.report for c in self.cells]


def _map_in_order(fn, items, parallelism: int):
    if parallelism <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, items))


def run_classification_trial(
    provider,
    dataset: FsrDataset,
    catalog: ComponentCatalog,
    template: str,
    n_grid: Sequence[int],
    max_retries: int = 2,
    parallelism: int = 1,
    strict_grid: bool = True,
) -> TrialResult:
    tally = UsageTally(provider)
    golds = [f.gold_class for f in dataset.eval_split]
    result = TrialResult(trial=TRIAL_CLASSIFY)
    for n in n_grid:
        examples = dataset.classification_examples(n)
        before = tally.snapshot()

        def ask(fsr):
            return classify_fsr(
                tally, fsr, examples, catalog, template,
                max_retries=max_retries, strict_grid=strict_grid,
            )

        predictions = _map_in_order(ask, list(dataset.eval_split), parallelism)
        after = tally.snapshot()
        report = score_classification_cell(
            predictions,
            golds,
            trial=TRIAL_CLASSIFY,
            model=provider.model,
            n_examples=n,
            n_pool=dataset.pool_size,
            prompt_tokens=after[1] - before[1],
            completion_tokens=after[2] - before[2],
        )
        result.cells.append(CellResult(report=report, outputs=predictions))
    return result


def _chunks(items: list, size: int) -> list[list]:
    return [items[i : i + size] for i in range(0, len(items), size)]


def run_generation_trial(
    provider,
    dataset: FsrDataset,
    catalog: ComponentCatalog,
    template: str,
    trial: str,
    n_grid: Sequence[int],
    bs_grid: Sequence[int] = (1,),
    max_retries: int = 2,
    parallelism: int = 1,
    strict_grid: bool = True,
) -> TrialResult:
    """Generation sweep over (N, BS) cells for the sensor-class split.

    The dropped-sensor trial is this same sweep against a reduced
    catalog: gold locations are projected onto it, so a requirement
    whose components were all dropped expects the empty selection.
    """
    tally = UsageTally(provider)
    fsrs = list(dataset.eval_of_class(ComponentClass.SENSOR))
    golds = [gold_map(f, catalog) for f in fsrs]
    result = TrialResult(trial=trial)
    for bs in bs_grid:
        batches = _chunks(fsrs, bs)
        for n in n_grid:
            examples = dataset.generation_examples(n, catalog)
            before = tally.snapshot()

            def ask(batch):
                # the trailing partial batch is allowed off-grid
                return generate_location_maps(
                    tally, batch, catalog, examples, template,
                    max_retries=max_retries,
                    strict_grid=strict_grid and len(batch) == bs,
                )

            outcomes: list[GenerationOutcome] = []
            for parsed in _map_in_order(ask, batches, parallelism):
                outcomes.extend(parsed)
            after = tally.snapshot()
            report = score_generation_cell(
                outcomes,
                golds,
                catalog,
                trial=trial,
                model=provider.model,
                n_examples=n,
                batch_size=bs,
                n_pool=dataset.pool_size,
                prompt_tokens=after[1] - before[1],
                completion_tokens=after[2] - before[2],
            )
            result.cells.append(CellResult(report=report, outputs=outcomes))
    return result


@dataclass(frozen=True)
class TcDefaults:
    """Fault attributes applied to generated locations: the location map
    comes from the model, type/parameters/window come from configuration."""

    window: InjectionWindow
    sensor_params_obj: dict
    actuator_params_obj: dict

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TcDefaults":
        return cls(
            window=InjectionWindow.from_json_obj(obj["window"]),
            sensor_params_obj=dict(obj["sensor"]),
            actuator_params_obj=dict(obj["actuator"]),
        )

    def to_json_obj(self) -> dict:
        return {
            "window": self.window.to_json_obj(),
            "sensor": dict(self.sensor_params_obj),
            "actuator": dict(self.actuator_params_obj),
        }


def assemble_test_cases(
    outcomes: Sequence[GenerationOutcome],
    fsrs: Sequence,
    catalog: ComponentCatalog,
    defaults: TcDefaults,
) -> tuple[list[FaultTestCase], list[str]]:
    """Turn generation outcomes into validated executable test cases.

    Empty selections, failures and invalid maps are excluded and
    reported in the skip log; everything returned is Valid against the
    catalog.
    """
    tcs: list[FaultTestCase] = []
    skipped: list[str] = []
    for fsr, outcome in zip(fsrs, outcomes):
        if isinstance(outcome, Failure):
            skipped.append(f"{fsr.id}: generation failed ({outcome.reason})")
            continue
        if isinstance(outcome, EmptySelection):
            skipped.append(f"{fsr.id}: empty selection (no supported component applies)")
            continue
        assert isinstance(outcome, LocationMap)
        faults = []
        for cid in outcome.active:
            kind = catalog.kind_of(cid)
            params_obj = (
                defaults.sensor_params_obj
                if kind is ComponentClass.SENSOR
                else defaults.actuator_params_obj
            )
            params = params_from_json_obj(params_obj)
            faults.append((cid, ChannelFault(fault_type_of(params), params, defaults.window)))
        tc = FaultTestCase(
            id=f"tc-{fsr.id}",
            source_fsr=fsr.id,
            locations=outcome,
            faults=tuple(faults),
        )
        verdict = validate_test_case(tc, catalog)
        if not verdict:
            skipped.append(f"{fsr.id}: invalid test case: {'; '.join(verdict.violations)}")
            continue
        tcs.append(tc)
    return tcs, skipped

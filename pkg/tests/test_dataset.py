"""Dataset loading, the pool/eval split and example selection; trial
orchestration and test-case assembly."""

from __future__ import annotations

import json

import pytest

from autofi.config import DEFAULT_TC_DEFAULTS, bundled
from autofi.dataset import gold_map, load_dataset, save_dataset
from autofi.errors import ConfigError, FormatError
from autofi.llm.provider import ProviderResponse
from autofi.llm.prompts import load_template
from autofi.model import ComponentCatalog, ComponentClass, FSR, LocationMap, validate_test_case
from autofi.outcomes import EmptySelection, GenerationFailure
from autofi.trials import (
    TRIAL_SINGLE,
    assemble_test_cases,
    run_classification_trial,
    run_generation_trial,
)

SENSORS = ComponentCatalog.load(bundled("catalog", "sensors.json"))
COMPONENTS = ComponentCatalog.load(bundled("catalog", "components.json"))


class TestBundledDataset:
    def test_split_counts(self):
        ds = load_dataset(bundled("fsr", "dataset.jsonl"))
        assert len(ds.pool) == 10
        assert len(ds.eval_split) == 134
        assert len(ds.eval_of_class(ComponentClass.SENSOR)) == 97
        assert len(ds.eval_of_class(ComponentClass.ACTUATOR)) == 37

    def test_sensor_fsrs_have_gold_maps(self):
        ds = load_dataset(bundled("fsr", "dataset.jsonl"))
        for fsr in ds.eval_of_class(ComponentClass.SENSOR):
            m = gold_map(fsr, SENSORS)
            assert 1 <= m.total <= 2

    def test_exactly_two_dropped_negatives(self):
        ds = load_dataset(bundled("fsr", "dataset.jsonl"))
        reduced = SENSORS.drop(["WSA", "ST"])
        empties = [
            f.id for f in ds.eval_of_class(ComponentClass.SENSOR)
            if gold_map(f, reduced).total == 0
        ]
        assert len(empties) == 2

    def test_classification_examples_show_both_labels(self):
        ds = load_dataset(bundled("fsr", "dataset.jsonl"))
        examples = ds.classification_examples(5)
        labels = {e.expected_output for e in examples}
        assert labels == {"sensor", "actuator"}

    def test_generation_examples_up_to_eight(self):
        ds = load_dataset(bundled("fsr", "dataset.jsonl"))
        examples = ds.generation_examples(8, SENSORS)
        assert len(examples) == 8
        for ex in examples:
            obj = json.loads(ex.expected_output)
            assert isinstance(obj, dict)
            assert set(obj) == set(SENSORS.ids)

    def test_generation_examples_render_empty_on_reduced_catalog(self):
        ds = load_dataset(bundled("fsr", "dataset.jsonl"))
        reduced = SENSORS.drop(["WSA", "ST"])
        examples = ds.generation_examples(8, reduced)
        assert any(e.expected_output == "[]" for e in examples)


class TestDatasetFiles:
    def test_round_trip(self, tmp_path):
        fsrs = [
            FSR(id="a", text="t1", gold_class=ComponentClass.SENSOR,
                gold_locations=frozenset({"APP"})),
            FSR(id="b", text="t2", gold_class=ComponentClass.ACTUATOR),
        ]
        path = tmp_path / "ds.jsonl"
        save_dataset(fsrs, path)
        again = load_dataset(path, pool_size=2)
        assert list(again.fsrs) == fsrs

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "ds.jsonl"
        rec = {"id": "x", "text": "t", "gold_class": "sensor"}
        path.write_text(json.dumps(rec) + "\n" + json.dumps(rec) + "\n")
        with pytest.raises(FormatError):
            load_dataset(path, pool_size=0)

    def test_unlabeled_pool_rejected(self, tmp_path):
        path = tmp_path / "ds.jsonl"
        path.write_text(json.dumps({"id": "x", "text": "t"}) + "\n")
        with pytest.raises(ConfigError):
            load_dataset(path, pool_size=1)

    def test_gold_map_projection(self):
        fsr = FSR(id="x", text="t", gold_class=ComponentClass.SENSOR,
                  gold_locations=frozenset({"WSA", "APP"}))
        full = gold_map(fsr, SENSORS)
        assert set(full.active) == {"APP", "WSA"}
        reduced = gold_map(fsr, SENSORS.drop(["WSA", "ST"]))
        assert reduced.active == ("APP",)


class EchoGoldProvider:
    """Answers every generation prompt with the gold map of the one FSR
    whose text appears in the prompt (single-batch prompts only)."""

    model = "echo"

    def __init__(self, dataset, catalog):
        self.dataset = dataset
        self.catalog = catalog

    def complete(self, prompt_text: str) -> ProviderResponse:
        for fsr in self.dataset.eval_split:
            if fsr.text in prompt_text and fsr.gold_locations is not None:
                answer = gold_map(fsr, self.catalog)
                text = "[]" if answer.total == 0 else json.dumps(answer.to_json_obj())
                return ProviderResponse(text=text, prompt_tokens=7, completion_tokens=3)
        return ProviderResponse(text="sensor", prompt_tokens=7, completion_tokens=3)


class TestTrials:
    def test_generation_trial_perfect_echo(self):
        ds = load_dataset(bundled("fsr", "dataset.jsonl"))
        provider = EchoGoldProvider(ds, SENSORS)
        template = load_template(bundled("templates", "generate.txt"))
        result = run_generation_trial(
            provider, ds, SENSORS, template, TRIAL_SINGLE, n_grid=(1,), bs_grid=(1,)
        )
        (cell,) = result.cells
        assert cell.report.accuracy == 1.0
        assert cell.report.f1_macro == 1.0
        assert cell.report.n_scored == 97
        assert cell.report.prompt_tokens == 7 * 97

    def test_classification_trial_token_accounting(self):
        ds = load_dataset(bundled("fsr", "dataset.jsonl"))

        class AlwaysSensor:
            model = "const"

            def complete(self, prompt_text):
                return ProviderResponse(text="sensor", prompt_tokens=2, completion_tokens=1)

        template = load_template(bundled("templates", "classify.txt"))
        result = run_classification_trial(AlwaysSensor(), ds, COMPONENTS, template, n_grid=(1,))
        (cell,) = result.cells
        assert cell.report.n_scored == 134
        assert cell.report.prompt_tokens == 2 * 134
        # all-sensor answers: every sensor right, every actuator wrong
        assert cell.report.accuracy == pytest.approx(97 / 134)

    def test_batch_cell_issues_ceil_requests(self):
        ds = load_dataset(bundled("fsr", "dataset.jsonl"))
        template = load_template(bundled("templates", "generate.txt"))

        class CountingEcho(EchoGoldProvider):
            def __init__(self, dataset, catalog):
                super().__init__(dataset, catalog)
                self.requests = 0

            def complete(self, prompt_text):
                self.requests += 1
                # answer a batch with one gold entry per embedded FSR text
                entries = []
                for fsr in self.dataset.eval_split:
                    if f" {fsr.text}" in prompt_text and fsr.gold_locations is not None:
                        entries.append(gold_map(fsr, self.catalog).to_json_obj())
                return ProviderResponse(text=json.dumps(entries), prompt_tokens=1, completion_tokens=1)

        provider = CountingEcho(ds, SENSORS)
        result = run_generation_trial(
            provider, ds, SENSORS, template, "batch", n_grid=(1,), bs_grid=(3,)
        )
        # 97 sensor FSRs at BS=3: ceil(97/3) = 33 requests, last one partial
        assert provider.requests == 33
        assert result.cells[0].report.n_scored == 97
        assert result.cells[0].report.f1_macro == 1.0

    def test_parallel_results_order_aligned(self):
        ds = load_dataset(bundled("fsr", "dataset.jsonl"))
        provider = EchoGoldProvider(ds, SENSORS)
        template = load_template(bundled("templates", "generate.txt"))
        seq = run_generation_trial(
            provider, ds, SENSORS, template, TRIAL_SINGLE, n_grid=(1,), bs_grid=(1,),
            parallelism=1,
        )
        par = run_generation_trial(
            provider, ds, SENSORS, template, TRIAL_SINGLE, n_grid=(1,), bs_grid=(1,),
            parallelism=8,
        )
        assert seq.cells[0].outputs == par.cells[0].outputs


class TestAssembleTestCases:
    def test_assembly_skips_empties_and_failures(self):
        fsrs = [FSR(id=f"f{i}", text=f"t{i}") for i in range(4)]
        outcomes = [
            LocationMap.select(SENSORS, ["APP"]),
            EmptySelection(),
            GenerationFailure("bad"),
            LocationMap.select(SENSORS, ["WS", "ST"]),
        ]
        tcs, skipped = assemble_test_cases(outcomes, fsrs, SENSORS, DEFAULT_TC_DEFAULTS)
        assert [tc.id for tc in tcs] == ["tc-f0", "tc-f3"]
        assert len(skipped) == 2
        for tc in tcs:
            assert validate_test_case(tc, SENSORS).ok

    def test_assembled_faults_follow_component_kind(self):
        fsrs = [FSR(id="f", text="t")]
        outcomes = [LocationMap.select(SENSORS, ["APP", "YR"])]
        (tc,), _skipped = assemble_test_cases(outcomes, fsrs, SENSORS, DEFAULT_TC_DEFAULTS)
        for cid, cf in tc.faults:
            assert cf.fault_type.value == "delay"  # sensor default
            assert cf.window == DEFAULT_TC_DEFAULTS.window

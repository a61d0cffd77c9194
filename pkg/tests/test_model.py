"""Domain-type contracts: location maps, parsing, test-case validation."""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autofi.errors import FormatError
from autofi.model import (
    ChannelFault,
    CatalogEntry,
    ComponentCatalog,
    ComponentClass,
    FaultTestCase,
    FaultType,
    FunctionalSafetyRequirement,
    GainParams,
    InjectionWindow,
    LocationMap,
    DelayParams,
    DropPolicy,
    NoiseParams,
    PacketLossParams,
    SpikeParams,
    StuckAtParams,
    fault_type_of,
    params_from_json_obj,
    params_to_json_obj,
    parse_location_map,
    validate_test_case,
)


def sensor_catalog(ids=("s1", "s2", "s3", "s4", "s5")) -> ComponentCatalog:
    return ComponentCatalog(
        tuple(CatalogEntry(i, ComponentClass.SENSOR, f"sensor {i}") for i in ids)
    )


def actuator_catalog(ids=("a1", "a2", "a3")) -> ComponentCatalog:
    return ComponentCatalog(
        tuple(CatalogEntry(i, ComponentClass.ACTUATOR, f"actuator {i}") for i in ids)
    )


WINDOW = InjectionWindow(175.0, 375.0)


def delay_fault(tau=0.5) -> ChannelFault:
    return ChannelFault(FaultType.DELAY, DelayParams(tau), WINDOW)


class TestCatalog:
    def test_ids_in_order(self):
        cat = sensor_catalog()
        assert cat.ids == ("s1", "s2", "s3", "s4", "s5")

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            sensor_catalog(("x", "x"))

    def test_empty_id_rejected(self):
        with pytest.raises(ValueError):
            sensor_catalog(("", "y"))

    def test_drop_keeps_order(self):
        cat = sensor_catalog().drop(["s2", "s4"])
        assert cat.ids == ("s1", "s3", "s5")

    def test_drop_unknown_raises(self):
        with pytest.raises(KeyError):
            sensor_catalog().drop(["nope"])

    def test_json_round_trip(self):
        cat = sensor_catalog()
        again = ComponentCatalog.from_json_obj(cat.to_json_obj())
        assert again == cat


class TestFsr:
    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            FunctionalSafetyRequirement(id="x", text="")

    def test_gold_locations_size_bound(self):
        with pytest.raises(ValueError):
            FunctionalSafetyRequirement(id="x", text="t", gold_locations=frozenset({"a", "b", "c"}))
        ok = FunctionalSafetyRequirement(id="x", text="t", gold_locations=frozenset({"a", "b"}))
        assert ok.gold_locations == frozenset({"a", "b"})

    def test_json_round_trip(self):
        fsr = FunctionalSafetyRequirement(
            id="f1", text="hello", gold_class=ComponentClass.SENSOR,
            gold_locations=frozenset({"s1"}),
        )
        assert FunctionalSafetyRequirement.from_json_obj(fsr.to_json_obj()) == fsr


class TestParseLocationMap:
    def test_actuator_example(self):
        cat = actuator_catalog()
        m = parse_location_map('{"a1": 0, "a2": 1, "a3": 1}', cat)
        assert m.active == ("a2", "a3")
        assert m.total == 2

    def test_value_out_of_domain(self):
        cat = sensor_catalog(("s1",))
        with pytest.raises(FormatError):
            parse_location_map('{"s1": 2}', cat)

    def test_missing_keys(self):
        with pytest.raises(FormatError) as err:
            parse_location_map('{"s1": 1}', sensor_catalog())
        assert "missing" in str(err.value)

    def test_unknown_keys(self):
        cat = sensor_catalog(("s1",))
        with pytest.raises(FormatError):
            parse_location_map('{"s1": 1, "zz": 0}', cat)

    def test_bool_rejected(self):
        cat = sensor_catalog(("s1",))
        with pytest.raises(FormatError):
            parse_location_map('{"s1": true}', cat)

    def test_not_an_object(self):
        with pytest.raises(FormatError):
            parse_location_map("[1, 2]", sensor_catalog())

    def test_not_json(self):
        with pytest.raises(FormatError):
            parse_location_map("{nope", sensor_catalog())

    def test_key_order_normalized_to_catalog(self):
        cat = sensor_catalog(("s1", "s2"))
        m = parse_location_map('{"s2": 1, "s1": 0}', cat)
        assert m.keys == ("s1", "s2")

    @given(st.lists(st.sampled_from([0, 1]), min_size=5, max_size=5))
    def test_round_trip(self, values):
        cat = sensor_catalog()
        m = LocationMap.from_items(zip(cat.ids, values))
        again = parse_location_map(m.to_json(), cat)
        assert again == m
        assert all(v in (0, 1) for _, v in again.pairs)


class TestValidateTestCase:
    def test_paper_style_single_sensor_delay(self):
        cat = sensor_catalog()
        tc = FaultTestCase(
            id="tc1",
            source_fsr="f1",
            locations=LocationMap.select(cat, ["s1"]),
            faults=(("s1", delay_fault()),),
        )
        assert validate_test_case(tc, cat).ok

    def test_sum_zero_invalid(self):
        cat = sensor_catalog()
        tc = FaultTestCase(id="tc", source_fsr="f", locations=LocationMap.zeros(cat))
        result = validate_test_case(tc, cat)
        assert not result.ok
        assert any(v.startswith("sum=0") for v in result.violations)

    def test_sum_three_invalid(self):
        cat = sensor_catalog()
        tc = FaultTestCase(
            id="tc",
            source_fsr="f",
            locations=LocationMap.select(cat, ["s1", "s2", "s3"]),
            faults=tuple((s, delay_fault()) for s in ("s1", "s2", "s3")),
        )
        result = validate_test_case(tc, cat)
        assert any("exceeds" in v for v in result.violations)

    def test_gain_on_actuator_inapplicable(self):
        cat = actuator_catalog()
        tc = FaultTestCase(
            id="tc",
            source_fsr="f",
            locations=LocationMap.select(cat, ["a2", "a3"]),
            faults=(
                ("a2", ChannelFault(FaultType.GAIN, GainParams(2.0), WINDOW)),
                ("a3", delay_fault()),
            ),
        )
        result = validate_test_case(tc, cat)
        assert not result.ok
        assert any("inapplicable-fault-type" in v for v in result.violations)

    def test_actuator_subset_applicable(self):
        for ft, params in (
            (FaultType.STUCK_AT, StuckAtParams(0.0)),
            (FaultType.DELAY, DelayParams(0.1)),
            (FaultType.PACKET_LOSS, PacketLossParams(0.5)),
        ):
            assert ft.applicable_to(ComponentClass.ACTUATOR)
        for ft in (FaultType.GAIN, FaultType.OFFSET, FaultType.NOISE, FaultType.DRIFT, FaultType.SPIKE):
            assert not ft.applicable_to(ComponentClass.ACTUATOR)
            assert ft.applicable_to(ComponentClass.SENSOR)

    def test_key_set_mismatch(self):
        cat = sensor_catalog()
        tc = FaultTestCase(
            id="tc", source_fsr="f",
            locations=LocationMap.from_items([("bogus", 1)]),
            faults=(("bogus", delay_fault()),),
        )
        result = validate_test_case(tc, cat)
        assert any("key-set-mismatch" in v for v in result.violations)

    def test_missing_fault_spec(self):
        cat = sensor_catalog()
        tc = FaultTestCase(
            id="tc", source_fsr="f", locations=LocationMap.select(cat, ["s1"]), faults=()
        )
        result = validate_test_case(tc, cat)
        assert any("missing-fault-spec" in v for v in result.violations)

    @settings(max_examples=300)
    @given(
        values=st.lists(st.integers(min_value=-1, max_value=3), min_size=5, max_size=5),
        use_catalog_keys=st.booleans(),
    )
    def test_verdict_matches_direct_predicate(self, values, use_catalog_keys):
        """Validator verdict == independent recomputation of the map predicate."""
        cat = sensor_catalog()
        keys = cat.ids if use_catalog_keys else ("s1", "s2", "s3", "s4", "zz")
        m = LocationMap.from_items(zip(keys, values))
        active = tuple(k for k, v in zip(keys, values) if v == 1)
        tc = FaultTestCase(
            id="tc", source_fsr="f", locations=m,
            faults=tuple((k, delay_fault()) for k in active),
        )
        expected = (
            set(keys) == set(cat.ids)
            and all(v in (0, 1) for v in values)
            and 1 <= sum(v for v in values if v in (0, 1)) <= 2
        )
        assert validate_test_case(tc, cat).ok == expected


class TestWindow:
    def test_bad_window_rejected(self):
        with pytest.raises(ValueError):
            InjectionWindow(5.0, 5.0)
        with pytest.raises(ValueError):
            InjectionWindow(-1.0, 5.0)

    def test_half_open_contains(self):
        w = InjectionWindow(1.0, 2.0)
        assert w.contains(1.0)
        assert not w.contains(2.0)


class TestFaultParams:
    def test_per_type_round_trip(self):
        cases = [
            GainParams(2.0),
            StuckAtParams(5.0),
            DelayParams(0.5),
            NoiseParams(0.1, seed=7),
            PacketLossParams(0.5, seed=3, drop_policy=DropPolicy.HOLD_LAST),
            SpikeParams(4.0, 0.01, seed=1),
        ]
        for params in cases:
            obj = params_to_json_obj(params)
            assert obj["type"] == fault_type_of(params).value
            assert params_from_json_obj(obj) == params

    def test_unknown_keys_rejected(self):
        with pytest.raises(FormatError):
            params_from_json_obj({"type": "delay", "tau_s": 0.5, "bogus": 1})

    def test_unknown_type_rejected(self):
        with pytest.raises(FormatError):
            params_from_json_obj({"type": "wobble"})

    def test_invariants(self):
        with pytest.raises(ValueError):
            DelayParams(-1.0)
        with pytest.raises(ValueError):
            NoiseParams(-0.1)
        with pytest.raises(ValueError):
            PacketLossParams(1.5)
        with pytest.raises(ValueError):
            SpikeParams(1.0, -0.2)

    def test_tc_json_round_trip(self):
        cat = sensor_catalog()
        tc = FaultTestCase(
            id="tc9",
            source_fsr="f9",
            locations=LocationMap.select(cat, ["s2", "s4"]),
            faults=(
                ("s2", ChannelFault(FaultType.NOISE, NoiseParams(0.2, seed=5), WINDOW)),
                ("s4", delay_fault(1.0)),
            ),
        )
        again = FaultTestCase.from_json_obj(json.loads(json.dumps(tc.to_json_obj())))
        assert again == tc

"""Register layouts, truth-table gates, the controller step, and counting.

The controller tests are dual-route: every decision is checked against an
integer-bitmask interpreter (tests/oracles.py) that was written against the
serialized document format, not against the package internals.
"""
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ambqc import control, families, povm
from ambqc.control import Gate, Measure, Output, Region, RegisterLayout
from ambqc.errors import IncompleteModelError, InvalidQubitIndexError, ValidationError


class TestLayout:
    def test_standard_packing(self):
        layout = RegisterLayout.standard(3, 5, 2, alpha_bits=2, workspace=4)
        assert layout.x == Region(0, 3)
        assert layout.y == Region(3, 1)
        assert layout.k == Region(4, 3)  # ceil(log2(5+1))
        assert layout.m == Region(7, 10)
        assert layout.alpha == Region(17, 2)
        assert layout.a == Region(19, 4)
        assert layout.width == 23
        layout.validate(3, 5, 2)

    def test_overlapping_regions_rejected(self):
        layout = RegisterLayout(
            width=8,
            x=Region(0, 1),
            y=Region(1, 1),
            k=Region(2, 2),
            m=Region(3, 3),  # overlaps k
            alpha=Region(6, 1),
            a=Region(7, 1),
        )
        with pytest.raises(ValidationError, match="overlap"):
            layout.validate(1, 3, 1)

    def test_region_outside_width_rejected(self):
        layout = RegisterLayout.standard(0, 2, 1)
        bad = RegisterLayout(
            layout.width,
            x=layout.x,
            y=layout.y,
            k=layout.k,
            m=layout.m,
            alpha=Region(layout.width, 1),
            a=layout.a,
        )
        with pytest.raises(ValidationError):
            bad.validate(0, 2, 1)

    def test_wrong_counter_width_rejected(self):
        layout = RegisterLayout.standard(0, 4, 1)
        with pytest.raises(ValidationError, match="k region"):
            layout.validate(0, 2, 1)  # q=2 needs 2 bits, layout built for q=4


class TestGate:
    def test_validation(self):
        Gate((0,), (1, 0))
        Gate((0, 1, 2), tuple(range(8)))
        with pytest.raises(ValidationError):
            Gate((0, 1, 2, 3), tuple(range(16)))  # too many wires
        with pytest.raises(ValidationError):
            Gate((0, 0), (0, 1, 2, 3))  # repeated wire
        with pytest.raises(ValidationError):
            Gate((0, 1), (0, 1, 2))  # table too short
        with pytest.raises(ValidationError):
            Gate((0,), (2, 0))  # entry outside range

    def test_budget_below_gate_count_rejected(self):
        layout = RegisterLayout.standard(0, 2, 1)
        gates = [Gate((layout.y.offset,), (1, 0))]
        with pytest.raises(ValidationError):
            control.ControlCircuit(layout, gates, 0, 2, gate_budget=0)


class TestParseBits:
    def test_string_and_array(self):
        np.testing.assert_array_equal(control.parse_bits("0110", 4), [0, 1, 1, 0])
        np.testing.assert_array_equal(control.parse_bits([1, 0], 2), [1, 0])

    def test_errors(self):
        with pytest.raises(ValidationError):
            control.parse_bits("01x0", 4)
        with pytest.raises(ValidationError):
            control.parse_bits("01", 3)
        with pytest.raises(ValidationError):
            control.parse_bits([0, 2], 2)

    @given(st.lists(st.integers(0, 1), min_size=0, max_size=24))
    def test_round_trip(self, bits):
        arr = control.parse_bits(bits, len(bits))
        assert list(arr) == bits


class TestRunControl:
    def test_empty_gate_list_outputs_zero(self):
        layout = RegisterLayout.standard(0, 2, 1)
        circuit = control.ControlCircuit(layout, [], 0, 2)
        decision = control.run_control(circuit, "", 2, (0, 0))
        assert decision == Output(False)

    def test_not_on_y_outputs_one(self):
        layout = RegisterLayout.standard(0, 2, 1)
        circuit = control.ControlCircuit(layout, [Gate((layout.y.offset,), (1, 0))], 0, 2)
        assert control.run_control(circuit, "", 2, (1, 0)) == Output(True)

    def test_sweep_controller_decisions(self):
        """q=3 sweep: Measure(1,0), Measure(2,0), Measure(3,0), then parity."""
        instance = families.sweep_instance(3)
        assert instance.run_control(0, ()) == Measure(1, 0)
        assert instance.run_control(1, (0,)) == Measure(2, 0)
        assert instance.run_control(2, (0, 1)) == Measure(3, 0)
        # even-weight outcome records accept
        assert instance.run_control(3, (0, 0, 0)) == Output(True)
        assert instance.run_control(3, (1, 0, 0)) == Output(False)
        assert instance.run_control(3, (1, 1, 0)) == Output(True)

    def test_sweep_matches_bit_level_oracle(self):
        """Every reachable (count, outcomes) pair agrees with the int simulator."""
        instance = families.sweep_instance(3)
        doc = control.instance_to_json(instance)
        sim = oracles.IntRegisterSim(doc)
        for count in range(4):
            for packed in range(1 << count):
                outcomes = tuple((packed >> i) & 1 for i in range(count))
                got = instance.run_control(count, outcomes)
                kind, *rest = sim.decision(count, outcomes)
                if kind == "output":
                    assert got == Output(bool(rest[0]))
                else:
                    assert got == Measure(rest[0], rest[1])

    def test_bad_counter_value_raises(self):
        # A gate that writes k = 0 makes the selected qubit undecodable.
        layout = RegisterLayout.standard(0, 2, 1)
        k_wires = tuple(layout.k.wires())
        zero_k = Gate(k_wires, tuple(0 for _ in range(1 << len(k_wires))))
        circuit = control.ControlCircuit(layout, [zero_k], 0, 2)
        with pytest.raises(InvalidQubitIndexError):
            control.run_control(circuit, "", 0, ())

    def test_count_and_outcome_validation(self):
        instance = families.sweep_instance(2)
        with pytest.raises(ValidationError):
            instance.run_control(3, (0, 0, 0))
        with pytest.raises(ValidationError):
            instance.run_control(1, ())  # count != len(outcomes)
        with pytest.raises(ValidationError):
            instance.run_control(1, (2,))  # outcome does not fit in 1 bit


class TestTask:
    def test_kinds(self):
        control.Task("decision")
        control.Task("sampling", 3)
        with pytest.raises(ValidationError):
            control.Task("optimization")
        with pytest.raises(ValidationError):
            control.Task("sampling")  # t >= 1 required
        with pytest.raises(ValidationError):
            control.Task("decision", 2)


class TestCompleteness:
    def test_sweep_complete(self):
        report = control.verify_completeness(families.sweep_instance(3))
        assert report.complete
        assert report.histories_checked == 8
        assert report.witness is None

    def test_always_qubit_one_incomplete(self):
        report = control.verify_completeness(families.incomplete_instance(3))
        assert not report.complete
        assert report.witness is not None
        # the witness ends with the doubly selected qubit
        assert report.witness[-1][0] == 1
        with pytest.raises(IncompleteModelError):
            control.require_complete(families.incomplete_instance(3))

    def test_history_cap(self):
        trine = povm.PovmTable([povm.builtin("trine")])
        instance = families.sweep_instance(4, trine)
        with pytest.raises(ValidationError):
            control.verify_completeness(instance, max_histories=80)  # 3^4 = 81

    def test_report_matches_trajectory_flags(self, rng):
        """Static completeness vs the runtime double-measure flag, 20 circuits."""
        from ambqc import engine, statevector as sv

        q = 4
        for trial in range(20):
            instance = families.random_instance(q, 12, rng)
            report = control.verify_completeness(instance)
            assert report.complete  # complete by construction
            state = sv.PureState.from_amplitudes(
                rng.standard_normal(16) + 1j * rng.standard_normal(16), normalize=True
            )
            for _ in range(20):
                engine.run_trajectory(instance, state, rng)  # must never raise

    def test_incomplete_witness_replays(self):
        """The witness history's final step really does reselect a qubit."""
        instance = families.incomplete_instance(3)
        report = control.verify_completeness(instance)
        steps = report.witness
        outcomes = tuple(s[2] for s in steps[:-1])
        seen = set()
        for i in range(len(outcomes) + 1):
            decision = instance.run_control(i, outcomes[:i])
            if i == len(outcomes):
                assert decision.qubit in seen
            else:
                seen.add(decision.qubit)


class TestCircuitCount:
    def test_zero_budget(self):
        exact, relaxed = control.circuit_count_log(10, 0)
        assert exact == 0.0
        np.testing.assert_allclose(relaxed, -math.log(6.0), atol=1e-15)

    def test_w5_v1_exact_count(self):
        # 8^8 tables times C(5,3) = 10 wire triples = 167,772,160 programs
        exact, _ = control.circuit_count_log(5, 1)
        np.testing.assert_allclose(exact, math.log(167772160), rtol=1e-14)
        oracle_exact, _ = oracles.mp_circuit_counts(5, 1)
        np.testing.assert_allclose(exact, float(oracle_exact), rtol=1e-13)

    def test_w100_v1000_relaxed(self):
        _, relaxed = control.circuit_count_log(100, 1000)
        expected = 3000.0 * (8.0 * math.log(8.0) + math.log(100.0)) - math.log(6.0)
        np.testing.assert_allclose(relaxed, expected, rtol=1e-13)
        _, oracle_relaxed = oracles.mp_circuit_counts(100, 1000)
        np.testing.assert_allclose(relaxed, float(oracle_relaxed), rtol=1e-13)

    @given(st.integers(3, 200), st.integers(1, 50))
    @settings(max_examples=60, deadline=None)
    def test_relaxed_dominates_exact(self, width, gates):
        exact, relaxed = control.circuit_count_log(width, gates)
        assert exact <= relaxed + 1e-9

    def test_errors(self):
        with pytest.raises(ValidationError):
            control.circuit_count_log(10, -1)
        with pytest.raises(ValidationError):
            control.circuit_count_log(2, 1)  # cannot host a 3-wire gate


class TestSerialization:
    def test_round_trip_identity(self, parity_path):
        text = parity_path.read_text()
        instance = control.parse_instance(text)
        assert control.serialize_instance(instance) == text

    def test_canonical_form(self):
        instance = families.sweep_instance(2)
        text = control.serialize_instance(instance)
        doc = json.loads(text)
        assert text == json.dumps(doc, indent=2, sort_keys=True) + "\n"
        back = control.instance_from_json(doc)
        assert control.serialize_instance(back) == text

    def test_version_gate(self):
        doc = control.instance_to_json(families.sweep_instance(2))
        doc["version"] = "ambqc-instance/99"
        with pytest.raises(ValidationError, match="version"):
            control.instance_from_json(doc)

    def test_overlapping_layout_rejected(self):
        doc = control.instance_to_json(families.sweep_instance(2))
        doc["layout"]["m"] = doc["layout"]["k"]
        with pytest.raises(ValidationError):
            control.instance_from_json(doc)

    def test_outcome_bits_mismatch_rejected(self):
        doc = control.instance_to_json(families.sweep_instance(2))
        doc["outcome_bits"] = 2
        with pytest.raises(ValidationError):
            control.instance_from_json(doc)

    def test_missing_keys_rejected(self):
        base = control.instance_to_json(families.sweep_instance(2))
        for key in ("q", "w", "layout", "gates", "povm_table"):
            doc = dict(base)
            del doc[key]
            with pytest.raises(ValidationError):
                control.instance_from_json(doc)

    def test_truncation_fuzz_never_crashes(self, parity_path):
        """Every prefix of a valid document fails with a structured error."""
        text = parity_path.read_text()
        for cut in range(0, len(text) - 1, 23):
            with pytest.raises(ValidationError):
                control.parse_instance(text[:cut])

    def test_non_object_rejected(self):
        with pytest.raises(ValidationError):
            control.instance_from_json([1, 2, 3])
        with pytest.raises(ValidationError):
            control.parse_instance("[]")

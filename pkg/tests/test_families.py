import numpy as np
import pytest

from ambqc import control, engine, families, povm
from ambqc.control import Measure, Output
from ambqc.errors import ValidationError
from ambqc.statevector import PureState


def test_sweep_any_q():
    for q in range(1, 9):
        instance = families.sweep_instance(q)
        assert instance.num_qubits == q
        report = control.verify_completeness(instance)
        assert report.complete


def test_sweep_parity_accepts_all_zero_history():
    instance = families.sweep_instance(4)
    zeros = PureState.computational_basis(4, 0)
    history = engine.run_trajectory(instance, zeros, np.random.default_rng(0))
    assert history.steps == ((1, 0, 0), (2, 0, 0), (3, 0, 0), (4, 0, 0))
    assert history.output == 1
    assert history.probability == 1.0


def test_sweep_accept_one_and_zero():
    for accept, expected in (("one", 1.0), ("zero", 0.0)):
        instance = families.sweep_instance(3, accept=accept)
        enum = engine.enumerate_histories(instance, engine.MIXED)
        assert enum.acceptance == expected
    with pytest.raises(ValidationError):
        families.sweep_instance(3, accept="sometimes")


def test_ordered_sweep_measurement_order():
    order = (3, 1, 2)
    instance = families.ordered_sweep_instance(order)
    outcomes = ()
    for count, qubit in enumerate(order):
        decision = instance.run_control(count, outcomes)
        assert decision == Measure(qubit, 0)
        outcomes += (0,)
    assert isinstance(instance.run_control(3, outcomes), Output)
    assert control.verify_completeness(instance).complete


def test_ordered_sweep_validation():
    with pytest.raises(ValidationError):
        families.ordered_sweep_instance((1, 1, 2))
    with pytest.raises(ValidationError):
        families.ordered_sweep_instance((2, 3))
    with pytest.raises(ValidationError):
        families.ordered_sweep_instance(tuple(range(1, 9)))  # q=8 needs 4 k bits


def test_random_instances_complete(rng):
    for _ in range(20):
        q = int(rng.integers(2, 6))
        chaff = int(rng.integers(0, 16))
        instance = families.random_instance(q, chaff, rng)
        assert control.verify_completeness(instance).complete
        assert instance.circuit.gate_budget == len(instance.circuit.gates)


def test_random_instance_input_bits(rng):
    instance = families.random_instance(3, 4, rng, num_inputs=5)
    assert len(instance.input_x) == 5
    assert set(instance.input_x) <= {"0", "1"}


def test_random_instance_respects_povm_table(rng):
    trine = povm.PovmTable([povm.builtin("trine")])
    instance = families.random_instance(3, 6, rng, trine)
    assert instance.povm_table.max_arity == 3
    assert control.verify_completeness(instance).complete


def test_incomplete_instance_reselects_first_qubit():
    instance = families.incomplete_instance(3)
    assert instance.run_control(0, ()) == Measure(1, 0)
    assert instance.run_control(1, (0,)) == Measure(1, 0)
    assert not control.verify_completeness(instance).complete


class TestBundledFiles:
    def test_parity_sweep(self, parity_instance):
        assert parity_instance.num_qubits == 4
        assert parity_instance.task.kind == "decision"
        assert control.verify_completeness(parity_instance).complete

    def test_trine_sweep(self, trine_instance):
        assert trine_instance.num_qubits == 3
        assert trine_instance.povm_table.max_arity == 3
        assert control.verify_completeness(trine_instance).complete

    def test_sampling_sweep(self, sampling_path):
        instance = control.parse_instance(sampling_path.read_text())
        assert instance.task.kind == "sampling"
        assert instance.task.t == 2
        assert control.verify_completeness(instance).complete

    def test_incomplete_bundle(self, incomplete_path):
        instance = control.parse_instance(incomplete_path.read_text())
        assert not control.verify_completeness(instance).complete

    def test_bundled_path_resolves(self):
        path = families.bundled_path("parity_sweep_q4.json")
        assert path.is_file()

"""Simulator and test bench for adaptively measured random resource states.

Submodules:

* statevector: dense pure states, single-qubit operator primitives
* povm: measurement families, Kraus conventions, the POVM table
* control: register layouts, gate programs, instances and their JSON form
* families: instance generators (sweeps, random complete circuits)
* engine: trajectories, history enumeration, accepting operators
* randstates: Haar and low-Schmidt-rank state sampling, entanglement
* bounds: closed-form tail bounds in log space
* experiments: seeded tail experiments and report files
"""
from ._version import __version__
from ._backend import backend_name
from .errors import (
    AmbqcError,
    IncompleteModelError,
    InvalidPovmIndexError,
    InvalidQubitIndexError,
    ModelError,
    ValidationError,
    ZeroProbabilityError,
)
from .statevector import PureState
from .povm import Povm, PovmTable
from .control import AmbqcInstance, ControlCircuit, Gate, RegisterLayout, Task
from .engine import MIXED, History

__all__ = [
    "__version__",
    "backend_name",
    "AmbqcError",
    "ValidationError",
    "ModelError",
    "IncompleteModelError",
    "InvalidQubitIndexError",
    "InvalidPovmIndexError",
    "ZeroProbabilityError",
    "PureState",
    "Povm",
    "PovmTable",
    "AmbqcInstance",
    "ControlCircuit",
    "Gate",
    "RegisterLayout",
    "Task",
    "MIXED",
    "History",
]

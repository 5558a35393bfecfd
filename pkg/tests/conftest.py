import json

import numpy as np
import pytest

from ambqc import control, families


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def parity_path():
    return families.bundled_path("parity_sweep_q4.json")


@pytest.fixture(scope="session")
def trine_path():
    return families.bundled_path("trine_sweep_q3.json")


@pytest.fixture(scope="session")
def sampling_path():
    return families.bundled_path("sampling_sweep_q4_t2.json")


@pytest.fixture(scope="session")
def incomplete_path():
    return families.bundled_path("incomplete_q3.json")


@pytest.fixture(scope="session")
def parity_instance(parity_path):
    return control.parse_instance(parity_path.read_text())


@pytest.fixture(scope="session")
def trine_instance(trine_path):
    return control.parse_instance(trine_path.read_text())


def load_doc(path):
    return json.loads(path.read_text())

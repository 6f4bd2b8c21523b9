import copy
import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from moegf import build_moegf, load_instance, parse_instance  # noqa: E402

DATA = Path(__file__).resolve().parents[1] / "src" / "moegf" / "data"


def bundled_doc(name):
    return json.loads((DATA / f"{name}.json").read_text())


@pytest.fixture(scope="session")
def nano_doc():
    return bundled_doc("nano")


@pytest.fixture(scope="session")
def nano():
    return load_instance("nano")


@pytest.fixture(scope="session")
def nano_model(nano):
    return build_moegf(nano)


@pytest.fixture(scope="session")
def pair_model():
    return build_moegf(load_instance("pair"))


@pytest.fixture(scope="session")
def case_a_model():
    return build_moegf(load_instance("case_a"))


@pytest.fixture
def doc_copy(nano_doc):
    return copy.deepcopy(nano_doc)


def regulator_doc():
    """nano with a pressure regulator added downstream of the pipeline."""
    doc = bundled_doc("nano")
    doc["name"] = "nano-reg"
    gas = doc["gas"]
    gas["nodes"].append({"id": "n4", "p_min_pa": 3.0e6, "p_max_pa": 7.0e6, "demand_m3s": 2.0})
    gas["regulators"] = [{"id": "r1", "from": "n3", "to": "n4", "flow_max_m3s": 50.0,
                          "ratio_min": 0.5, "ratio_max": 1.0}]
    return doc


@pytest.fixture
def regulator_instance():
    return parse_instance(regulator_doc())


def interior_point(model, rng):
    """Random point strictly inside the variable box."""
    V = model.space
    return V.lb + (0.05 + 0.9 * rng.random(V.n)) * (V.ub - V.lb)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in sorted(lines):
            terminalreporter.write_line(ln)

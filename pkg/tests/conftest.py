import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ancer.data import generate_radial_dataset  # noqa: E402
from ancer.nn_core import Classifier, Layer, train_classifier  # noqa: E402

# criterion id -> (passed, detail); filled by test_acceptance, printed at the end
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def toy_train():
    return generate_radial_dataset(1000, 0.0, 1)


@pytest.fixture(scope="session")
def toy_model(toy_train):
    """The radial toy base classifier: [2, 32, 32, 2], 200 epochs, seed 0."""
    return train_classifier(toy_train, [2, 32, 32, 2], lr=0.05, epochs=200, batch=32, seed=0)


@pytest.fixture
def linear_model():
    """Single identity layer, W = I, b = 0, two classes."""
    return Classifier((Layer(np.eye(2), np.zeros(2), "identity"),))


def constant_model(dim=2, classes=3, winner=2):
    b = np.zeros(classes)
    b[winner] = 5.0
    return Classifier((Layer(np.zeros((classes, dim)), b, "identity"),))


def uniform_model(dim=2, classes=3):
    """Input-independent classifier with equal scores for every class."""
    return Classifier((Layer(np.zeros((classes, dim)), np.zeros(classes), "identity"),))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("abc")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")

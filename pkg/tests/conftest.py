import json
from pathlib import Path

import pytest

from droopspec import parse_network

NETWORKS = Path(__file__).parents[1] / "networks"

# Reference four-inverter chain: published spectrum, eigenvector, threshold.
REFERENCE_MU = (9.68, 110.19, 215.23)
REFERENCE_EIGENVECTOR = (-0.018, 0.056, -0.725, 0.687)
REFERENCE_MU_CR = 195.0


@pytest.fixture(scope="session")
def kundur4_text() -> str:
    return (NETWORKS / "kundur4.json").read_text()


@pytest.fixture(scope="session")
def kundur4(kundur4_text):
    return parse_network(kundur4_text)


def kundur4_doc(**overrides) -> dict:
    """Editable copy of the four-inverter document."""
    doc = json.loads((NETWORKS / "kundur4.json").read_text())
    doc.update(overrides)
    return doc

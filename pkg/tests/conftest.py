import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from paint.outcomes import ObjectiveSpec, OutcomeSet, parse_outcome_set

TABLE1_CSV = """\
"nitrogen,gN/m3,min","aeration,kW,min","chemicals,g/m3,min","sludge,kg/d,min","biogas,m3/d,max"
16.67,412.2,21.89,15060,9731
17.13,416.3,27.86,15250,9935
17.30,419.0,16.27,14870,9560
17.74,414.6,14.41,14910,9571
16.80,414.1,18.24,14960,9626
17.10,411.6,15.10,14860,9529
"""


@pytest.fixture(scope="session")
def table1() -> OutcomeSet:
    """The six wastewater outcomes, canonicalized (biogas negated)."""
    return parse_outcome_set(TABLE1_CSV, "csv")


@pytest.fixture
def front2d_collinear() -> OutcomeSet:
    return OutcomeSet(
        specs=[ObjectiveSpec("a"), ObjectiveSpec("b")],
        points=np.array([[0.0, 1.0], [0.5, 0.5], [1.0, 0.0]]),
    )


@pytest.fixture
def front2d() -> OutcomeSet:
    return OutcomeSet(
        specs=[ObjectiveSpec("a"), ObjectiveSpec("b")],
        points=np.array([[0.0, 1.0], [0.3, 0.4], [1.0, 0.0]]),
    )

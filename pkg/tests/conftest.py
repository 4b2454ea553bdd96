import random
from pathlib import Path

import pytest

from spandebug.lang import parse
from spandebug.runtime import TraceRecord
from spandebug.session import Session

REPO = Path(__file__).resolve().parent.parent
PROGRAMS = REPO / "programs"
SPECS = REPO / "specs"

MAXSUB = PROGRAMS / "max_subarray_sum.c"
MAXSUB_FIXED = PROGRAMS / "max_subarray_sum_fixed.c"
OBSERVE = SPECS / "observe.rq"
OBSERVE_LOCALMAX = SPECS / "observe_localmax.rq"

# The running example's input and the localMax sequence it produces.
SAMPLE_INPUT = [3, -5, 2, 1, 1, -6]
LOCALMAX_SEQUENCE = [3, -2, 2, 3, 4, -2]


@pytest.fixture
def maxsub_unit():
    return parse(MAXSUB.read_text())


@pytest.fixture
def session():
    return Session(base_dir=str(REPO))


@pytest.fixture
def ran_session(session):
    session.execute(f"load({MAXSUB})")
    session.execute(f"spec({OBSERVE})")
    session.execute("run(maxSubArraySum, [3, -5, 2, 1, 1, -6], 6)")
    return session


def random_records(rng: random.Random, max_records: int = 200,
                   max_vars: int = 5) -> list:
    """A synthetic timestamp-ordered trace over a few variables/statements."""
    n_vars = rng.randint(1, max_vars)
    variables = [f"http://example.org/programs/main/v{i}" for i in range(n_vars)]
    statements = [f"http://example.org/programs/main/ln{i}" for i in range(1, 4)]
    records = []
    t = 0
    for _ in range(rng.randint(0, max_records)):
        t += rng.randint(1, 3)
        records.append(TraceRecord(
            v_id=rng.choice(variables),
            s_id=rng.choice(statements),
            val=rng.randint(-50, 50),
            timestamp=t,
        ))
    return records

import csv

import pytest

from sric.order_stats import OrderStatProvider

from helpers import DATA


def load_reference_expectations():
    """Three-decimal published expectations: {N: [E_1, ..., E_30]}."""
    with open(DATA / "reference_expectations.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = [c for c in rows[0] if c != "r"]
    return {int(c[1:]): [float(row[c]) for row in rows] for c in cols}


@pytest.fixture(scope="session")
def provider():
    return OrderStatProvider(df=1)


@pytest.fixture(scope="session")
def reference_expectations():
    return load_reference_expectations()

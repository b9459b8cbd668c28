import json

import numpy as np
import pytest

from gendersignal.perform.cnn import HyperParams


def review_line(reviewer="A1", asin="P1", name="Andrew", rating=5, helpful=(4, 9),
                text="Works great.", t=16000 * 86400, **extra):
    obj = {"reviewerID": reviewer, "reviewerName": name, "asin": asin, "overall": rating,
           "helpful": list(helpful), "reviewText": text, "unixReviewTime": t}
    obj.update(extra)
    return json.dumps(obj)


def product_line(asin="P1", categories=(("Electronics", "Computers"),)):
    return json.dumps({"asin": asin, "categories": [list(c) for c in categories]})


@pytest.fixture
def tiny_hp():
    return HyperParams(n_filters=8, hidden=16, window=64, pool_width=2, dtype="float64",
                       keep_prob=0.8, batch_size=4, epochs=1, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

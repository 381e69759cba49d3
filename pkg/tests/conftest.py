from __future__ import annotations

from importlib import resources

import pytest

from nerscope.attributes import Featurizer, build_training_stats
from nerscope.corpus import ColumnSpec, read_conll

WORKED_SPEC = ColumnSpec(0, 1, (("sysA", 2), ("sysB", 3)))


def data_path(name: str):
    return resources.files("nerscope") / "data" / name


@pytest.fixture(scope="session")
def worked():
    train = read_conll(data_path("worked_train.conll"), ColumnSpec(0, 1), "train")
    test = read_conll(data_path("worked_test.conll"), WORKED_SPEC)
    stats = build_training_stats(train)
    return train, test, stats, Featurizer(test, stats)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])

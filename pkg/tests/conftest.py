import numpy as np
import pytest

from eigendroid.vectors import BENIGN, MALWARE, Dataset

_acceptance = []


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("acceptance")
        if m is not None:
            item.user_properties.append(("criterion", m.args[0] if m.args else item.name))


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        _acceptance.append((props["criterion"], report.outcome, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, duration in _acceptance:
        tag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{tag}] {name} ({duration:.1f}s)")


def random_dataset(rng, n_features, n_samples, p=0.5, names=None):
    """Random labelled binary dataset with both classes and no all-equal rows."""
    while True:
        x = (rng.random((n_samples, n_features)) < p).astype(np.uint8)
        y = rng.random(n_samples) < 0.5
        y[0], y[1] = True, False
        if not (x == x[0]).all():
            break
    labels = [MALWARE if v else BENIGN for v in y]
    names = names or [f"f{i}" for i in range(n_features)]
    return Dataset(names, x, [f"app{i}" for i in range(n_samples)], labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

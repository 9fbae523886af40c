import numpy as np
import pytest

from desmooth.data import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dataset(rng, n=20, lo=0.0, hi=1.0, noise=0.1, fn=np.exp):
    xs = np.sort(rng.uniform(lo, hi, n))
    return Dataset(xs, fn(xs) + noise * rng.standard_normal(n))


# ---------------------------------------------------------------------------
# acceptance summary: one pass/fail line per criterion

_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): test belongs to acceptance criterion n")
    config.stash[_ACCEPTANCE] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    entry = item.config.stash[_ACCEPTANCE].setdefault(marker.args[0], {"passed": 0, "failed": []})
    if report.passed:
        entry["passed"] += 1
    elif not report.skipped:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        entry = results[n]
        total = entry["passed"] + len(entry["failed"])
        status = "PASS" if not entry["failed"] else "FAIL"
        line = f"criterion {n:>2}: {status}  ({entry['passed']}/{total} checks passed)"
        if entry["failed"]:
            shown = ", ".join(entry["failed"][:6]) + (" ..." if len(entry["failed"]) > 6 else "")
            line += f"  failing: {shown}"
        terminalreporter.write_line(line)

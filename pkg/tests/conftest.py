import pytest

from pdprox import baselines, solvers

# Every trace record produced by a solver run in the session, for the weak-duality sweep.
RECORDS = []
# Criterion id -> (passed, detail) for the summary printed at the end.
CRITERIA = {}

_orig_record = solvers._Recorder.record
_orig_baseline_record = baselines._record


def _collecting_record(self, *args, **kwargs):
    rec = _orig_record(self, *args, **kwargs)
    RECORDS.append(rec)
    return rec


def _collecting_baseline_record(*args, **kwargs):
    rec = _orig_baseline_record(*args, **kwargs)
    RECORDS.append(rec)
    return rec


solvers._Recorder.record = _collecting_record
baselines._record = _collecting_baseline_record


def pytest_collection_modifyitems(session, config, items):
    # The weak-duality sweep inspects records from every other test, so it runs last.
    last = [it for it in items if "sweep_last" in it.keywords]
    rest = [it for it in items if "sweep_last" not in it.keywords]
    items[:] = rest + last


def pytest_configure(config):
    config.addinivalue_line("markers", "sweep_last: run after every other test")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA):
        ok, detail = CRITERIA[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def report():
    """``report(k, ok, detail)`` records a criterion outcome for the summary."""

    def _report(key, ok, detail):
        CRITERIA[key] = (bool(ok), detail)

    return _report

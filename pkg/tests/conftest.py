import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_acceptance = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): exit criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        _acceptance.append((marker.args[0], report.passed, report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, dur in _acceptance:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  ({dur:.1f}s)")


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    from rvos_tta.fixtures import make_fixture
    root = tmp_path_factory.mktemp("fixture")
    make_fixture(root)
    return root

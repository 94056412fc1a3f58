import pytest

# criterion id -> (description, passed); filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_addoption(parser):
    parser.addoption("--skip-slow", action="store_true",
                     help="skip tests marked slow (they run by default)")


def pytest_collection_modifyitems(config, items):
    if not config.getoption("--skip-slow"):
        return
    skip = pytest.mark.skip(reason="--skip-slow given")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        desc, ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:>2}: {'PASS' if ok else 'FAIL'}  {desc}  [{detail}]")

import pytest

from klss.games import make_game


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = (sys.modules.get("test_acceptance")
           or sys.modules.get("tests.test_acceptance"))
    if mod is not None and mod.VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def kuhn():
    return make_game("kuhn")


@pytest.fixture(scope="session")
def fig1():
    return make_game("fig1")


@pytest.fixture(scope="session")
def mp10():
    return make_game("mp-10")

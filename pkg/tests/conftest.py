import pytest

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_record():
    """Collect one pass/fail line per acceptance criterion; the lines are
    echoed live and repeated in the terminal summary."""

    def record(number, description, passed, detail=""):
        line = "criterion %2d %-24s %s%s" % (
            number,
            description,
            "PASS" if passed else "FAIL",
            ("  [%s]" % detail) if detail else "",
        )
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

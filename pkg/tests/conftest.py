import oracles


def pytest_terminal_summary(terminalreporter):
    if oracles.CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(oracles.CRITERIA):
            terminalreporter.write_line(oracles.CRITERIA[n])

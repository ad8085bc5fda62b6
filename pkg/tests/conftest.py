import criteria


def pytest_terminal_summary(terminalreporter):
    if not criteria.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(criteria.RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(line)

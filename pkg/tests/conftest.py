def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance criterion lines at the end of the run."""
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])

def pytest_terminal_summary(terminalreporter):
    try:
        from tests import test_acceptance as acc
    except ImportError:
        try:
            import test_acceptance as acc
        except ImportError:
            return
    if acc.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acc.report_lines():
            terminalreporter.write_line(line)

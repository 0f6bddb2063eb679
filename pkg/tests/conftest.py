import os

os.environ.setdefault("YMFLOW_THREADS", "1")
os.environ.setdefault("MPLBACKEND", "Agg")

# acceptance results, filled by test_acceptance and echoed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)

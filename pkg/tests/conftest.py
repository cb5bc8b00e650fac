import pytest

# (number, label, ok, detail) tuples recorded by the acceptance tests;
# echoed as one PASS/FAIL line each at the end of the run
ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion():
    def record(num: int, label: str, ok: bool, detail: str = ""):
        ACCEPTANCE_RESULTS.append((num, label, bool(ok), detail))
        assert ok, f"criterion {num} ({label}): {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, label, ok, detail in sorted(ACCEPTANCE_RESULTS):
        word = "PASS" if ok else "FAIL"
        line = f"{word} criterion {num}: {label}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)

ADAPTER_RESULTS: list[tuple[str, bool]] = []


def record_adapter_criterion(name: str, passed: bool) -> None:
    ADAPTER_RESULTS.append((name, passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ADAPTER_RESULTS:
        return
    terminalreporter.section("adapter acceptance criteria")
    for name, passed in ADAPTER_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}: {name}")

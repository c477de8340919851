"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance" not in rep.nodeid:
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                lines.append((props["criterion"], outcome.upper()[:4], props.get("detail", "")))
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion, status, detail in sorted(lines, key=lambda t: (int(t[0].rstrip("ab")), t[0])):
        terminalreporter.write_line(f"{status} criterion {criterion}: {detail}")

"""Summary lines for the acceptance suite: one PASS/FAIL line per criterion."""

_criteria = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" not in report.nodeid:
        return
    if report.when == "call" or report.outcome != "passed":
        props = dict(report.user_properties)
        _criteria[report.nodeid] = (report.outcome, props)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for nodeid, (outcome, props) in sorted(_criteria.items()):
        label = props.get("criterion", nodeid.split("::")[-1])
        status = {"passed": "PASS", "skipped": "SKIP"}.get(outcome, "FAIL")
        detail = props.get("detail", "")
        tr.write_line(f"{status}  {label}" + (f"  ({detail})" if detail else ""))
        if "soft" in props:
            tr.write_line(f"      soft check: {props['soft']}")

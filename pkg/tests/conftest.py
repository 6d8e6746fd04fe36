"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

_results: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    num, text = mark.args
    entry = _results.setdefault(num, {"text": text, "ok": True, "detail": [], "notes": []})
    if rep.when == "call":
        entry["notes"].extend(f"{k}={v}" for k, v in rep.user_properties)
    if rep.failed:
        entry["ok"] = False
        entry["detail"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_results):
        r = _results[num]
        status = "PASS" if r["ok"] else "FAIL"
        line = f"criterion {num:>2}: {status}  {r['text']}"
        if r["detail"]:
            line += f"  [failed: {', '.join(r['detail'])}]"
        tr.write_line(line)
        for note in r["notes"]:
            tr.write_line(f"               {note}")

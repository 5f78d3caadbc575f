import re
import sys
from collections import defaultdict
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "gradient fidelity (10 random blocks vs central differences)",
    2: "oracle equivalence (loop convs; two-route fusion)",
    3: "complexity reproduction (published figures; exact enumerations)",
    4: "architecture shape contract (stage ladders, widths)",
    5: "structural invariants",
    6: "learning smoke test (95% within 300 steps; bitwise replay)",
    7: "ablation sweep machinery",
}

_results: dict[int, list] = defaultdict(list)


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    m = re.search(r"test_c(\d)_", report.nodeid)
    if m:
        _results[int(m.group(1))].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(CRITERIA):
        outcomes = _results.get(cid)
        if not outcomes:
            continue
        failed = outcomes.count("failed")
        status = "PASS" if failed == 0 else "FAIL"
        detail = f"{len(outcomes) - failed}/{len(outcomes)} checks"
        terminalreporter.write_line(f"[C{cid}] {status} ({detail}) {CRITERIA[cid]}")

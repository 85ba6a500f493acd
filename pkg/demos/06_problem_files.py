"""
Problem files and the command line
==================================

Problems travel as JSON. The same reports are produced by
``sturmflow index problem.json`` and by the library calls below.
"""

import json
import tempfile
from pathlib import Path

from sturmflow.cli_report import ProblemFile, index_report, run, save_problem, serialize_problem
from sturmflow.corpus import p2

print(json.dumps(serialize_problem(p2()))[:160], "...")

report = index_report(ProblemFile(p2()))
print(report.to_text())

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "p2.json"
    save_problem(p2(), path)
    status = run(["instants", str(path)])
    print("exit status:", status)

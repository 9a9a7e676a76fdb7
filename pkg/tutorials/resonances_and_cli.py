"""
Resonances and the command line
===============================

For general phase-space perturbations every integer relation k . E = 0 is a
potential small divisor.  Expectation-value perturbations only contain the
modes e_m - e_n, so for them non-degeneracy is enough.

The sample problem files ship with the package; the same steps are
available as ``vvhori solve|verify|resonances|sweep``.
"""
import json
import math
from importlib import resources

from vvhori import cli
from vvhori.classical import resonance_scan

for e0, l in (([1, 2, 3], 3), ([1, 2], 3), ([1, math.sqrt(2)], 6)):
    scan = resonance_scan(e0, l)
    print(e0, "->", [r.k for r in scan] or "none", "| mode-difference:", scan.mode_difference)

problems = resources.files("vvhori") / "problems"
two_level = str(problems / "two_level.json")

# equivalent to: vvhori solve two_level.json --format csv
p, epsilons = cli.load_problem(two_level)
report = cli.build_report(p, epsilons)
print(cli.rows_to_csv(report["rows"][:3], cli.CSV_COLUMNS))

# the JSON report keeps 17 significant digits, so it parses back exactly
text = cli.dumps(report)
assert json.loads(text)["rows"][0]["E_exact"] == report["rows"][0]["E_exact"]

cli.main(["resonances", str(problems / "three_level.json"), "--l", "3"])
cli.main(["sweep", two_level, "--eps-grid", "1e-1:1e-3:3", "--order", "2"])

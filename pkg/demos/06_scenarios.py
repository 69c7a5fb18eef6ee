"""The scenario runner behind the ``amperturb run`` command.

Equivalent shell call:  amperturb run counterexample-5-3 --out out --format json,csv
"""
import tempfile

from amperturb.scenarios import build_scenario, emit_report, run_scenario

report = run_scenario(build_scenario("counterexample-5-3"))
print("is_positive(h)        :", report["positivity"]["is_positive_h"])
print("R(0)B positive (basis):", report["positivity"]["RB_positive_on_basis"])
for name, check in report["checks"].items():
    print(f"  {name:28s} {'pass' if check['passed'] else 'FAIL'}")

with tempfile.TemporaryDirectory() as out:
    for path in emit_report(report, ["json", "csv"], out):
        print("wrote", path.name)

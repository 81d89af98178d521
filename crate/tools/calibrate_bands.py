"""Pins the ratio-band regression fixture from a calibration run.

Runs `primesums compute` and `primesums report` to x = 1e6 and x = 1e8 with
default settings and writes the bands (taken over [1e3, x]) to
crates/report/tests/fixtures/bands_1e3_<x>.csv. Rerun only when a change to
the numerics is intended; the tests compare against these files.
"""
import csv
import json
import pathlib
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "crates/report/tests/fixtures"


def main():
    subprocess.run(["cargo", "build", "--release", "-p", "prime-sums-report"], cwd=ROOT, check=True)
    exe = ROOT / "target/release/primesums"
    for x_max, tag in ((1_000_000, "1e6"), (100_000_000, "1e8")):
        with tempfile.TemporaryDirectory() as out:
            for cmd in ("compute", "report"):
                subprocess.run([exe, cmd, "--x-max", str(x_max), "--out", out], check=True)
            bundle = json.loads(pathlib.Path(out, "report.json").read_text())
        fixture = FIXTURES / f"bands_1e3_{tag}.csv"
        with fixture.open("w", newline="") as f:
            f.write(f"# calibration: primesums report --x-max {x_max} (default grid), tools/calibrate_bands.py\n")
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["series", "x_min", "x_max", "inf", "inf_at", "sup", "sup_at"])
            for b in bundle["bands"]:
                w.writerow([b["series"]] + [repr(float(b[k])) for k in ("x_min", "x_max", "inf", "inf_at", "sup", "sup_at")])
        print(f"wrote {fixture}", file=sys.stderr)

if __name__ == "__main__":
    main()

"""Run the acceptance suite and print one PASS/FAIL line per criterion.

Usage::

    python scripts/run_acceptance.py [extra pytest args]

The exit status is pytest's: 0 only when every criterion passes.
"""
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main(argv):
    cmd = [sys.executable, "-m", "pytest", str(ROOT / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider"]
    proc = subprocess.run(cmd + list(argv), cwd=ROOT, capture_output=True, text=True)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith("criterion ")]
    seen = set()
    for ln in lines:
        if ln not in seen:
            seen.add(ln)
            print(ln)
    tail = [ln for ln in proc.stdout.splitlines() if " passed" in ln or " failed" in ln]
    if tail:
        print(tail[-1])
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))

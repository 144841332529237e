#!/usr/bin/env python3
"""Run the acceptance tests and print only the per-criterion verdict lines."""

import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parent.parent
proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider",
                       str(root / "tests" / "test_acceptance.py")], capture_output=True, text=True, cwd=root)
for line in proc.stdout.splitlines():
    if line.startswith("CRITERION"):
        print(line)
print(proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr)
sys.exit(proc.returncode)

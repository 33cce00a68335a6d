#!/usr/bin/env python3
"""End-to-end verification run: moments table, 500 exact-identity
instances, the full Monte Carlo identity suite, and (if the plots package
is installed) the three figures. Everything lands in out/.

Exit code mirrors the CLI: nonzero if any identity check fails.
"""

import shutil
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
CONFIG = ROOT / "configs" / "base.cfg"
OUT = ROOT / "out"


def main() -> int:
    OUT.mkdir(exist_ok=True)
    steps = [
        ["cone-lab", "moments", "--config", str(CONFIG), "--out", str(OUT)],
        ["cone-lab", "verify-exact", "--seed", "7", "--instances", "500", "--out", str(OUT)],
        ["cone-lab", "verify-mc", "--config", str(CONFIG), "--out", str(OUT)],
    ]
    for step in steps:
        print("+", " ".join(step))
        code = subprocess.call(step)
        if code != 0:
            print(f"step failed with exit code {code}", file=sys.stderr)
            return code
    if shutil.which("plots"):
        demo = ROOT / "plots" / "demo"
        for kind, src, dst in [
            ("convergence", demo / "convergence.csv", OUT / "convergence.png"),
            ("radial-density", demo / "radial.csv", OUT / "radial.png"),
            ("kappa-profile", demo / "kappa.csv", OUT / "kappa.png"),
        ]:
            print("+ plots", kind)
            code = subprocess.call(["plots", kind, str(src), str(dst)])
            if code != 0:
                return code
    print(f"all checks passed; outputs in {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

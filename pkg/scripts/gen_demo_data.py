#!/usr/bin/env python3
"""Generate the demo CSVs consumed by the plots package.

Everything flows through the cone-lab CLI surfaces where one exists
(estimate, sample); the kappa profile is tabulated with the library since
the CLI emits only its single-cell summary.  Outputs land in plots/demo/.
"""

import csv
import math
import sys
import tempfile
from pathlib import Path

import conelab as cl
from conelab.cli import run as cli_run
from conelab.streams import RandomStream

ROOT = Path(__file__).resolve().parent.parent
DEMO = ROOT / "plots" / "demo"
CONFIG = ROOT / "configs" / "base.cfg"

BUDGETS = [200, 1000, 5000, 20000, 100000]


def write_convergence(workdir: Path) -> None:
    rows = []
    header = None
    for n in BUDGETS:
        out = workdir / f"est_{n}"
        code = cli_run(
            ["estimate", "--kind", "laplace", "--config", str(CONFIG), "--n", str(n), "--out", str(out)]
        )
        assert code == 0, f"estimate failed with {code}"
        with open(out / "estimate_laplace.csv", newline="") as fh:
            table = list(csv.reader(fh))
        header = table[0]
        rows.append(table[1])
    target = DEMO / "convergence.csv"
    with open(target, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(target)


def write_radial(workdir: Path) -> None:
    out = workdir / "samples"
    code = cli_run(["sample", "--config", str(CONFIG), "--n", "10000", "--out", str(out)])
    assert code == 0, f"sample failed with {code}"
    cfg = cl.cli.load_config(CONFIG)
    law, marks = cfg.sigma.law, cfg.sigma.marks
    target = DEMO / "radial.csv"
    with open(out / "sample.csv", newline="") as fh:
        reader = csv.DictReader(fh)
        d = law.d
        speeds = []
        for row in reader:
            v = [float(row[f"v_{i+1}"]) for i in range(d)]
            speeds.append(math.sqrt(sum(c * c for c in v)))
    with open(target, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vnorm", "d", "alpha", "beta", "eps", "rmax"])
        for s in speeds:
            writer.writerow([repr(s), law.d, law.alpha, law.beta, marks.eps, marks.rmax])
    print(target)


def write_kappa() -> None:
    cfg = cl.cli.load_config(CONFIG)
    sigma = cl.IntensitySpec(
        cfg.sigma.law,
        cl.MarkAnnulus(cfg.sigma.marks.eps, cfg.sigma.marks.rmax, one_sided=True),
        cfg.sigma.window,
    )
    table = cl.kappa_position_mc(1, (1.0,), sigma, 50000, RandomStream(cfg.seed, 0), cells=10)
    closed = cl.kappa_poisson_reference(sigma, (1.0,), 1)
    edges = table.axis_edges[0]
    target = DEMO / "kappa.csv"
    with open(target, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x_lo", "x_hi", "estimate", "std_error", "closed_form"])
        for i in range(len(edges) - 1):
            writer.writerow(
                [
                    repr(edges[i]),
                    repr(edges[i + 1]),
                    repr(float(table.values[i])),
                    repr(float(table.std_errors[i])),
                    repr(closed),
                ]
            )
    print(target)


def main() -> int:
    DEMO.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(tmp)
        write_convergence(workdir)
        write_radial(workdir)
    write_kappa()
    return 0


if __name__ == "__main__":
    sys.exit(main())

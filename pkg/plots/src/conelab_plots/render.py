"""Render figures from cone-lab CSV outputs.

Three plot kinds, consuming only the documented CSV schemas (no linkage
against the simulation library):

convergence     columns estimate, std_error, closed_form, n_samples
                (one row per sample budget, increasing): estimate with a
                +-3 standard-error band against the closed-form line.
radial-density  columns vnorm, d, alpha, beta, eps, rmax (law parameters
                constant across rows): histogram of sampled speeds with
                the normalized analytic radial density overlaid and a
                chi-square annotation recomputed from the binned counts.
kappa-profile   columns x_lo, x_hi, estimate, std_error, closed_form:
                per-cell position correlation profile with error bars.

Invocation: plots <kind> <in.csv> <out.png>; exit 0 on success, 1 on any
schema or i/o error.  Inputs are never modified.
"""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("convergence", "radial-density", "kappa-profile")


class SchemaMismatch(Exception):
    """Input CSV does not match the documented schema for the plot kind."""


@dataclass(frozen=True)
class PlotJob:
    input_csv: Path
    kind: str
    output_image: Path

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaMismatch(f"unknown plot kind {self.kind!r}")


def _read_columns(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise SchemaMismatch(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise SchemaMismatch(f"{path} has no data rows")
    missing = [col for col in required if col not in rows[0] or rows[0][col] in (None, "")]
    if missing:
        raise SchemaMismatch(f"{path} lacks required columns {missing}")
    out = {}
    try:
        for col in required:
            out[col] = np.array([float(row[col]) for row in rows])
    except (TypeError, ValueError) as exc:
        raise SchemaMismatch(f"{path}: non-numeric value in {col!r}") from exc
    return out


def render_convergence(job: PlotJob) -> Path:
    data = _read_columns(
        job.input_csv, ("estimate", "std_error", "closed_form", "n_samples")
    )
    order = np.argsort(data["n_samples"])
    n = data["n_samples"][order]
    est = data["estimate"][order]
    se = data["std_error"][order]
    closed = data["closed_form"][order]

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.fill_between(n, est - 3 * se, est + 3 * se, alpha=0.25, label="estimate ± 3 SE")
    ax.plot(n, est, marker="o", lw=1.2, label="Monte Carlo estimate")
    ax.axhline(closed[-1], color="k", ls="--", lw=1.0, label="closed form")
    ax.set_xscale("log")
    ax.set_xlabel("sample budget")
    ax.set_ylabel("estimate")
    ax.set_title("Monte Carlo convergence to the closed form")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(job.output_image, dpi=120)
    plt.close(fig)
    return job.output_image


def _radial_profile(r: np.ndarray, d: float, alpha: float, beta: float) -> np.ndarray:
    return r ** (d - 1 - alpha) * np.exp(-(r**beta))


def render_radial_density(job: PlotJob, bins: int = 40) -> Path:
    data = _read_columns(job.input_csv, ("vnorm", "d", "alpha", "beta", "eps", "rmax"))
    for name in ("d", "alpha", "beta", "eps", "rmax"):
        if not np.all(data[name] == data[name][0]):
            raise SchemaMismatch(f"law parameter {name!r} varies across rows")
    d, alpha, beta = data["d"][0], data["alpha"][0], data["beta"][0]
    eps, rmax = data["eps"][0], data["rmax"][0]
    samples = data["vnorm"]
    if np.any(samples < eps) or np.any(samples > rmax):
        raise SchemaMismatch("vnorm values fall outside the [eps, rmax] annulus")

    edges = np.linspace(eps, rmax, bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    # normalized analytic density on the annulus (dense trapezoid grid)
    grid = np.linspace(eps, rmax, 4001)
    weight = _radial_profile(grid, d, alpha, beta)
    total = np.trapezoid(weight, grid)
    density = weight / total

    # chi-square of observed vs expected bin counts
    expected = np.empty(bins)
    for i in range(bins):
        seg = np.linspace(edges[i], edges[i + 1], 101)
        expected[i] = np.trapezoid(_radial_profile(seg, d, alpha, beta), seg) / total
    expected *= samples.size
    keep = expected > 5  # standard validity threshold
    chi2 = float(np.sum((counts[keep] - expected[keep]) ** 2 / expected[keep]))
    dof = int(keep.sum()) - 1

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.hist(samples, bins=edges, density=True, alpha=0.45, label="sampled |v|")
    ax.plot(grid, density, "k-", lw=1.3, label="analytic radial density")
    ax.set_xlabel("|v|")
    ax.set_ylabel("density")
    ax.set_title("Sampled speeds vs the singular radial law")
    ax.annotate(
        f"chi2 = {chi2:.1f} on {dof} dof",
        xy=(0.97, 0.95),
        xycoords="axes fraction",
        ha="right",
        va="top",
        fontsize=9,
    )
    ax.legend(loc="center right")
    fig.tight_layout()
    fig.savefig(job.output_image, dpi=120)
    plt.close(fig)
    return job.output_image


def render_kappa_profile(job: PlotJob) -> Path:
    data = _read_columns(
        job.input_csv, ("x_lo", "x_hi", "estimate", "std_error", "closed_form")
    )
    mid = 0.5 * (data["x_lo"] + data["x_hi"])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.errorbar(
        mid,
        data["estimate"],
        yerr=3 * data["std_error"],
        fmt="o",
        capsize=3,
        label="estimate ± 3 SE",
    )
    ax.step(
        np.append(data["x_lo"], data["x_hi"][-1]),
        np.append(data["closed_form"], data["closed_form"][-1]),
        where="post",
        color="k",
        ls="--",
        label="closed form",
    )
    ax.set_xlabel("position")
    ax.set_ylabel("first-order correlation profile")
    ax.set_title("Position correlation profile")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(job.output_image, dpi=120)
    plt.close(fig)
    return job.output_image


_RENDERERS = {
    "convergence": render_convergence,
    "radial-density": render_radial_density,
    "kappa-profile": render_kappa_profile,
}


def render(kind: str, input_csv: str | Path, output_image: str | Path) -> Path:
    job = PlotJob(Path(input_csv), kind, Path(output_image))
    return _RENDERERS[kind](job)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 3 or argv[0] not in KINDS:
        print(f"usage: plots {{{'|'.join(KINDS)}}} <in.csv> <out.png>", file=sys.stderr)
        return 1
    try:
        out = render(argv[0], argv[1], argv[2])
    except (SchemaMismatch, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

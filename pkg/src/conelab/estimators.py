"""Monte Carlo estimators for the Poisson functionals, each paired with its
closed form: Laplace and Campbell functionals, Bogoliubov functional, the
cone Laplace transform through the single-site mark transform, factorial
moments, K-duality, the correlation-density representation for tilted
Poisson measures, and position correlation profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .combinat import AnyConfigFunction, k_transform
from .configuration import (
    FiniteConfiguration,
    MarkAnnulus,
    PositionWindow,
    Vector,
    reflect,
)
from .dsl import (
    FunctionSpec,
    PointwiseFunction,
    evaluate,
    integrate_sigma,
    integrate_sigma_transformed,
    position_profile_integral,
)
from .errors import BudgetExceeded, OverlappingBoxes
from .intensity import (
    IntensitySpec,
    _sides,
    kappa_first_moment,
    log_phi_lambda_h,
    velocity_monomial_integral,
)
from .sampler import _sample_poisson_gen, lp_series_expectation, poisson_values
from .streams import RandomStream, batch_plan

FUNCTIONAL_KINDS = ("laplace", "campbell", "bogoliubov", "cone_laplace")


@dataclass(frozen=True)
class MCResult:
    """A Monte Carlo estimate, optionally scored against a closed form."""

    estimate: float
    std_error: float
    n_samples: int
    closed_form: float | None = None
    z_score: float | None = None

    @classmethod
    def from_values(
        cls, values: Sequence[float], closed_form: float | None = None
    ) -> "MCResult":
        n = len(values)
        mean = math.fsum(values) / n
        if n > 1:
            var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = 0.0
        z = None
        if closed_form is not None and se > 0.0:
            z = (mean - closed_form) / se
        return cls(mean, se, n, closed_form, z)


@dataclass(frozen=True)
class PhaseBox:
    """A product region in phase space: mark annulus times position box."""

    marks: MarkAnnulus
    window: PositionWindow

    def contains(self, velocity: Vector, position: Vector) -> bool:
        return self.marks.contains(velocity) and self.window.contains(position)


@dataclass(frozen=True)
class TiltDensity:
    """Product tilt density against the Poisson measure:

        D(gamma) = exp(-int phi d sigma) * prod over points of (1 + phi),

    the simplest locally absolutely continuous family, with correlation
    function prod(1 + phi) on the window.  phi must exceed -1 there.
    """

    phi: FunctionSpec
    sigma: IntensitySpec
    log_norm: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "log_norm", -integrate_sigma(self.phi, self.sigma))

    def tilt_factor(self, gamma: FiniteConfiguration) -> float:
        out = 1.0
        for p in gamma.points:
            term = 1.0 + evaluate(self.phi, p.velocity, p.position)
            if term <= 0.0:
                raise ValueError(f"tilt 1 + phi is not positive at {p}")
            out *= term
        return out

    def density(self, gamma: FiniteConfiguration) -> float:
        return math.exp(self.log_norm) * self.tilt_factor(gamma)


def _pairing(f: PointwiseFunction, gamma: FiniteConfiguration) -> float:
    return math.fsum(evaluate(f, p.velocity, p.position) for p in gamma.points)


def _dot(a: Vector, b: Vector) -> float:
    return math.fsum(x * y for x, y in zip(a, b))


def _as_vector(h) -> Vector:
    if isinstance(h, (int, float)):
        return (float(h),)
    return tuple(float(c) for c in h)


def closed_form_functional(
    kind: str, f: PointwiseFunction, sigma: IntensitySpec, h=None
) -> float:
    """Exact Poisson value of the requested functional."""
    if kind == "laplace":
        return math.exp(integrate_sigma_transformed(f, sigma, math.expm1))
    if kind == "campbell":
        return integrate_sigma(f, sigma)
    if kind == "bogoliubov":
        return math.exp(integrate_sigma(f, sigma))
    if kind == "cone_laplace":
        if h is None:
            raise ValueError("cone_laplace needs the direction vector h")
        hv = _as_vector(h)
        return math.exp(
            position_profile_integral(
                f,
                sigma.window,
                lambda r: log_phi_lambda_h(sigma.law, sigma.marks, hv, r),
            )
        )
    raise ValueError(f"unknown functional kind {kind!r}")


def estimate_functional(
    kind: str,
    f: PointwiseFunction,
    sigma: IntensitySpec,
    n_samples: int,
    rng: RandomStream,
    h=None,
) -> MCResult:
    """Monte Carlo estimate of a Poisson functional with its closed form."""
    if kind == "laplace":
        value_fn = lambda gamma: math.exp(_pairing(f, gamma))
    elif kind == "campbell":
        value_fn = lambda gamma: _pairing(f, gamma)
    elif kind == "bogoliubov":

        def value_fn(gamma):
            out = 1.0
            for p in gamma.points:
                out *= 1.0 + evaluate(f, p.velocity, p.position)
            return out

    elif kind == "cone_laplace":
        if h is None:
            raise ValueError("cone_laplace needs the direction vector h")
        hv = _as_vector(h)

        def value_fn(gamma):
            eta = reflect(gamma)
            pairing = math.fsum(
                evaluate(f, v, x) * _dot(hv, v) for x, v in eta.entries
            )
            return math.exp(pairing)

    else:
        raise ValueError(f"unknown functional kind {kind!r}")
    closed = closed_form_functional(kind, f, sigma, h=h)
    values = poisson_values(sigma, n_samples, rng, value_fn)
    return MCResult.from_values(values, closed)


def _phase_box_sigma_mass(sigma: IntensitySpec, box: PhaseBox) -> float:
    window = sigma.window.intersect(box.window)
    if window is None:
        return 0.0
    lo = max(sigma.marks.eps, box.marks.eps)
    hi = min(sigma.marks.rmax, box.marks.rmax)
    sides = tuple(sorted(set(_sides(sigma.marks)) & set(_sides(box.marks)), reverse=True))
    if hi <= lo or not sides:
        return 0.0
    return window.volume() * velocity_monomial_integral(sigma.law, lo, hi, sides, 0, ())


def _boxes_overlap(sigma: IntensitySpec, a: PhaseBox, b: PhaseBox) -> bool:
    window = a.window.intersect(b.window)
    if window is None or window.volume() == 0.0:
        return False
    lo = max(a.marks.eps, b.marks.eps)
    hi = min(a.marks.rmax, b.marks.rmax)
    if hi <= lo:
        return False
    if sigma.law.d == 1 and not (set(_sides(a.marks)) & set(_sides(b.marks))):
        return False
    return True


def factorial_moment_mc(
    boxes: Sequence[PhaseBox],
    sigma: IntensitySpec,
    n_samples: int,
    rng: RandomStream,
) -> MCResult:
    """Estimate of the factorial moment over disjoint phase boxes:

        E[ number of ordered tuples of distinct points with p_i in A_i ],

    which for the Poisson measure equals the product of the sigma-masses.
    """
    boxes = list(boxes)
    if sigma.law.d != 1 and any(box.marks.one_sided for box in boxes):
        raise ValueError("one-sided mark annuli are only defined in dimension 1")
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if _boxes_overlap(sigma, boxes[i], boxes[j]):
                raise OverlappingBoxes(f"boxes {i} and {j} overlap")
    closed = 1.0
    for box in boxes:
        closed *= _phase_box_sigma_mass(sigma, box)

    def value_fn(gamma: FiniteConfiguration) -> float:
        # Boxes are disjoint, so points counted in different boxes are
        # automatically distinct and the tuple count factorizes.
        out = 1.0
        for box in boxes:
            out *= sum(
                1 for p in gamma.points if box.contains(p.velocity, p.position)
            )
        return float(out)

    values = poisson_values(sigma, n_samples, rng, value_fn)
    return MCResult.from_values(values, closed)


def k_duality_check(
    G: AnyConfigFunction,
    sigma: IntensitySpec,
    n_samples: int,
    n_max: int,
    rng: RandomStream,
    mc_per_order: int = 1000,
    g_bound: float | None = None,
) -> MCResult:
    """Check of the duality between the correlation measure and the state:

    the Lebesgue-Poisson integral of G (the Poisson correlation measure)
    against the Poisson expectation of KG.  The estimate is the KG side,
    the closed_form slot carries the series side, and std_error combines
    both Monte Carlo errors.
    """
    lp = lp_series_expectation(
        G, sigma, n_max=n_max, mc_per_order=mc_per_order, rng=rng.batch(1), g_bound=g_bound
    )
    values = poisson_values(
        sigma, n_samples, rng.batch(2), lambda gamma: k_transform(G, gamma)
    )
    n = len(values)
    mean = math.fsum(values) / n
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1) if n > 1 else 0.0
    se = math.sqrt(var / n + lp.std_error**2)
    z = (mean - lp.value) / se if se > 0 else None
    return MCResult(mean, se, n, lp.value, z)


def correlation_density_mc(
    gamma0: FiniteConfiguration,
    tilt: TiltDensity,
    sigma: IntensitySpec,
    n_samples: int,
    rng: RandomStream,
) -> MCResult:
    """Correlation function of the tilted Poisson measure at gamma0 via the
    density representation: average of D(gamma0 + xi) over Poisson draws xi.

    For the product tilt the exact value is prod over gamma0 of (1 + phi).
    """
    for p in gamma0.points:
        if not (sigma.window.contains(p.position) and sigma.marks.contains(p.velocity)):
            raise ValueError(f"gamma0 point {p} lies outside the sigma window")
    base = tilt.tilt_factor(gamma0)
    norm_const = math.exp(tilt.log_norm)

    def value_fn(xi: FiniteConfiguration) -> float:
        # D is a product over points, so D(gamma0 + xi) splits; draws
        # colliding with gamma0 in position form a null event.
        return norm_const * base * tilt.tilt_factor(xi)

    values = poisson_values(sigma, n_samples, rng, value_fn)
    return MCResult.from_values(values, closed_form=base)


@dataclass(frozen=True)
class CorrelationTable:
    """Gridded estimates of a position correlation profile.

    ``values`` has shape (cells,) for order 1 and (cells, cells) for
    order 2, where cells indexes the flattened position grid; symmetric
    under axis permutation by construction.  ``sigma`` records the mark
    truncation the estimates were computed under.
    """

    order: int
    axis_edges: tuple[tuple[float, ...], ...]
    values: np.ndarray
    std_errors: np.ndarray
    counts: np.ndarray
    n_samples: int
    sigma: IntensitySpec


def _cell_index(
    edges: tuple[tuple[float, ...], ...], shape: tuple[int, ...], x: Vector
) -> int:
    flat = 0
    for axis, (axis_edges, n_axis) in enumerate(zip(edges, shape)):
        if not axis_edges[0] <= x[axis] <= axis_edges[-1]:
            return -1
        i = int(np.searchsorted(axis_edges, x[axis], side="right")) - 1
        if i == n_axis:  # right boundary belongs to the last cell
            i = n_axis - 1
        flat = flat * n_axis + i
    return flat


def kappa_position_mc(
    n: int,
    h,
    sigma: IntensitySpec,
    n_samples: int,
    rng: RandomStream,
    cells: int = 10,
) -> CorrelationTable:
    """Histogram estimate of the order-n position correlation profile

        kappa^(n)(x_1..x_n) from sums of <h, v_i> products over ordered
        tuples of distinct points, normalized by cell volumes.

    Only orders 1 and 2 are supported at desk scale.
    """
    if n not in (1, 2):
        raise BudgetExceeded(f"kappa order {n} not supported (n <= 2)")
    hv = _as_vector(h)
    window = sigma.window
    edges = tuple(
        tuple(
            float(e)
            for e in np.linspace(window.lower[axis], window.upper[axis], cells + 1)
        )
        for axis in range(window.dim)
    )
    shape = tuple(cells for _ in range(window.dim))
    n_cells = int(np.prod(shape))
    cell_volume = np.full(n_cells, window.volume() / n_cells)

    table_shape = (n_cells,) if n == 1 else (n_cells, n_cells)
    sums = np.zeros(table_shape)
    sumsq = np.zeros(table_shape)
    counts = np.zeros(table_shape, dtype=np.int64)

    def accumulate(gamma: FiniteConfiguration) -> None:
        marked = []
        for p in gamma.points:
            c = _cell_index(edges, shape, p.position)
            if c >= 0:
                marked.append((c, _dot(hv, p.velocity)))
        if n == 1:
            per_cell: dict[int, float] = {}
            for c, w in marked:
                per_cell[c] = per_cell.get(c, 0.0) + w
                counts[c] += 1
            for c, y in per_cell.items():
                sums[c] += y
                sumsq[c] += y * y
        else:
            per_pair: dict[tuple[int, int], float] = {}
            for i in range(len(marked)):
                ci, wi = marked[i]
                for j in range(i + 1, len(marked)):
                    cj, wj = marked[j]
                    val = wi * wj
                    # Write both orientations identically so the table is
                    # bitwise symmetric.
                    per_pair[(ci, cj)] = per_pair.get((ci, cj), 0.0) + val
                    per_pair[(cj, ci)] = per_pair.get((cj, ci), 0.0) + val
                    counts[ci, cj] += 1
                    counts[cj, ci] += 1
            for (a, b), y in per_pair.items():
                sums[a, b] += y
                sumsq[a, b] += y * y

    for b, count in batch_plan(n_samples):
        gen = rng.batch(b).generator()
        for _ in range(count):
            accumulate(_sample_poisson_gen(sigma, gen))

    means = sums / n_samples
    variances = np.maximum(sumsq - n_samples * means**2, 0.0) / max(n_samples - 1, 1)
    se = np.sqrt(variances / n_samples)
    if n == 1:
        volume_factor = cell_volume
    else:
        volume_factor = cell_volume[:, None] * cell_volume[None, :]
    return CorrelationTable(
        order=n,
        axis_edges=edges,
        values=means / volume_factor,
        std_errors=se / volume_factor,
        counts=counts,
        n_samples=n_samples,
        sigma=sigma,
    )


def kappa_poisson_reference(sigma: IntensitySpec, h, n: int) -> float:
    """Exact Poisson value of the order-n position correlation profile
    (constant on the window): the n-th power of the first mark moment."""
    return kappa_first_moment(sigma.law, sigma.marks, _as_vector(h)) ** n

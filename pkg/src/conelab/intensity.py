"""The singular velocity law |v|^-alpha * exp(-|v|^beta) and the product
intensity sigma = lambda (x) Lebesgue, truncated to a compact phase window.

The law has infinite total mass (alpha >= d), so every sampling operation
and most closed forms live on a compact annulus eps <= |v| <= rmax.  Full
moments of order n >= 1 exist because alpha < d + 1.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .configuration import MarkAnnulus, PositionWindow, Vector, norm
from .errors import DivergentMoment, QuadratureFailure
from .streams import RandomStream

#: Relative tolerance contract for all intensity integrals.
QUAD_RTOL = 1e-10


@dataclass(frozen=True)
class VelocityLaw:
    """Radial velocity density |v|^-alpha * exp(-|v|^beta) on R^d minus 0."""

    d: int
    alpha: float
    beta: float

    def __init__(self, d: int, alpha: float, beta: float):
        d = int(d)
        alpha = float(alpha)
        beta = float(beta)
        if d < 1:
            raise ValueError(f"dimension must be >= 1, got {d}")
        if not d <= alpha < d + 1:
            raise ValueError(f"need alpha in [d, d+1) = [{d}, {d + 1}), got {alpha}")
        if beta <= 0:
            raise ValueError(f"need beta > 0, got {beta}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    def radial_density(self, r):
        """Unnormalized radial profile r^(d-1-alpha) * exp(-r^beta)."""
        r = np.asarray(r, dtype=float)
        return r ** (self.d - 1 - self.alpha) * np.exp(-(r**self.beta))


@dataclass(frozen=True)
class IntensitySpec:
    """sigma = lambda (x) m restricted to the phase window annulus x box."""

    law: VelocityLaw
    marks: MarkAnnulus
    window: PositionWindow

    def __init__(self, law: VelocityLaw, marks: MarkAnnulus, window: PositionWindow):
        if window.dim != law.d:
            raise ValueError(
                f"window dimension {window.dim} does not match law dimension {law.d}"
            )
        if marks.one_sided and law.d != 1:
            raise ValueError("one-sided mark annuli are only defined in dimension 1")
        object.__setattr__(self, "law", law)
        object.__setattr__(self, "marks", marks)
        object.__setattr__(self, "window", window)


def surface_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d=1, 2*pi for d=2, ...)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def _sides(marks: MarkAnnulus) -> tuple[float, ...]:
    return (1.0,) if marks.one_sided else (1.0, -1.0)


def _angular_total(law: VelocityLaw, marks: MarkAnnulus) -> float:
    if law.d == 1:
        return float(len(_sides(marks)))
    if marks.one_sided:
        raise ValueError("one-sided mark annuli are only defined in dimension 1")
    return surface_area(law.d)


def _quad(fn, a: float, b: float, points=None) -> float:
    if a >= b:
        return 0.0
    kwargs = {"epsabs": 1e-14, "epsrel": 1e-12, "limit": 200}
    if points is not None and not math.isinf(b):
        pts = sorted({p for p in points if a < p < b})
        if pts:
            kwargs["points"] = pts
    out = integrate.quad(fn, a, b, full_output=1, **kwargs)
    val, abserr = out[0], out[1]
    if len(out) > 3:  # a warning message was produced
        raise QuadratureFailure(f"quadrature failed on [{a}, {b}]: {out[3]}")
    if abserr > max(QUAD_RTOL * abs(val), 1e-13):
        raise QuadratureFailure(
            f"quadrature error {abserr:g} too large for value {val:g} on [{a}, {b}]"
        )
    return val


@lru_cache(maxsize=4096)
def radial_weight_integral(
    law: VelocityLaw, lo: float, hi: float, extra_power: float = 0.0
) -> float:
    """Integral of r^(d-1+extra_power-alpha) * exp(-r^beta) over [lo, hi]."""
    expo = law.d - 1 + extra_power - law.alpha

    def fn(r):
        return r**expo * math.exp(-(r**law.beta))

    return _quad(fn, lo, hi)


def _full_radial_moment(law: VelocityLaw, n: int) -> float:
    """Integral of r^(d-1+n-alpha) * exp(-r^beta) over (0, inf), n >= 1.

    The exponent p-1 = d-1+n-alpha can be negative (integrable since
    p > 0); substituting u = r^p removes the endpoint singularity on [0,1].
    """
    p = law.d + n - law.alpha
    q = law.beta / p

    def near_zero(u):
        return math.exp(-(u**q)) / p

    def tail(r):
        return r ** (p - 1) * math.exp(-(r**law.beta))

    return _quad(near_zero, 0.0, 1.0) + _quad(tail, 1.0, math.inf)


def lambda_mass(law: VelocityLaw, marks: MarkAnnulus) -> float:
    """Mass of the velocity law on the compact annulus (finite there only)."""
    return _angular_total(law, marks) * radial_weight_integral(law, marks.eps, marks.rmax)


def lambda_moment(law: VelocityLaw, n: int, marks: MarkAnnulus | None = None) -> float:
    """Integral of |v|^n against the law, over an annulus or all of R^d_0."""
    n = int(n)
    if n < 0:
        raise ValueError("moment order must be >= 0")
    if marks is None:
        if n == 0:
            raise DivergentMoment("the law has infinite total mass (alpha >= d)")
        return surface_area(law.d) * _full_radial_moment(law, n)
    return _angular_total(law, marks) * radial_weight_integral(
        law, marks.eps, marks.rmax, float(n)
    )


def sigma_mass(sigma: IntensitySpec) -> float:
    """Total mass of the truncated intensity: window volume times annulus mass."""
    return sigma.window.volume() * lambda_mass(sigma.law, sigma.marks)


def angular_even_moment(d: int, k: int) -> float:
    """Mean of (first coordinate)^k over the uniform unit sphere in R^d."""
    if k % 2 == 1:
        return 0.0
    return (
        math.gamma((k + 1) / 2.0)
        * math.gamma(d / 2.0)
        / (math.sqrt(math.pi) * math.gamma((d + k) / 2.0))
    )


def _dot(a: Vector, b: Vector) -> float:
    return math.fsum(x * y for x, y in zip(a, b))


def velocity_monomial_integral(
    law: VelocityLaw,
    lo: float,
    hi: float,
    sides: tuple[float, ...],
    radial_power: int,
    linear: tuple[Vector, ...],
) -> float:
    """Integral over the annulus lo <= |v| <= hi of

        |v|^radial_power * prod_j <h_j, v>   d(lambda)

    ``sides`` restricts to signs in dimension 1 and is ignored otherwise.
    Products of three or more non-parallel linear factors have no closed
    angular reduction here and raise QuadratureFailure.
    """
    if hi <= lo:
        return 0.0
    k = len(linear)
    if law.d == 1:
        sign_moment = math.fsum(s**k for s in sides)
        if sign_moment == 0.0:
            return 0.0
        h_prod = 1.0
        for h in linear:
            h_prod *= h[0]
        return h_prod * sign_moment * radial_weight_integral(law, lo, hi, radial_power + k)
    if k == 0:
        return surface_area(law.d) * radial_weight_integral(law, lo, hi, radial_power)
    if k == 1:
        return 0.0
    if k == 2 and not _all_parallel(linear):
        return (
            _dot(linear[0], linear[1])
            / law.d
            * surface_area(law.d)
            * radial_weight_integral(law, lo, hi, radial_power + 2)
        )
    if not _all_parallel(linear):
        raise QuadratureFailure(
            "cannot integrate three or more non-parallel linear mark factors"
        )
    if k % 2 == 1:
        return 0.0
    e_len = norm(linear[0])
    unit = tuple(c / e_len for c in linear[0])
    h_prod = 1.0
    for h in linear:
        h_prod *= _dot(h, unit)
    return (
        h_prod
        * surface_area(law.d)
        * angular_even_moment(law.d, k)
        * radial_weight_integral(law, lo, hi, radial_power + k)
    )


def _all_parallel(vectors: tuple[Vector, ...]) -> bool:
    ref = vectors[0]
    ref_n2 = _dot(ref, ref)
    for h in vectors[1:]:
        h_n2 = _dot(h, h)
        cross = ref_n2 * h_n2 - _dot(ref, h) ** 2
        if cross > 1e-24 * max(ref_n2 * h_n2, 1e-300):
            return False
    return True


def _orthonormal_complement(unit: Vector) -> Vector:
    """Any unit vector orthogonal to ``unit`` (dimension >= 2)."""
    d = len(unit)
    basis_idx = min(range(d), key=lambda i: abs(unit[i]))
    raw = [0.0] * d
    raw[basis_idx] = 1.0
    proj = unit[basis_idx]
    vec = tuple(r - proj * u for r, u in zip(raw, unit))
    length = norm(vec)
    return tuple(c / length for c in vec)


def lambda_callable_integral(
    law: VelocityLaw,
    marks: MarkAnnulus,
    func,
    direction: Vector | None = None,
    radial_breakpoints: tuple[float, ...] = (),
) -> float:
    """Integral of an arbitrary evaluable func(v) against the law on the annulus.

    ``func`` may depend on v only through |v| and (optionally) the inner
    product with a single ``direction``; in dimension 1 every function is
    admissible.  ``radial_breakpoints`` mark radii where func may jump.
    """
    lo, hi = marks.eps, marks.rmax
    cuts = sorted({lo, hi, *(b for b in radial_breakpoints if lo < b < hi)})
    total = []
    if law.d == 1:
        for s in _sides(marks):
            for a, b in zip(cuts, cuts[1:]):
                total.append(
                    _quad(
                        lambda r, s=s: func((s * r,)) * law.radial_density(r),
                        a,
                        b,
                    )
                )
        return math.fsum(total)
    if marks.one_sided:
        raise ValueError("one-sided mark annuli are only defined in dimension 1")
    if direction is None:
        e1 = (1.0,) + (0.0,) * (law.d - 1)
        for a, b in zip(cuts, cuts[1:]):
            total.append(
                _quad(
                    lambda r: func(tuple(r * c for c in e1)) * float(law.radial_density(r)),
                    a,
                    b,
                )
            )
        return surface_area(law.d) * math.fsum(total)
    e_len = norm(direction)
    unit = tuple(c / e_len for c in direction)
    perp = _orthonormal_complement(unit)
    s_sub = surface_area(law.d - 1) if law.d > 2 else 2.0

    def angular(r: float) -> float:
        def fn(theta):
            v = tuple(
                r * (math.cos(theta) * u + math.sin(theta) * p)
                for u, p in zip(unit, perp)
            )
            return func(v) * math.sin(theta) ** (law.d - 2)

        return _quad(fn, 0.0, math.pi)

    for a, b in zip(cuts, cuts[1:]):
        total.append(
            _quad(lambda r: angular(r) * float(law.radial_density(r)), a, b)
        )
    return s_sub * math.fsum(total)


def sphere_average_exp(d: int, t: float) -> float:
    """Average of exp(t * omega_1) over the uniform unit sphere in R^d, d >= 2."""
    t = abs(float(t))
    if t < 1e-8:
        return 1.0 + t * t / (2.0 * d)
    nu = d / 2.0 - 1.0
    # iv(nu, t) = ive(nu, t) * e^t ; fold the e^t in explicitly.
    return math.gamma(d / 2.0) * (2.0 / t) ** nu * float(special.ive(nu, t)) * math.exp(t)


def log_phi_lambda_h(law: VelocityLaw, marks: MarkAnnulus, h: Vector, r: float) -> float:
    """log of the single-site mark transform:

        log Phi(r) = integral over the annulus of (e^{<h,v> r} - 1) d(lambda).
    """
    if r == 0.0:
        return 0.0
    if law.d == 1:
        h0 = h[0]
        parts = [
            _quad(
                lambda u, s=s: math.expm1(h0 * s * u * r) * float(law.radial_density(u)),
                marks.eps,
                marks.rmax,
            )
            for s in _sides(marks)
        ]
        return math.fsum(parts)
    if marks.one_sided:
        raise ValueError("one-sided mark annuli are only defined in dimension 1")
    h_len = norm(h)

    def fn(u):
        return (sphere_average_exp(law.d, h_len * u * r) - 1.0) * float(
            law.radial_density(u)
        )

    return surface_area(law.d) * _quad(fn, marks.eps, marks.rmax)


def phi_lambda_h(law: VelocityLaw, marks: MarkAnnulus, h: Vector, r: float) -> float:
    return math.exp(log_phi_lambda_h(law, marks, h, r))


def kappa_first_moment(law: VelocityLaw, marks: MarkAnnulus, h: Vector) -> float:
    """Integral of <h, v> against the law on the annulus (0 unless one-sided)."""
    return velocity_monomial_integral(
        law, marks.eps, marks.rmax, _sides(marks), 0, (tuple(float(c) for c in h),)
    )


# --- radial sampling ---------------------------------------------------------

#: Number of log-spaced radii in the tabulated CDF.
CDF_NODES = 4096
#: Bisection stopping tolerance, measured in CDF space.
CDF_BISECT_TOL = 1e-12

_GL5_NODES = np.array(
    [-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640]
)
_GL5_WEIGHTS = np.array(
    [0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665, 0.2369268850561891]
)

_cdf_cache: dict[tuple, tuple] = {}


def radial_cdf_table(law: VelocityLaw, marks: MarkAnnulus):
    """Tabulated normalized radial CDF on log-spaced nodes over the annulus.

    Returns (radii, cdf) with cdf[0] = 0 and cdf[-1] = 1.
    """
    key = (law, marks.eps, marks.rmax)
    cached = _cdf_cache.get(key)
    if cached is not None:
        return cached
    radii = np.geomspace(marks.eps, marks.rmax, CDF_NODES)
    a = radii[:-1]
    b = radii[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    # 5-point Gauss-Legendre mass of each interval, vectorized.
    pts = mid[:, None] + half[:, None] * _GL5_NODES[None, :]
    masses = (half[:, None] * _GL5_WEIGHTS[None, :] * law.radial_density(pts)).sum(axis=1)
    cdf = np.concatenate([[0.0], np.cumsum(masses)])
    if marks.eps == marks.rmax or cdf[-1] <= 0.0:
        cdf = np.linspace(0.0, 1.0, CDF_NODES)
    else:
        cdf = cdf / cdf[-1]
    cdf[-1] = 1.0
    result = (radii, cdf)
    _cdf_cache[key] = result
    return result


def radial_cdf(law: VelocityLaw, marks: MarkAnnulus, r) -> np.ndarray:
    """The tabulated CDF evaluated by linear interpolation."""
    radii, cdf = radial_cdf_table(law, marks)
    return np.interp(r, radii, cdf)


def _invert_radial_cdf(radii, cdf, u: float) -> float:
    if u <= cdf[0]:
        return float(radii[0])
    if u >= cdf[-1]:
        return float(radii[-1])
    j = bisect.bisect_right(cdf, u)
    r_lo, r_hi = float(radii[j - 1]), float(radii[j])
    c_lo, c_hi = float(cdf[j - 1]), float(cdf[j])
    if c_hi <= c_lo:
        return r_lo
    slope = (c_hi - c_lo) / (r_hi - r_lo)
    lo, hi = r_lo, r_hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = c_lo + (mid - r_lo) * slope
        if abs(f_mid - u) <= CDF_BISECT_TOL:
            return mid
        if f_mid < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sample_radius(law: VelocityLaw, marks: MarkAnnulus, u: float) -> float:
    """Radius with tabulated-CDF value u (inverse transform)."""
    radii, cdf = radial_cdf_table(law, marks)
    return _invert_radial_cdf(radii, cdf, u)


def sample_velocity(law: VelocityLaw, marks: MarkAnnulus, rng: RandomStream) -> Vector:
    """One velocity draw from the law restricted to the annulus."""
    return sample_velocity_gen(law, marks, rng.generator())


def sample_velocity_gen(law: VelocityLaw, marks: MarkAnnulus, gen: np.random.Generator) -> Vector:
    radius = sample_radius(law, marks, float(gen.random()))
    if law.d == 1:
        if marks.one_sided:
            return (radius,)
        sign = 1.0 if gen.random() < 0.5 else -1.0
        return (sign * radius,)
    while True:
        g = gen.standard_normal(law.d)
        g_norm = float(np.sqrt((g * g).sum()))
        if g_norm > 1e-12:
            return tuple(float(radius * c / g_norm) for c in g)

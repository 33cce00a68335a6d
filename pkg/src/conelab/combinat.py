"""Exact combinatorial K-calculus on finite configurations and finite
vector measures.

The K-transform sums a function over all sub-configurations; its Moebius
inverse alternates signs over the subset lattice, so sums are accumulated
with exact (fsum) arithmetic in fixed enumeration order.  Enumeration costs
are 2^n or 3^n; hard budget caps turn runaway inputs into errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

from .configuration import (
    FiniteConfiguration,
    MarkedPoint,
    VectorDiscreteMeasure,
    Vector,
)
from .dsl import PointwiseFunction, evaluate
from .errors import BudgetExceeded

#: Advisory tags mirroring the paper-level function classes; not enforced.
CLASS_TAGS = (
    "bounded-local-support",
    "bounded-bounded-support",
    "compact-marks",
    "unrestricted",
)

K_TRANSFORM_BUDGET = 25
STAR_BUDGET = 15


@dataclass(frozen=True)
class ConfigurationFunction:
    """A function of finite configurations with an advisory class tag."""

    evaluator: Callable[[FiniteConfiguration], float]
    class_tag: str = field(default="unrestricted")

    def __post_init__(self):
        if self.class_tag not in CLASS_TAGS:
            raise ValueError(f"unknown class tag {self.class_tag!r}")

    def __call__(self, gamma: FiniteConfiguration) -> float:
        return float(self.evaluator(gamma))


@dataclass(frozen=True)
class ConeFunction:
    """A function of finite vector measures with an advisory class tag."""

    evaluator: Callable[[VectorDiscreteMeasure], float]
    class_tag: str = field(default="unrestricted")

    def __post_init__(self):
        if self.class_tag not in CLASS_TAGS:
            raise ValueError(f"unknown class tag {self.class_tag!r}")

    def __call__(self, eta: VectorDiscreteMeasure) -> float:
        return float(self.evaluator(eta))


AnyConfigFunction = Union[ConfigurationFunction, Callable[[FiniteConfiguration], float]]
AnyConeFunction = Union[ConeFunction, Callable[[VectorDiscreteMeasure], float]]


class _ChunkedSum:
    """Exact-per-chunk accumulator with fixed reduction order."""

    CHUNK = 1 << 16

    def __init__(self):
        self._buffer: list[float] = []
        self._partials: list[float] = []

    def add(self, value: float) -> None:
        self._buffer.append(value)
        if len(self._buffer) >= self.CHUNK:
            self._partials.append(math.fsum(self._buffer))
            self._buffer.clear()

    def total(self) -> float:
        if self._buffer:
            self._partials.append(math.fsum(self._buffer))
            self._buffer.clear()
        return math.fsum(self._partials)


def _check_budget(n: int, budget: int, what: str) -> None:
    if n > budget:
        raise BudgetExceeded(f"{what} on {n} points exceeds the cap of {budget}")


def subconfiguration(gamma: FiniteConfiguration, mask: int) -> FiniteConfiguration:
    """Sub-configuration selected by a bitmask over the canonical point order."""
    pts = gamma.points
    return FiniteConfiguration._from_sorted(
        tuple(pts[i] for i in range(len(pts)) if mask >> i & 1)
    )


def submeasure(eta: VectorDiscreteMeasure, mask: int) -> VectorDiscreteMeasure:
    entries = eta.entries
    return VectorDiscreteMeasure._from_sorted(
        tuple(entries[i] for i in range(len(entries)) if mask >> i & 1)
    )


def k_transform(
    G: AnyConfigFunction, gamma: FiniteConfiguration, budget: int = K_TRANSFORM_BUDGET
) -> float:
    """Sum of G over all sub-configurations of gamma (the empty one included)."""
    n = len(gamma)
    _check_budget(n, budget, "K-transform")
    acc = _ChunkedSum()
    for mask in range(1 << n):
        acc.add(G(subconfiguration(gamma, mask)))
    return acc.total()


def k_inverse(
    F: AnyConfigFunction, gamma: FiniteConfiguration, budget: int = K_TRANSFORM_BUDGET
) -> float:
    """Moebius inverse of the K-transform:

        sum over subsets xi of (-1)^(|gamma| - |xi|) F(xi).
    """
    n = len(gamma)
    _check_budget(n, budget, "K-inverse")
    acc = _ChunkedSum()
    for mask in range(1 << n):
        sign = -1.0 if (n - mask.bit_count()) % 2 else 1.0
        acc.add(sign * F(subconfiguration(gamma, mask)))
    return acc.total()


def star_convolution(
    G1: AnyConfigFunction,
    G2: AnyConfigFunction,
    gamma: FiniteConfiguration,
    budget: int = STAR_BUDGET,
) -> float:
    """Tripartition convolution:

        sum over ordered partitions (xi1, xi2, xi3) of gamma, parts possibly
        empty, of G1(xi1 + xi2) * G2(xi2 + xi3).

    Enumerated by assigning each point a ternary digit.
    """
    n = len(gamma)
    _check_budget(n, budget, "star convolution")
    acc = _ChunkedSum()
    for code in range(3**n):
        mask12 = 0
        mask23 = 0
        rest = code
        for i in range(n):
            digit = rest % 3
            rest //= 3
            if digit <= 1:  # part 1 or part 2
                mask12 |= 1 << i
            if digit >= 1:  # part 2 or part 3
                mask23 |= 1 << i
        acc.add(
            G1(subconfiguration(gamma, mask12)) * G2(subconfiguration(gamma, mask23))
        )
    return acc.total()


def coherent_state(f: PointwiseFunction, gamma: FiniteConfiguration) -> float:
    """Product of f over the points of gamma; 1 on the empty configuration."""
    out = 1.0
    for p in gamma.points:
        out *= evaluate(f, p.velocity, p.position)
    return out


def _position_part(phi, v: Vector, x: Vector) -> float:
    # A position profile given either as a grammar tree or a callable of x.
    try:
        return evaluate(phi, v, x)
    except TypeError:
        return float(phi(x))


def coherent_state_cone(h, phi, eta: VectorDiscreteMeasure) -> float:
    """Product over atoms of <h, v_x> * phi(x); 1 on the zero measure."""
    if isinstance(h, (int, float)):
        h = (float(h),)
    h = tuple(float(c) for c in h)
    out = 1.0
    for x, v in eta.entries:
        out *= math.fsum(a * b for a, b in zip(h, v)) * _position_part(phi, v, x)
    return out


def k_transform_cone(
    G: AnyConeFunction, eta: VectorDiscreteMeasure, budget: int = K_TRANSFORM_BUDGET
) -> float:
    """Sum of G over all sub-measures of eta (subsets of its atoms)."""
    n = len(eta.entries)
    _check_budget(n, budget, "cone K-transform")
    acc = _ChunkedSum()
    for mask in range(1 << n):
        acc.add(G(submeasure(eta, mask)))
    return acc.total()


def point_added(G: AnyConfigFunction, p: MarkedPoint) -> Callable[[FiniteConfiguration], float]:
    """The shifted function gamma -> G(gamma with p adjoined)."""

    def shifted(gamma: FiniteConfiguration) -> float:
        return G(FiniteConfiguration(gamma.points + (p,)))

    return shifted

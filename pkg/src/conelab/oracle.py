"""Exact verification of the measure-level identities on finite ground sets.

A ground set discretizes the intensity: finitely many marked points with
positive weights (and optional Bernoulli inclusion probabilities).  On it,
Lebesgue-Poisson integrals become weighted subset sums, so both Minlos
reindexing identities and the Bernoulli form of K-duality can be checked to
machine precision with no analysis involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .combinat import AnyConfigFunction, _ChunkedSum
from .configuration import FiniteConfiguration, MarkedPoint
from .errors import BudgetExceeded

GROUND_BUDGET = 20
IDENTITY_BUDGET = 12


@dataclass(frozen=True)
class GroundSet:
    """Finite weighted set of marked points, canonically ordered by position."""

    atoms: tuple[MarkedPoint, ...]
    weights: tuple[float, ...]
    probabilities: tuple[float, ...] | None = None

    def __init__(
        self,
        atoms: Sequence[MarkedPoint],
        weights: Sequence[float],
        probabilities: Sequence[float] | None = None,
    ):
        order = sorted(range(len(atoms)), key=lambda i: atoms[i].position)
        atoms = tuple(atoms[i] for i in order)
        weights = tuple(float(weights[i]) for i in order)
        if probabilities is not None:
            probabilities = tuple(float(probabilities[i]) for i in order)
        if len(weights) != len(atoms):
            raise ValueError("one weight per atom required")
        if len(atoms) > GROUND_BUDGET:
            raise BudgetExceeded(
                f"ground set of {len(atoms)} atoms exceeds the cap of {GROUND_BUDGET}"
            )
        for a, b in zip(atoms, atoms[1:]):
            if a.position == b.position:
                raise ValueError(f"ground atoms share position {a.position}")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        if probabilities is not None:
            if len(probabilities) != len(atoms):
                raise ValueError("one probability per atom required")
            if any(not 0.0 < p < 1.0 for p in probabilities):
                raise ValueError("inclusion probabilities must lie in (0, 1)")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "probabilities", probabilities)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(atoms)})

    def __len__(self) -> int:
        return len(self.atoms)

    def subset(self, mask: int) -> FiniteConfiguration:
        return FiniteConfiguration._from_sorted(
            tuple(self.atoms[i] for i in range(len(self.atoms)) if mask >> i & 1)
        )

    def mask_weights(self) -> np.ndarray:
        """Product weight of every subset, indexed by bitmask."""
        n = len(self.atoms)
        masks = np.arange(1 << n)
        w = np.ones(1 << n)
        for i, wi in enumerate(self.weights):
            w *= np.where((masks >> i) & 1 == 1, wi, 1.0)
        return w

    def mask_of(self, gamma: FiniteConfiguration) -> int:
        index = self._index
        mask = 0
        for p in gamma.points:
            mask |= 1 << index[p]
        return mask


def _values_by_mask(G: AnyConfigFunction, ground: GroundSet) -> np.ndarray:
    n = len(ground)
    return np.array([float(G(ground.subset(mask))) for mask in range(1 << n)])


def _subset_sums(values: np.ndarray, n: int) -> np.ndarray:
    """Zeta transform over the subset lattice: out[m] = sum_{s subset of m} values[s]."""
    out = values.copy()
    for i in range(n):
        bit = 1 << i
        for mask in range(1 << n):
            if mask & bit:
                out[mask] += out[mask ^ bit]
    return out


def oracle_lp_sum(
    G: AnyConfigFunction, ground: GroundSet, budget: int = GROUND_BUDGET
) -> float:
    """Discrete Lebesgue-Poisson integral: sum over subsets of w(xi) * G(xi)."""
    n = len(ground)
    if n > budget:
        raise BudgetExceeded(f"{n} atoms exceeds the cap of {budget}")
    w = ground.mask_weights()
    acc = _ChunkedSum()
    for mask in range(1 << n):
        acc.add(w[mask] * G(ground.subset(mask)))
    return acc.total()


def verify_minlos_1(
    G: AnyConfigFunction,
    H: Callable[[FiniteConfiguration, FiniteConfiguration], float],
    ground: GroundSet,
    budget: int = IDENTITY_BUDGET,
) -> tuple[float, float, float]:
    """First Minlos identity on the discrete ground set.

    LHS sums w(xi1) w(xi2) G(xi1 + xi2) H(xi1, xi2) over ordered disjoint
    subset pairs (disjointness stands in for the almost-sure disjointness
    of independent draws under a non-atomic intensity); RHS sums
    w(eta) G(eta) sum_{xi subset eta} H(xi, eta minus xi).
    Returns (lhs, rhs, |lhs - rhs|).
    """
    n = len(ground)
    if n > budget:
        raise BudgetExceeded(f"{n} atoms exceeds the cap of {budget}")
    w = ground.mask_weights()

    lhs_acc = _ChunkedSum()
    for code in range(3**n):
        m1 = 0
        m2 = 0
        rest = code
        for i in range(n):
            digit = rest % 3
            rest //= 3
            if digit == 1:
                m1 |= 1 << i
            elif digit == 2:
                m2 |= 1 << i
        lhs_acc.add(
            w[m1]
            * w[m2]
            * G(ground.subset(m1 | m2))
            * H(ground.subset(m1), ground.subset(m2))
        )
    lhs = lhs_acc.total()

    rhs_acc = _ChunkedSum()
    for eta_mask in range(1 << n):
        g_val = G(ground.subset(eta_mask))
        if g_val == 0.0 and w[eta_mask] == 0.0:
            continue
        sub = eta_mask
        inner = _ChunkedSum()
        while True:
            inner.add(H(ground.subset(sub), ground.subset(eta_mask & ~sub)))
            if sub == 0:
                break
            sub = (sub - 1) & eta_mask
        rhs_acc.add(w[eta_mask] * g_val * inner.total())
    rhs = rhs_acc.total()
    return lhs, rhs, abs(lhs - rhs)


def verify_minlos_2(
    H: Callable[[FiniteConfiguration, MarkedPoint], float],
    ground: GroundSet,
    budget: int = IDENTITY_BUDGET,
) -> tuple[float, float, float]:
    """Second Minlos identity (point reindexing) on the discrete ground set.

    LHS sums w(eta) H(eta, p) over configurations and their points p; RHS
    sums w(eta) w_p H(eta + p, p) over configurations and points p outside.
    Returns (lhs, rhs, |lhs - rhs|).
    """
    n = len(ground)
    if n > budget:
        raise BudgetExceeded(f"{n} atoms exceeds the cap of {budget}")
    w = ground.mask_weights()

    lhs_acc = _ChunkedSum()
    rhs_acc = _ChunkedSum()
    for eta_mask in range(1 << n):
        eta = ground.subset(eta_mask)
        for i in range(n):
            bit = 1 << i
            if eta_mask & bit:
                lhs_acc.add(w[eta_mask] * H(eta, ground.atoms[i]))
            else:
                rhs_acc.add(
                    w[eta_mask]
                    * ground.weights[i]
                    * H(ground.subset(eta_mask | bit), ground.atoms[i])
                )
    lhs = lhs_acc.total()
    rhs = rhs_acc.total()
    return lhs, rhs, abs(lhs - rhs)


def verify_bernoulli_duality(
    G: AnyConfigFunction, ground: GroundSet, budget: int = IDENTITY_BUDGET
) -> tuple[float, float, float]:
    """Finite Bernoulli analogue of the K-duality identity.

    With independent inclusion probabilities pi_i, the process correlation
    function on subsets is the product of the included pi_i, so

        sum_xi G(xi) prod pi_i  ==  E[ (KG)(gamma) ].

    The left side is evaluated directly; the right side averages subset
    sums of G (computed by a zeta transform over the lattice) against the
    exact Bernoulli law.  Returns (lhs, rhs, |lhs - rhs|).
    """
    n = len(ground)
    if n > budget:
        raise BudgetExceeded(f"{n} atoms exceeds the cap of {budget}")
    if ground.probabilities is None:
        raise ValueError("ground set has no inclusion probabilities")
    probs = ground.probabilities

    values = _values_by_mask(G, ground)

    masks = np.arange(1 << n)
    corr = np.ones(1 << n)
    law = np.ones(1 << n)
    for i, p in enumerate(probs):
        included = (masks >> i) & 1 == 1
        corr *= np.where(included, p, 1.0)
        law *= np.where(included, p, 1.0 - p)
    lhs = math.fsum(values * corr)

    kg = _subset_sums(values, n)
    rhs = math.fsum(law * kg)
    return lhs, rhs, abs(lhs - rhs)


# --- random instances (shared by tests and the verify-exact subcommand) -------


def random_ground_set(
    gen: np.random.Generator, max_size: int, with_probabilities: bool = False
) -> GroundSet:
    """A random ground set of size uniform on {0, ..., max_size}."""
    n = int(gen.integers(0, max_size + 1))
    positions: list[float] = []
    while len(positions) < n:
        x = float(gen.uniform(0.0, 1.0))
        if x not in positions:
            positions.append(x)
    atoms = []
    for x in positions:
        v = 0.0
        while v == 0.0:
            v = float(gen.uniform(-2.0, 2.0))
        atoms.append(MarkedPoint((v,), (x,)))
    weights = gen.uniform(0.2, 1.5, n)
    probs = gen.uniform(0.05, 0.95, n) if with_probabilities else None
    return GroundSet(atoms, weights, probs)


def random_subset_function(gen: np.random.Generator, ground: GroundSet):
    """A random real function on subsets of the ground set."""
    table = gen.uniform(-1.0, 1.0, 1 << len(ground))

    def G(gamma: FiniteConfiguration) -> float:
        return float(table[ground.mask_of(gamma)])

    return G


def random_pair_function(gen: np.random.Generator, ground: GroundSet):
    """A random real function of two subsets of the ground set."""
    size = 1 << len(ground)
    table = gen.uniform(-1.0, 1.0, (size, size))

    def H(xi1: FiniteConfiguration, xi2: FiniteConfiguration) -> float:
        return float(table[ground.mask_of(xi1), ground.mask_of(xi2)])

    return H


def random_point_function(gen: np.random.Generator, ground: GroundSet):
    """A random real function of a subset and a ground atom."""
    size = 1 << len(ground)
    table = gen.uniform(-1.0, 1.0, (size, max(len(ground), 1)))
    index = {p: i for i, p in enumerate(ground.atoms)}

    def H(eta: FiniteConfiguration, p: MarkedPoint) -> float:
        return float(table[ground.mask_of(eta), index[p]])

    return H

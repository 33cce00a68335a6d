"""Finite marked configurations, vector-valued discrete measures, and the
reflection map between them.

A marked point is a (velocity, position) pair with nonzero velocity.  A
finite configuration is a pinpointed set of marked points (no two points at
the same position), kept canonically sorted so equality is structural.  A
vector-valued discrete measure is the reflected object: a finite map
position -> velocity.  Everything here is immutable after construction.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import DuplicatePosition, ZeroVelocity

Vector = tuple[float, ...]


def _as_vector(value: Sequence[float] | float) -> Vector:
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(float(c) for c in value)


def norm(v: Vector) -> float:
    return math.sqrt(math.fsum(c * c for c in v))


@dataclass(frozen=True)
class MarkedPoint:
    """A velocity-position pair; the velocity must be nonzero."""

    velocity: Vector
    position: Vector

    def __init__(self, velocity: Sequence[float] | float, position: Sequence[float] | float):
        vel = _as_vector(velocity)
        pos = _as_vector(position)
        if len(vel) != len(pos):
            raise ValueError(f"velocity has dimension {len(vel)}, position {len(pos)}")
        if all(c == 0.0 for c in vel):
            raise ZeroVelocity(f"zero velocity at position {pos}")
        object.__setattr__(self, "velocity", vel)
        object.__setattr__(self, "position", pos)

    @property
    def dim(self) -> int:
        return len(self.position)

    @property
    def speed(self) -> float:
        return norm(self.velocity)


@dataclass(frozen=True)
class FiniteConfiguration:
    """Pinpointed finite configuration, sorted lexicographically by position."""

    points: tuple[MarkedPoint, ...]

    def __init__(self, points: Iterable[MarkedPoint] = ()):
        pts = sorted(points, key=lambda p: p.position)
        for a, b in zip(pts, pts[1:]):
            if a.position == b.position:
                raise DuplicatePosition(f"two points at position {a.position}")
        object.__setattr__(self, "points", tuple(pts))

    @classmethod
    def _from_sorted(cls, points: tuple[MarkedPoint, ...]) -> "FiniteConfiguration":
        """Construct without re-sorting or checks.

        Only for internal use on point tuples that are already canonical
        (e.g. subsets of an existing configuration).
        """
        obj = object.__new__(cls)
        object.__setattr__(obj, "points", points)
        return obj

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[MarkedPoint]:
        return iter(self.points)

    @property
    def positions(self) -> tuple[Vector, ...]:
        return tuple(p.position for p in self.points)


@dataclass(frozen=True)
class VectorDiscreteMeasure:
    """Finite vector-valued discrete measure: sum of v_x * delta_x atoms."""

    entries: tuple[tuple[Vector, Vector], ...]  # (position, velocity), sorted

    def __init__(self, atoms: Mapping[Sequence[float], Sequence[float]] | Iterable[tuple[Sequence[float], Sequence[float]]] = ()):
        items = atoms.items() if isinstance(atoms, Mapping) else atoms
        entries = sorted((_as_vector(x), _as_vector(v)) for x, v in items)
        for (xa, va), (xb, _) in zip(entries, entries[1:]):
            if xa == xb:
                raise DuplicatePosition(f"two atoms at position {xa}")
        for x, v in entries:
            if all(c == 0.0 for c in v):
                raise ZeroVelocity(f"zero velocity atom at position {x}")
            if len(x) != len(v):
                raise ValueError(f"atom at {x}: velocity dimension mismatch")
        object.__setattr__(self, "entries", tuple(entries))

    @classmethod
    def _from_sorted(cls, entries: tuple[tuple[Vector, Vector], ...]) -> "VectorDiscreteMeasure":
        obj = object.__new__(cls)
        object.__setattr__(obj, "entries", entries)
        return obj

    @property
    def atoms(self) -> dict[Vector, Vector]:
        return dict(self.entries)

    def support(self) -> tuple[Vector, ...]:
        return tuple(x for x, _ in self.entries)

    def velocity_at(self, position: Sequence[float] | float) -> Vector:
        pos = _as_vector(position)
        for x, v in self.entries:
            if x == pos:
                return v
        raise KeyError(pos)

    def n_atoms(self) -> int:
        return len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class PositionWindow:
    """Axis-aligned box in position space."""

    lower: Vector
    upper: Vector

    def __init__(self, lower: Sequence[float] | float, upper: Sequence[float] | float):
        lo = _as_vector(lower)
        hi = _as_vector(upper)
        if len(lo) != len(hi):
            raise ValueError("lower/upper dimension mismatch")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"window has lower > upper: {lo} vs {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def volume(self) -> float:
        vol = 1.0
        for a, b in zip(self.lower, self.upper):
            vol *= b - a
        return vol

    def contains(self, x: Sequence[float] | float) -> bool:
        pos = _as_vector(x)
        return all(a <= c <= b for a, c, b in zip(self.lower, pos, self.upper))

    def intersect(self, other: "PositionWindow") -> "PositionWindow | None":
        lo = tuple(max(a, b) for a, b in zip(self.lower, other.lower))
        hi = tuple(min(a, b) for a, b in zip(self.upper, other.upper))
        if any(a > b for a, b in zip(lo, hi)):
            return None
        return PositionWindow(lo, hi)


@dataclass(frozen=True)
class MarkAnnulus:
    """Compact velocity set: eps <= |v| <= rmax, bounded away from 0.

    ``one_sided`` restricts to positive velocities and is meaningful only
    in dimension 1 (used for asymmetric mark laws).
    """

    eps: float
    rmax: float
    one_sided: bool = field(default=False)

    def __init__(self, eps: float, rmax: float, one_sided: bool = False):
        eps = float(eps)
        rmax = float(rmax)
        if not 0.0 < eps <= rmax:
            raise ValueError(f"need 0 < eps <= rmax, got [{eps}, {rmax}]")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "rmax", rmax)
        object.__setattr__(self, "one_sided", bool(one_sided))

    def contains(self, v: Sequence[float] | float) -> bool:
        vel = _as_vector(v)
        if self.one_sided and vel[0] < 0.0:
            return False
        return self.eps <= norm(vel) <= self.rmax

    def radial_interval(self) -> tuple[float, float]:
        return (self.eps, self.rmax)


def reflect(gamma: FiniteConfiguration) -> VectorDiscreteMeasure:
    """Map a configuration to its vector-valued discrete measure."""
    return VectorDiscreteMeasure._from_sorted(
        tuple((p.position, p.velocity) for p in gamma.points)
    )


def unreflect(eta: VectorDiscreteMeasure) -> FiniteConfiguration:
    """Inverse of :func:`reflect`: one marked point per atom."""
    return FiniteConfiguration._from_sorted(
        tuple(MarkedPoint(v, x) for x, v in eta.entries)
    )


def local_velocity(gamma: FiniteConfiguration, window: PositionWindow) -> float:
    """Sum of velocity magnitudes over points whose position lies in the window."""
    return math.fsum(p.speed for p in gamma.points if window.contains(p.position))


def project(
    eta: VectorDiscreteMeasure, window: PositionWindow, marks: MarkAnnulus
) -> VectorDiscreteMeasure:
    """Keep atoms whose position is in the window and velocity in the annulus."""
    return VectorDiscreteMeasure._from_sorted(
        tuple(
            (x, v)
            for x, v in eta.entries
            if window.contains(x) and marks.contains(v)
        )
    )


def validate_pinpointed(points: Iterable[MarkedPoint]) -> FiniteConfiguration:
    """Sort canonically; raise unless positions are distinct and velocities nonzero."""
    return FiniteConfiguration(points)


# --- CSV serialization -------------------------------------------------------
#
# One marked point per row, columns x_1..x_d,v_1..v_d, header required.

def csv_header(dim: int) -> list[str]:
    return [f"x_{i+1}" for i in range(dim)] + [f"v_{i+1}" for i in range(dim)]


def configuration_to_csv(gamma: FiniteConfiguration, dim: int | None = None) -> str:
    if dim is None:
        dim = gamma.points[0].dim if gamma.points else 1
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(dim))
    for p in gamma.points:
        writer.writerow([repr(c) for c in p.position] + [repr(c) for c in p.velocity])
    return buf.getvalue()


def configuration_from_csv(text: str) -> FiniteConfiguration:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("missing header line")
    header = rows[0]
    if len(header) % 2 != 0 or not header or header[0] != "x_1":
        raise ValueError(f"unrecognized header {header!r}")
    dim = len(header) // 2
    if header != csv_header(dim):
        raise ValueError(f"unrecognized header {header!r}")
    points = []
    for row in rows[1:]:
        if not row:
            continue
        vals = [float(c) for c in row]
        if len(vals) != 2 * dim:
            raise ValueError(f"row has {len(vals)} fields, expected {2 * dim}")
        points.append(MarkedPoint(vals[dim:], vals[:dim]))
    return FiniteConfiguration(points)


def measure_to_csv(eta: VectorDiscreteMeasure, dim: int | None = None) -> str:
    return configuration_to_csv(unreflect(eta), dim)


def measure_from_csv(text: str) -> VectorDiscreteMeasure:
    return reflect(configuration_from_csv(text))

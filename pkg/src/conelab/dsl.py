"""Closed grammar of test functions psi(v, x), with pointwise evaluation and
integration against the truncated intensity.

Grammar (whitespace insignificant, decimal numbers only):

    expr     := term (('+' | '*') term)*
    term     := number '*' term
              | number
              | 'ind(v:' interval ';x:' box ')'
              | 'vnorm^' int
              | 'lin(' vector ')'
              | 'xbox(' box ')'
              | '(' expr ')'
    interval := '[' number ',' number ']'
    box      := '[' number ',' number ']'        -- dimension 1
              | '[' vector ';' vector ']'        -- general dimension
    vector   := number (',' number)*

'+' and '*' share one precedence level and associate left to right; use
parentheses to group.  A number not followed by '*' is a constant leaf.

Integration against sigma expands the tree into monomials
c * |v|^p * prod<h_j,v> * indicator products; position factors reduce to
box-intersection volumes and velocity factors to radial integrals with
exact angular moments, so indicator integrals carry no quadrature noise
beyond the one-dimensional radial rule.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Union

from .configuration import MarkAnnulus, PositionWindow, Vector, norm
from .errors import FunctionSyntaxError, QuadratureFailure, UnknownSymbol
from .intensity import (
    IntensitySpec,
    _sides,
    lambda_callable_integral,
    radial_weight_integral,
    velocity_monomial_integral,
)


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class IndicatorPhase:
    marks: MarkAnnulus
    window: PositionWindow


@dataclass(frozen=True)
class RadialMark:
    power: int

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("radial mark power must be >= 0")


@dataclass(frozen=True)
class LinearMark:
    h: Vector

    def __init__(self, h):
        if isinstance(h, (int, float)):
            h = (float(h),)
        object.__setattr__(self, "h", tuple(float(c) for c in h))


@dataclass(frozen=True)
class PositionBump:
    window: PositionWindow


@dataclass(frozen=True)
class Sum:
    left: "FunctionSpec"
    right: "FunctionSpec"


@dataclass(frozen=True)
class Product:
    left: "FunctionSpec"
    right: "FunctionSpec"


@dataclass(frozen=True)
class Scale:
    factor: float
    inner: "FunctionSpec"


FunctionSpec = Union[
    Const, IndicatorPhase, RadialMark, LinearMark, PositionBump, Sum, Product, Scale
]

PointwiseFunction = Union[FunctionSpec, Callable[[Vector, Vector], float]]


def evaluate(f: PointwiseFunction, v, x) -> float:
    """Evaluate a test function at velocity v and position x."""
    if isinstance(v, (int, float)):
        v = (float(v),)
    else:
        v = tuple(float(c) for c in v)
    if isinstance(x, (int, float)):
        x = (float(x),)
    else:
        x = tuple(float(c) for c in x)
    return _eval(f, v, x)


def _eval(f, v: Vector, x: Vector) -> float:
    if isinstance(f, Const):
        return f.value
    if isinstance(f, IndicatorPhase):
        return 1.0 if f.marks.contains(v) and f.window.contains(x) else 0.0
    if isinstance(f, RadialMark):
        return norm(v) ** f.power
    if isinstance(f, LinearMark):
        if len(f.h) != len(v):
            raise ValueError(f"lin vector has dimension {len(f.h)}, velocity {len(v)}")
        return math.fsum(a * b for a, b in zip(f.h, v))
    if isinstance(f, PositionBump):
        return 1.0 if f.window.contains(x) else 0.0
    if isinstance(f, Sum):
        return _eval(f.left, v, x) + _eval(f.right, v, x)
    if isinstance(f, Product):
        return _eval(f.left, v, x) * _eval(f.right, v, x)
    if isinstance(f, Scale):
        return f.factor * _eval(f.inner, v, x)
    if callable(f):
        return float(f(v, x))
    raise TypeError(f"not a test function: {f!r}")


# --- parsing ------------------------------------------------------------------

_NUMBER_RE = re.compile(r"-?(\d+\.?\d*|\.\d+)")
_INT_RE = re.compile(r"\d+")
_IDENT_RE = re.compile(r"[a-z]+")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def skip_ws(self) -> None:
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.i] if self.i < len(self.text) else ""

    def expect(self, token: str) -> None:
        self.skip_ws()
        if not self.text.startswith(token, self.i):
            raise FunctionSyntaxError(f"expected {token!r}", self.i)
        self.i += len(token)

    def match_re(self, pattern: re.Pattern, what: str):
        self.skip_ws()
        m = pattern.match(self.text, self.i)
        if m is None:
            raise FunctionSyntaxError(f"expected {what}", self.i)
        self.i = m.end()
        return m.group(0)

    def number(self) -> float:
        return float(self.match_re(_NUMBER_RE, "a number"))

    def integer(self) -> int:
        return int(self.match_re(_INT_RE, "an integer"))

    def vector(self) -> Vector:
        parts = [self.number()]
        while self.peek() == ",":
            self.expect(",")
            parts.append(self.number())
        return tuple(parts)

    def box(self) -> PositionWindow:
        self.expect("[")
        first = self.vector()
        if self.peek() == ";":
            self.expect(";")
            second = self.vector()
            self.expect("]")
            if len(first) != len(second):
                raise FunctionSyntaxError("box corner dimensions differ", self.i)
            return PositionWindow(first, second)
        self.expect("]")
        if len(first) != 2:
            raise FunctionSyntaxError(
                "one-dimensional box needs exactly two numbers", self.i
            )
        return PositionWindow((first[0],), (first[1],))

    def interval(self) -> MarkAnnulus:
        self.expect("[")
        lo = self.number()
        self.expect(",")
        hi = self.number()
        self.expect("]")
        return MarkAnnulus(lo, hi)

    def term(self) -> FunctionSpec:
        c = self.peek()
        if c == "(":
            self.expect("(")
            node = self.expr()
            self.expect(")")
            return node
        if c.isdigit() or c == "-" or c == ".":
            value = self.number()
            save = self.i
            self.skip_ws()
            if self.i < len(self.text) and self.text[self.i] == "*":
                self.i += 1
                return Scale(value, self.term())
            self.i = save
            return Const(value)
        if c.isalpha():
            start = self.i
            ident = self.match_re(_IDENT_RE, "a symbol")
            if ident == "ind":
                self.expect("(")
                self.expect("v")
                self.expect(":")
                marks = self.interval()
                self.expect(";")
                self.expect("x")
                self.expect(":")
                window = self.box()
                self.expect(")")
                return IndicatorPhase(marks, window)
            if ident == "vnorm":
                self.expect("^")
                return RadialMark(self.integer())
            if ident == "lin":
                self.expect("(")
                h = self.vector()
                self.expect(")")
                return LinearMark(h)
            if ident == "xbox":
                self.expect("(")
                window = self.box()
                self.expect(")")
                return PositionBump(window)
            raise UnknownSymbol(ident, start)
        raise FunctionSyntaxError("expected a term", self.i)

    def expr(self) -> FunctionSpec:
        node = self.term()
        while True:
            c = self.peek()
            if c == "+":
                self.expect("+")
                node = Sum(node, self.term())
            elif c == "*":
                self.expect("*")
                node = Product(node, self.term())
            else:
                return node


def parse_function(text: str) -> FunctionSpec:
    """Parse grammar text into a function tree."""
    parser = _Parser(text)
    node = parser.expr()
    parser.skip_ws()
    if parser.i != len(text):
        raise FunctionSyntaxError("unexpected trailing input", parser.i)
    return node


# --- rendering ----------------------------------------------------------------


def _render_number(x: float) -> str:
    out = repr(float(x))
    if "e" in out or "E" in out:
        # exponent notation is outside the grammar; emit the exact
        # decimal expansion instead
        out = format(Decimal(x), "f")
    if out.endswith(".0"):
        out = out[:-2]
    return out


def _render_box(window: PositionWindow) -> str:
    if window.dim == 1:
        return f"[{_render_number(window.lower[0])},{_render_number(window.upper[0])}]"
    lo = ",".join(_render_number(c) for c in window.lower)
    hi = ",".join(_render_number(c) for c in window.upper)
    return f"[{lo};{hi}]"


def _render_operand(f: FunctionSpec) -> str:
    if isinstance(f, (Sum, Product)):
        return f"({render_function(f)})"
    return render_function(f)


def _ends_with_bare_number(f: FunctionSpec) -> bool:
    # Renderings ending in a bare number would fuse with a following '*'
    # into a Scale; such product left operands get parenthesized.
    if isinstance(f, Const):
        return True
    if isinstance(f, Scale):
        return _ends_with_bare_number(f.inner)
    if isinstance(f, (Sum, Product)):
        if isinstance(f.right, (Sum, Product)):
            return False  # the right operand is rendered parenthesized
        return _ends_with_bare_number(f.right)
    return False


def _render_product_left(f: FunctionSpec) -> str:
    if _ends_with_bare_number(f):
        return f"({render_function(f)})"
    return render_function(f)


def render_function(f: FunctionSpec) -> str:
    """Inverse of :func:`parse_function`: text that reparses to an equal tree."""
    if isinstance(f, Const):
        return _render_number(f.value)
    if isinstance(f, IndicatorPhase):
        if f.marks.one_sided:
            raise ValueError("one-sided annuli are not expressible in the grammar")
        return (
            f"ind(v:[{_render_number(f.marks.eps)},{_render_number(f.marks.rmax)}];"
            f"x:{_render_box(f.window)})"
        )
    if isinstance(f, RadialMark):
        return f"vnorm^{f.power}"
    if isinstance(f, LinearMark):
        return f"lin({','.join(_render_number(c) for c in f.h)})"
    if isinstance(f, PositionBump):
        return f"xbox({_render_box(f.window)})"
    if isinstance(f, Scale):
        return f"{_render_number(f.factor)}*{_render_operand(f.inner)}"
    if isinstance(f, Sum):
        return f"{render_function(f.left)} + {_render_operand(f.right)}"
    if isinstance(f, Product):
        return f"{_render_product_left(f.left)} * {_render_operand(f.right)}"
    raise TypeError(f"not a renderable function tree: {f!r}")


# --- integration against sigma -------------------------------------------------


@dataclass(frozen=True)
class _Monomial:
    coeff: float
    radial_power: int
    linear: tuple[Vector, ...]
    annuli: tuple[MarkAnnulus, ...]
    boxes: tuple[PositionWindow, ...]


def _expand(f: FunctionSpec) -> list[_Monomial]:
    if isinstance(f, Const):
        return [_Monomial(f.value, 0, (), (), ())]
    if isinstance(f, IndicatorPhase):
        return [_Monomial(1.0, 0, (), (f.marks,), (f.window,))]
    if isinstance(f, RadialMark):
        return [_Monomial(1.0, f.power, (), (), ())]
    if isinstance(f, LinearMark):
        return [_Monomial(1.0, 0, (f.h,), (), ())]
    if isinstance(f, PositionBump):
        return [_Monomial(1.0, 0, (), (), (f.window,))]
    if isinstance(f, Sum):
        return _expand(f.left) + _expand(f.right)
    if isinstance(f, Scale):
        return [
            _Monomial(f.factor * m.coeff, m.radial_power, m.linear, m.annuli, m.boxes)
            for m in _expand(f.inner)
        ]
    if isinstance(f, Product):
        out = []
        for a in _expand(f.left):
            for b in _expand(f.right):
                out.append(
                    _Monomial(
                        a.coeff * b.coeff,
                        a.radial_power + b.radial_power,
                        a.linear + b.linear,
                        a.annuli + b.annuli,
                        a.boxes + b.boxes,
                    )
                )
        return out
    raise TypeError(f"cannot expand {f!r}; integration needs a grammar tree")


def _intersect_marks(base: MarkAnnulus, annuli: tuple[MarkAnnulus, ...]):
    """Intersection as (lo, hi, sides); None when empty."""
    lo, hi = base.eps, base.rmax
    sides = set(_sides(base))
    for a in annuli:
        lo = max(lo, a.eps)
        hi = min(hi, a.rmax)
        sides &= set(_sides(a))
    if hi <= lo or not sides:
        return None
    return lo, hi, tuple(sorted(sides, reverse=True))


def _intersect_boxes(base: PositionWindow, boxes: tuple[PositionWindow, ...]):
    window = base
    for b in boxes:
        window = window.intersect(b)
        if window is None:
            return None
    return window


def integrate_sigma(f: FunctionSpec, sigma: IntensitySpec) -> float:
    """Integral of f(v, x) against the truncated intensity on annulus x box."""
    parts = []
    for mono in _expand(f):
        if mono.coeff == 0.0:
            continue
        window = _intersect_boxes(sigma.window, mono.boxes)
        if window is None:
            continue
        volume = window.volume()
        if volume == 0.0:
            continue
        marks = _intersect_marks(sigma.marks, mono.annuli)
        if marks is None:
            continue
        lo, hi, sides = marks
        vel = velocity_monomial_integral(
            sigma.law, lo, hi, sides, mono.radial_power, mono.linear
        )
        parts.append(mono.coeff * volume * vel)
    return math.fsum(parts)


def _collect_boxes(f: FunctionSpec) -> list[PositionWindow]:
    if isinstance(f, IndicatorPhase):
        return [f.window]
    if isinstance(f, PositionBump):
        return [f.window]
    if isinstance(f, (Sum, Product)):
        return _collect_boxes(f.left) + _collect_boxes(f.right)
    if isinstance(f, Scale):
        return _collect_boxes(f.inner)
    return []


def _collect_annuli(f: FunctionSpec) -> list[MarkAnnulus]:
    if isinstance(f, IndicatorPhase):
        return [f.marks]
    if isinstance(f, (Sum, Product)):
        return _collect_annuli(f.left) + _collect_annuli(f.right)
    if isinstance(f, Scale):
        return _collect_annuli(f.inner)
    return []


def _collect_directions(f: FunctionSpec) -> list[Vector]:
    if isinstance(f, LinearMark):
        return [f.h]
    if isinstance(f, (Sum, Product)):
        return _collect_directions(f.left) + _collect_directions(f.right)
    if isinstance(f, Scale):
        return _collect_directions(f.inner)
    return []


def _position_cells(f: FunctionSpec, window: PositionWindow):
    """Grid cells of the window on which the tree is constant in x.

    Yields (midpoint, volume) for each cell of positive volume.
    """
    edges_per_axis = []
    boxes = _collect_boxes(f)
    for axis in range(window.dim):
        cuts = {window.lower[axis], window.upper[axis]}
        for b in boxes:
            if axis < b.dim:
                for c in (b.lower[axis], b.upper[axis]):
                    if window.lower[axis] < c < window.upper[axis]:
                        cuts.add(c)
        edges_per_axis.append(sorted(cuts))

    def walk(axis: int, mid: list[float], vol: float):
        if axis == window.dim:
            yield tuple(mid), vol
            return
        edges = edges_per_axis[axis]
        for a, b in zip(edges, edges[1:]):
            if b <= a:
                continue
            mid.append(0.5 * (a + b))
            yield from walk(axis + 1, mid, vol * (b - a))
            mid.pop()

    yield from walk(0, [], 1.0)


def integrate_sigma_transformed(
    f: FunctionSpec, sigma: IntensitySpec, transform: Callable[[float], float]
) -> float:
    """Integral of transform(f(v, x)) against the truncated intensity.

    Used for non-polynomial integrands such as exp(f) - 1; except in
    dimension 1, f may depend on the velocity direction through at most
    one family of parallel lin() vectors.
    """
    directions = _collect_directions(f)
    direction: Vector | None = None
    if directions and sigma.law.d > 1:
        ref = directions[0]
        for h in directions[1:]:
            dot = math.fsum(a * b for a, b in zip(ref, h))
            n2 = (norm(ref) * norm(h)) ** 2
            if abs(dot * dot - n2) > 1e-18 * max(n2, 1e-300):
                raise QuadratureFailure(
                    "transformed integrand mixes non-parallel lin() directions"
                )
        direction = ref
    breakpoints = []
    for a in _collect_annuli(f):
        breakpoints.extend((a.eps, a.rmax))
    parts = []
    for mid, volume in _position_cells(f, sigma.window):
        value = lambda_callable_integral(
            sigma.law,
            sigma.marks,
            lambda v: transform(_eval(f, v, mid)),
            direction=direction,
            radial_breakpoints=tuple(breakpoints),
        )
        parts.append(volume * value)
    return math.fsum(parts)


def position_profile_integral(
    f: FunctionSpec, window: PositionWindow, transform: Callable[[float], float]
) -> float:
    """Integral over the window of transform(f evaluated at position x).

    f must not depend on the velocity (no vnorm/lin/ind leaves); it is a
    piecewise-constant position profile, so the integral is an exact sum
    over grid cells.
    """
    if _collect_directions(f) or _collect_annuli(f) or _has_radial(f):
        raise ValueError("position profile must not depend on the velocity")
    dummy_v = (1.0,) * window.dim
    parts = []
    for mid, volume in _position_cells(f, window):
        parts.append(volume * transform(_eval(f, dummy_v, mid)))
    return math.fsum(parts)


def _has_radial(f: FunctionSpec) -> bool:
    if isinstance(f, RadialMark):
        return True
    if isinstance(f, (Sum, Product)):
        return _has_radial(f.left) or _has_radial(f.right)
    if isinstance(f, Scale):
        return _has_radial(f.inner)
    return False

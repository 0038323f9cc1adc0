"""Census of central-patch classes over all tilings of a system.

For a fixed radius R the set of lattice cells whose cube meets the
central ball depends only on the shift s of the tiling, and the map
s -> cell set is piecewise constant on [0,1)^d.  Over each piece the
realizable patch classes are exactly the legal windows of the system
restricted to that cell set, since field and shift can be prescribed
independently.  This module computes the decomposition and the classes.

d=1.  The cell set is the integer interval [ceil(-R-s-1), floor(R-s)],
which jumps exactly when s crosses frac(R) or frac(-R).  The census is
exact and complete.

d=2.  Membership of cell z is q_z(s) <= 0 where q_z sums one monotone
quadratic per axis, so the boundary in shift space is an arc of the
radius-R circle around an integer point, or an axis-parallel rational
line for cells aligned with the origin column/row.  Open faces of the
arrangement are found by quadtree subdivision with exact corner
arithmetic; pieces on a single curve are reported from the cap squares
(their cell set is the inner face's plus the tangent cells); rational
curve intersections and tangencies are enumerated exactly, including
the tangency of neighboring circles at half-integer points when 2R is
an integer distance.  Squares at the depth cap crossed by two or more
distinct curves are not resolved; they clear the ``complete`` flag.
All shifts of concrete tilings are rational, and irrational shifts never
realize a class that rational ones miss except on such unresolved
pieces, so ``complete=True`` really does mean the census is exhaustive.

Intended for small radii (R up to about 2 in d=2); the d=1 path is
cheap for any radius the rest of the package uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from .errors import ParameterError
from .qnum import Vec, isqrt_exact
from .systems import Cell, SubstitutionSystem
from .tilings import PatchClass, ball_cells


@dataclass(frozen=True)
class ShiftRegion:
    """A piece of shift space with constant cell set.

    kind is one of "point", "half_open", "interval" (d=1) or "face",
    "edge", "vertex" (d=2).  ``sample`` lies in the region except for
    kind "edge", where it is the center of a cap square through which
    the single curve passes.
    """

    kind: str
    sample: Vec
    lo: Vec | None = None
    hi: Vec | None = None


@dataclass
class CensusRow:
    cells: tuple[Cell, ...]
    regions: list[ShiftRegion]
    classes: frozenset


@dataclass
class Census:
    radius: Fraction
    dim: int
    rows: list[CensusRow]
    complete: bool

    def all_classes(self) -> frozenset:
        out = set()
        for row in self.rows:
            out |= row.classes
        return frozenset(out)


def classes_for_cells(
    system: SubstitutionSystem, cells: tuple[Cell, ...]
) -> frozenset:
    """All patch classes a tiling can show on the given cell set."""
    if not cells:
        return frozenset()
    d = system.dim
    base = tuple(min(c[i] for c in cells) for i in range(d))
    width = max(max(c[i] for c in cells) - base[i] for i in range(d)) + 1
    # offsets in a PatchClass are relative to the lex-least cell, which for
    # non-rectangular cell sets need not be the componentwise minimum
    lex = min(cells)
    windows = system.legal_windows(width)
    out = set()
    for w in windows:
        if d == 1:
            tiles = frozenset(((c[0] - lex[0],), w[c[0] - base[0]]) for c in cells)
        else:
            tiles = frozenset(
                (
                    (c[0] - lex[0], c[1] - lex[1]),
                    w[c[0] - base[0]][c[1] - base[1]],
                )
                for c in cells
            )
        out.add(PatchClass(tiles))
    return frozenset(out)


# === d = 1 ============================================================


def _census_1d(system: SubstitutionSystem, radius: Fraction) -> Census:
    fr = lambda q: q - math.floor(q)
    thresholds = sorted({fr(radius), fr(-radius)})
    cuts = sorted(set(thresholds) | {Fraction(0), Fraction(1)})
    regions: list[ShiftRegion] = []
    for i in range(len(cuts) - 1):
        lo, hi = cuts[i], cuts[i + 1]
        if lo in thresholds:
            regions.append(ShiftRegion("point", (lo,), (lo,), (lo,)))
            regions.append(ShiftRegion("interval", ((lo + hi) / 2,), (lo,), (hi,)))
        else:
            regions.append(ShiftRegion("half_open", ((lo + hi) / 2,), (lo,), (hi,)))
    rows: dict[tuple, CensusRow] = {}
    for reg in regions:
        cells = tuple(ball_cells(reg.sample, radius, 1))
        row = rows.get(cells)
        if row is None:
            row = CensusRow(cells, [], classes_for_cells(system, cells))
            rows[cells] = row
        row.regions.append(reg)
    return Census(radius, 1, list(rows.values()), complete=True)


# === d = 2 ============================================================
#
# Per-axis term of q_z: integer center c and direction:
#   z >= 0   -> (s - (-z))^2, increasing on [0,1)
#   z == -1  -> 0
#   z <= -2  -> (s - (-z-1))^2, decreasing on [0,1)


def _axis_center(z: int) -> int | None:
    if z == -1:
        return None
    return -z if z >= 0 else -z - 1


@dataclass(frozen=True)
class _Curve:
    kind: str  # "circle" | "line"
    center: tuple[int, int] | None = None
    axis: int | None = None
    value: Fraction | None = None


def _cell_curves(z: Cell, radius: Fraction) -> list[_Curve]:
    cx, cy = _axis_center(z[0]), _axis_center(z[1])
    if cx is None and cy is None:
        return []
    if cx is None or cy is None:
        axis = 1 if cx is None else 0
        c = cy if cx is None else cx
        out = []
        for v in (c - radius, c + radius):
            if 0 <= v < 1:
                out.append(_Curve("line", axis=axis, value=v))
        return out
    return [_Curve("circle", center=(cx, cy))]


def _axis_range(z: int, lo: Fraction, hi: Fraction):
    """(min, max, min attained, max attained) of the axis term over
    [lo, hi] intersected with the shift domain.  Shifts live in [0,1),
    so a bound reached only at coordinate 1 is never attained; the term
    is monotone, which pins each bound to one end."""
    c = _axis_center(z)
    if c is None:
        return Fraction(0), Fraction(0), True, True
    hi_in = hi != 1
    if z >= 0:  # center c <= lo: increasing
        return (lo - c) ** 2, (hi - c) ** 2, True, hi_in
    # center c >= hi: decreasing
    return (hi - c) ** 2, (lo - c) ** 2, hi_in, True


def _q_interval(z: Cell, sq: tuple, radius: Fraction):
    """(min, max, min attained, max attained) of q_z over the square."""
    (ax, ay), h = sq
    xlo, xhi, xla, xha = _axis_range(z[0], ax, ax + h)
    ylo, yhi, yla, yha = _axis_range(z[1], ay, ay + h)
    r2 = radius * radius
    return xlo + ylo - r2, xhi + yhi - r2, xla and yla, xha and yha


def _curve_meets_square(curve: _Curve, sq: tuple, radius: Fraction) -> bool:
    (ax, ay), h = sq
    if curve.kind == "line":
        lo = (ax, ay)[curve.axis]
        return lo <= curve.value <= lo + h
    cx, cy = curve.center
    def rng(lo, c):
        dlo = Fraction(0) if lo <= c <= lo + h else min(abs(lo - c), abs(lo + h - c))
        dhi = max(abs(lo - c), abs(lo + h - c))
        return dlo * dlo, dhi * dhi
    xlo, xhi = rng(ax, cx)
    ylo, yhi = rng(ay, cy)
    r2 = radius * radius
    return xlo + ylo <= r2 <= xhi + yhi


def _q_at(z: Cell, p: Vec, radius: Fraction) -> Fraction:
    total = -radius * radius
    for i in range(2):
        c = _axis_center(z[i])
        if c is not None:
            total += (p[i] - c) ** 2
    return total


def _side_samples(curve: _Curve, sq: tuple, radius: Fraction) -> list[Vec]:
    """Exact points of the closed square strictly on either side of the
    curve, at most one per side.  May return fewer when one side has no
    sample among the probe points; callers treat that conservatively."""
    (ax, ay), h = sq
    if curve.kind == "line":
        lo = (ax, ay)[curve.axis]
        mid_other = (ay if curve.axis == 0 else ax) + h / 2
        out = []
        for bound in (lo, lo + h):
            if curve.value != bound:
                coord = (curve.value + bound) / 2
                p = (coord, mid_other) if curve.axis == 0 else (mid_other, coord)
                out.append(p)
        return out
    c = curve.center
    r2 = radius * radius
    probes = [
        (ax + fx * h, ay + fy * h)
        for fx in (Fraction(0), Fraction(1, 2), Fraction(1))
        for fy in (Fraction(0), Fraction(1, 2), Fraction(1))
        # probes at coordinate 1 are outside the shift domain [0,1)^2
        if ax + fx * h < 1 and ay + fy * h < 1
    ]
    inner = outer = None
    for p in probes:
        d2 = (p[0] - c[0]) ** 2 + (p[1] - c[1]) ** 2
        if d2 < r2 and inner is None:
            inner = p
        elif d2 > r2 and outer is None:
            outer = p
    return [p for p in (inner, outer) if p is not None]


def _frac_sqrt(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    rn = isqrt_exact(q.numerator)
    rd = isqrt_exact(q.denominator)
    if rn is None or rd is None:
        return None
    return Fraction(rn, rd)


def _rational_vertices(curves: list[_Curve], radius: Fraction) -> set[Vec]:
    """All rational pairwise intersections of the arrangement curves that
    lie in [0,1)^2.  Irrational intersections are never the shift of a
    tiling, so they are deliberately dropped."""
    out: set[Vec] = set()
    r2 = radius * radius

    def keep(p: Vec):
        if 0 <= p[0] < 1 and 0 <= p[1] < 1:
            out.add(p)

    lines = [c for c in curves if c.kind == "line"]
    circles = [c for c in curves if c.kind == "circle"]
    for i, a in enumerate(lines):
        for b in lines[i + 1 :]:
            if a.axis != b.axis:
                v = [Fraction(0), Fraction(0)]
                v[a.axis] = a.value
                v[b.axis] = b.value
                keep(tuple(v))
    for ln in lines:
        for ci in circles:
            c = ci.center
            t = r2 - (ln.value - c[ln.axis]) ** 2
            root = _frac_sqrt(t)
            if root is None:
                continue
            other = 1 - ln.axis
            for sgn in (1, -1):
                v = [Fraction(0), Fraction(0)]
                v[ln.axis] = ln.value
                v[other] = c[other] + sgn * root
                keep(tuple(v))
    for i, a in enumerate(circles):
        for b in circles[i + 1 :]:
            dx = b.center[0] - a.center[0]
            dy = b.center[1] - a.center[1]
            d2 = Fraction(dx * dx + dy * dy)
            if d2 == 0 or d2 > 4 * r2:
                continue
            mx = Fraction(a.center[0] + b.center[0], 2)
            my = Fraction(a.center[1] + b.center[1], 2)
            if d2 == 4 * r2:
                keep((mx, my))  # external tangency at the center midpoint
                continue
            u = _frac_sqrt(r2 / d2 - Fraction(1, 4))
            if u is None:
                continue
            for sgn in (1, -1):
                keep((mx - sgn * u * dy, my + sgn * u * dx))
    return out


def _census_2d(system: SubstitutionSystem, radius: Fraction, max_depth: int) -> Census:
    lo_z = math.ceil(-radius - 2)
    hi_z = math.floor(radius)
    candidates = [z for z in product(range(lo_z, hi_z + 1), repeat=2)]
    curve_of = {z: _cell_curves(z, radius) for z in candidates}
    all_curves = sorted(
        {c for cs in curve_of.values() for c in cs},
        key=lambda c: (c.kind, c.center or (0, 0), c.axis or 0, c.value or 0),
    )

    rows: dict[tuple, CensusRow] = {}
    complete = True

    def emit(cells: frozenset, region: ShiftRegion):
        key = tuple(sorted(cells))
        row = rows.get(key)
        if row is None:
            row = CensusRow(key, [], classes_for_cells(system, key))
            rows[key] = row
        if len(row.regions) < 8:  # keep reports readable
            row.regions.append(region)

    # exact vertices first: tangencies can carry classes no face shows
    for v in _rational_vertices(all_curves, radius):
        cells = frozenset(ball_cells(v, radius, 2))
        emit(cells, ShiftRegion("vertex", v))

    stack = [((Fraction(0), Fraction(0)), Fraction(1), candidates, frozenset())]
    while stack:
        corner, h, undecided, inside = stack.pop()
        sq = (corner, h)
        ins = set(inside)
        crossing = []
        for z in undecided:
            qlo, qhi, lo_att, _ = _q_interval(z, sq, radius)
            if qhi <= 0:
                # q = 0 on the boundary still means membership (tangency
                # counts), so the cell set is constant here either way
                ins.add(z)
            elif qlo > 0 or (qlo == 0 and not lo_att):
                pass
            else:
                crossing.append(z)
        center = (corner[0] + h / 2, corner[1] + h / 2)
        if not crossing:
            emit(frozenset(ins), ShiftRegion("face", center, corner, (corner[0] + h, corner[1] + h)))
            continue
        if h > Fraction(1, 2**max_depth):
            h2 = h / 2
            for dx, dy in ((0, 0), (0, 1), (1, 0), (1, 1)):
                stack.append(
                    (
                        (corner[0] + dx * h2, corner[1] + dy * h2),
                        h2,
                        crossing,
                        frozenset(ins),
                    )
                )
            continue
        active: set[_Curve] = set()
        for z in crossing:
            for c in curve_of[z]:
                if _curve_meets_square(c, sq, radius):
                    active.add(c)
        if len(active) == 1:
            # one curve through the cap square: report the piece on the
            # curve (every crossing cell sits at distance exactly R there,
            # and tangency counts) and the face on each side
            curve = next(iter(active))
            emit(
                frozenset(ins) | set(crossing),
                ShiftRegion("edge", center, corner, None),
            )
            samples = _side_samples(curve, sq, radius)
            for p in samples:
                side = {z for z in crossing if _q_at(z, p, radius) < 0}
                emit(frozenset(ins) | side, ShiftRegion("face", p, corner, None))
            if curve.kind == "circle" and len(samples) < 2:
                complete = False
        else:
            complete = False

    return Census(radius, 2, list(rows.values()), complete)


def census(system: SubstitutionSystem, radius, max_depth: int = 9) -> Census:
    radius = Fraction(radius)
    if radius <= 0:
        raise ParameterError("census radius must be positive")
    if system.dim == 1:
        return _census_1d(system, radius)
    return _census_2d(system, radius, max_depth)

"""Tilings of R^d built from nested supertiles, and their central patches.

A tiling here is a labeled unit-cube tiling: an assignment of labels to
the lattice Z^d (the *field*) together with a rational shift s in [0,1)^d.
The tile over lattice cell z is the cube z + s + [0,1]^d carrying the
field's label at z.

Fields are lazy: the base field reads labels off an eventually periodic
supertile address, and map stages wrap further lazy fields around it.
Nothing is ever materialized beyond the cells a patch query touches.

Addresses.  An address lists, level by level, where the level-k supertile
sits inside the level-(k+1) one: entry k is a pair (c_k, a_k) with a_k
the label of the level-k supertile containing the origin cell and c_k its
position in the next block.  Consistency: rule(a_{k+1}) places a_k at
c_k.  The level-k supertile then occupies the cells [-p_k, n^k - p_k)^d
where p_k = sum_{j<k} c_j n^j, so the origin cell sits at offset p_k
inside it.  We store a finite head plus a repeating cycle; the cycle must
move in both directions on every axis (some digit > 0 and some < n-1),
which makes the supertiles exhaust Z^d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product

from .errors import StructuralError
from .qnum import Vec, vec_floor, vec_frac, vec_sub, zero_vec
from .systems import Cell, SubstitutionSystem

Entry = tuple[Cell, str]


@dataclass(frozen=True)
class Address:
    system: SubstitutionSystem
    head: tuple[Entry, ...]
    cycle: tuple[Entry, ...]

    def __post_init__(self):
        sys = self.system
        if len(self.cycle) == 0:
            raise StructuralError("address cycle must be nonempty")
        seq = self.head + self.cycle
        for k, (cell, label) in enumerate(seq):
            if label not in sys.label_index:
                raise StructuralError(f"address entry {k}: unknown label {label!r}")
            if len(cell) != sys.dim or not all(0 <= c < sys.expansion for c in cell):
                raise StructuralError(f"address entry {k}: cell {cell} out of range")
        # consistency along head+cycle and around the cycle
        for k in range(len(seq)):
            cell, label = seq[k]
            if k + 1 < len(seq):
                parent = seq[k + 1][1]
            else:
                parent = self.cycle[0][1]
            if sys.child_label(parent, cell) != label:
                raise StructuralError(
                    f"address entry {k}: rule({parent!r})[{cell}] != {label!r}"
                )
        n = sys.expansion
        for axis in range(sys.dim):
            digits = [cell[axis] for cell, _ in self.cycle]
            if not (any(c > 0 for c in digits) and any(c < n - 1 for c in digits)):
                raise StructuralError(
                    f"cycle does not cover axis {axis}: digits {digits}"
                )

    def entry(self, k: int) -> Entry:
        if k < len(self.head):
            return self.head[k]
        return self.cycle[(k - len(self.head)) % len(self.cycle)]

    def origin_offset(self, k: int) -> tuple[int, ...]:
        """p_k: position of the origin cell inside the level-k supertile."""
        n = self.system.expansion
        p = [0] * self.system.dim
        w = 1
        for j in range(k):
            cell = self.entry(j)[0]
            for axis in range(self.system.dim):
                p[axis] += cell[axis] * w
            w *= n
        return tuple(p)

    def key(self):
        return ("address", self.system.name, self.head, self.cycle)


def reference_address(system: SubstitutionSystem) -> Address:
    """Canonical base point: empty head over the least covering cycle."""
    return Address(system, head=(), cycle=system.find_covering_cycle())


# === fields ===========================================================


class Field:
    """Lazy label assignment on Z^d.  Subclasses implement label(z)."""

    system: SubstitutionSystem

    def label(self, z: Cell) -> str:
        raise NotImplementedError

    def key(self):
        """Structural identity, used for caching.  Equal keys imply equal
        fields; the converse is not required."""
        raise NotImplementedError


class AddressField(Field):
    def __init__(self, address: Address):
        self.address = address
        self.system = address.system
        self._cache: dict[Cell, str] = {}

    def label(self, z: Cell) -> str:
        got = self._cache.get(z)
        if got is not None:
            return got
        sys = self.system
        n = sys.expansion
        k = 1
        while True:
            p = self.address.origin_offset(k)
            inside = all(0 <= z[i] + p[i] < n**k for i in range(sys.dim))
            if inside:
                top = self.address.entry(k)[1]
                # entry k-1 is consistent with entry k, so descending from
                # the level-k label reproduces the lower entries
                lb = sys.cell_label(top, k, tuple(z[i] + p[i] for i in range(sys.dim)))
                self._cache[z] = lb
                return lb
            k += 1

    def key(self):
        return self.address.key()


class TranslatedField(Field):
    """Reads the base field at z + offset (integer lattice translation)."""

    def __init__(self, base: Field, offset: tuple[int, ...]):
        self.base = base
        self.offset = offset
        self.system = base.system

    def label(self, z: Cell) -> str:
        return self.base.label(tuple(z[i] + self.offset[i] for i in range(len(z))))

    def key(self):
        # collapse stacked translations so structurally equal tilings
        # produced along different routes still share a key
        if isinstance(self.base, TranslatedField):
            inner = self.base
            total = tuple(a + b for a, b in zip(self.offset, inner.offset))
            return TranslatedField(inner.base, total).key()
        if all(o == 0 for o in self.offset):
            return self.base.key()
        return ("translate", self.base.key(), self.offset)


class RotatedField(Field):
    """One counterclockwise quarter turn of a d=2 field about the origin.

    ``parity`` is floor(-s2) of the shift of the tiling being rotated
    (0 when s2 = 0, else -1); the cube corners only land back on the
    lattice after this correction.
    """

    def __init__(self, base: Field, parity: int, label_map: dict):
        self.base = base
        self.parity = parity
        self.label_map = dict(label_map)
        self.system = base.system

    def label(self, z: Cell) -> str:
        w1, w2 = z
        src = (w2, -w1 - 1 + self.parity)
        return self.label_map[self.base.label(src)]

    def key(self):
        return ("rotate", self.base.key(), self.parity)


# === tilings ==========================================================


class Tiling:
    """A labeled cube tiling: lazy field plus rational shift in [0,1)^d."""

    def __init__(self, field: Field, shift: Vec):
        self.field = field
        self.system = field.system
        if len(shift) != self.system.dim:
            raise StructuralError("shift dimension mismatch")
        if not all(0 <= c < 1 for c in shift):
            raise StructuralError(f"shift {shift} not in [0,1)^d")
        self.shift = tuple(Fraction(c) for c in shift)

    def label(self, z: Cell) -> str:
        return self.field.label(z)

    def key(self):
        return (self.field.key(), self.shift)

    def __repr__(self):
        return f"Tiling({self.field.key()!r}, shift={self.shift})"


def reference_tiling(system: SubstitutionSystem) -> Tiling:
    return Tiling(AddressField(reference_address(system)), zero_vec(system.dim))


def translate_tiling(t: Tiling, v: Vec) -> Tiling:
    """The tiling T - v: every tile of T moved by -v.

    The new shift is frac(s - v); the integer part becomes a lattice
    translation of the field.
    """
    if all(c == 0 for c in v):
        return t
    moved = vec_sub(t.shift, v)
    m = vec_floor(moved)
    # tile over new cell w came from old cell w + (-m): label'(w) = label(w - m)
    field = TranslatedField(t.field, tuple(-x for x in m)) if any(m) else t.field
    return Tiling(field, vec_frac(moved))


def rotate_vector(v: Vec, power: int = 1) -> Vec:
    for _ in range(power % 4):
        v = (-v[1], v[0])
    return v


def rotate_tiling(t: Tiling, power: int = 1) -> Tiling:
    """Rotate a d=2 tiling counterclockwise by ``power`` quarter turns
    about the origin, relabeling tiles by the system's rotation action.

    Chained rotations collapse: rotating a rotated tiling rebuilds from
    the original, so equal compositions produce identical field keys
    (a full turn is the input itself), keeping caches keyed on
    ``Tiling.key()`` effective.
    """
    rot = t.system.rotation
    if t.system.dim != 2 or rot is None:
        raise StructuralError("tiling's system has no rotation action")
    base, pre = getattr(t, "_rot_base", (t, 0))
    total = (pre + power) % rot.order
    out = base
    for _ in range(total):
        s1, s2 = out.shift
        parity = 0 if s2 == 0 else -1
        field = RotatedField(out.field, parity, rot.label_map)
        out = Tiling(field, (vec_frac((-s2,))[0], s1))
    if total:
        out._rot_base = (base, total)
    return out


# === central patches ==================================================


@dataclass(frozen=True)
class Patch:
    """A finite set of labeled tiles sharing one lattice shift."""

    cells: frozenset  # of (cell, label)
    shift: Vec

    @cached_property
    def least_cell(self) -> Cell:
        return min(c for c, _ in self.cells)

    def anchor(self) -> Vec:
        """Ambient position of the lexicographically least tile's corner."""
        return tuple(z + s for z, s in zip(self.least_cell, self.shift))

    def ambient(self) -> frozenset:
        """Tiles as (exact corner position, label) pairs."""
        return frozenset(
            (tuple(z + s for z, s in zip(cell, self.shift)), lb)
            for cell, lb in self.cells
        )

    def translated(self, v: Vec) -> "Patch":
        """The patch moved by -v (same convention as translate_tiling)."""
        moved = vec_sub(self.shift, v)
        m = vec_floor(moved)
        cells = frozenset(
            (tuple(z + d for z, d in zip(cell, m)), lb) for cell, lb in self.cells
        )
        return Patch(cells, vec_frac(moved))

    def pattern_class(self) -> "PatchClass":
        base = self.least_cell
        return PatchClass(
            frozenset(
                (tuple(z - b for z, b in zip(cell, base)), lb)
                for cell, lb in self.cells
            )
        )

    def __len__(self):
        return len(self.cells)


@dataclass(frozen=True)
class PatchClass:
    """A patch up to translation: integer offsets from the least tile.

    Two patches have equal classes iff one is an ambient translate of the
    other (labels included); the translation is then the difference of
    their anchors.
    """

    tiles: frozenset  # of (offset, label), least offset = 0

    def token(self) -> str:
        """Canonical string rendering, stable across runs; used for
        hashing and serialization keys."""
        return ";".join(
            ",".join(map(str, off)) + ":" + lb for off, lb in sorted(self.tiles)
        )

    def __len__(self):
        return len(self.tiles)


def ball_cells(shift: Vec, radius: Fraction, dim: int) -> list[Cell]:
    """Lattice cells z whose cube z + shift + [0,1]^d meets the closed
    ball of the given radius about the origin.  Exact; tangency counts."""
    if radius < 0:
        return []
    r2 = radius * radius
    axes = []
    for s in shift:
        lo = -(radius + s + 1)
        hi = radius - s
        axes.append(range(math.ceil(lo), math.floor(hi) + 1))

    def h2(z: int, s: Fraction) -> Fraction:
        lo = z + s
        d = max(lo, -lo - 1, Fraction(0))
        return d * d

    out = []
    for z in product(*axes):
        total = sum((h2(z[i], shift[i]) for i in range(dim)), Fraction(0))
        if total <= r2:
            out.append(z)
    return out


def central_patch(t: Tiling, radius: Fraction) -> Patch:
    """All tiles of ``t`` whose closed cube meets the closed ball of the
    given radius about the origin."""
    cells = ball_cells(t.shift, Fraction(radius), t.system.dim)
    return Patch(
        frozenset((z, t.label(z)) for z in cells),
        t.shift,
    )


def patches_equal(a: Patch, b: Patch) -> bool:
    """Ambient equality: same tile cubes in R^d with the same labels."""
    if a.shift == b.shift:
        return a.cells == b.cells
    return a.ambient() == b.ambient()

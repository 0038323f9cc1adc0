"""Canonical occurrences of patch classes in the reference tiling.

Every central patch a tiling can show also occurs somewhere in the
reference tiling of its system (primitivity: every legal window occurs
in every large enough supertile).  Picking one occurrence per class
deterministically gives a section of the quotient "tiling -> class of
its central patch": from a tiling T we read off the class, look up the
stored occurrence, and return the offset v for which T_0 - v shows the
very same ambient central patch as T.  Exactness is what makes this
work: equal classes mean equal patches after anchor alignment, and the
shift of T_0 - v automatically matches the shift of T.

First-occurrence rule.  Scan the supertiles of the reference tiling
level by level; at the first level whose array contains the class at
all, take the occurrence with the lexicographically least array
position.  The rule never changes its mind at higher levels, so lazily
resolved tables agree with exhaustively built ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import SectionIncompleteError, StructuralError
from .qnum import Vec
from .systems import MAX_ARRAY_CELLS, SubstitutionSystem
from .tilings import (
    Patch,
    PatchClass,
    Tiling,
    central_patch,
    reference_address,
)


def find_sparse(arr: np.ndarray, offsets: np.ndarray, want: np.ndarray) -> np.ndarray:
    """Positions p (as a (k, d) int array, lexicographically ordered)
    with arr[p + offsets[j]] == want[j] for all j.  offsets[0] must be
    the zero offset."""
    d = arr.ndim
    span = offsets.max(axis=0)
    window = tuple(slice(0, arr.shape[i] - int(span[i])) for i in range(d))
    cand = np.argwhere(arr[window] == want[0])
    for j in range(1, len(want)):
        if len(cand) == 0:
            break
        pos = cand + offsets[j]
        cand = cand[arr[tuple(pos.T)] == want[j]]
    return cand


def _class_arrays(system: SubstitutionSystem, cls: PatchClass):
    tiles = sorted(cls.tiles)
    offsets = np.array([t[0] for t in tiles], dtype=np.int64)
    want = np.array([system.label_index[t[1]] for t in tiles], dtype=np.int8)
    return offsets, want


@dataclass
class SectionTable:
    """Occurrence anchors in the reference tiling, resolved on demand.

    ``table`` maps a PatchClass to the lattice cell of its least tile in
    the reference tiling.  ``max_level`` caps the supertile search; the
    cap is generous for the radii this package targets, and running into
    it raises SectionIncompleteError rather than guessing.
    """

    system: SubstitutionSystem
    table: dict = field(default_factory=dict)
    max_level: int | None = None

    def __post_init__(self):
        self.address = reference_address(self.system)
        if self.max_level is None:
            n, d = self.system.expansion, self.system.dim
            lvl = 1
            while n ** ((lvl + 1) * d) <= MAX_ARRAY_CELLS:
                lvl += 1
            self.max_level = lvl

    def locate(self, cls: PatchClass) -> tuple[int, ...]:
        hit = self.table.get(cls)
        if hit is not None:
            return hit
        offsets, want = _class_arrays(self.system, cls)
        span = int(offsets.max(initial=0))
        n = self.system.expansion
        level = 1
        while n**level <= span:
            level += 1
        while level <= self.max_level:
            top = self.address.entry(level)[1]
            arr = self.system.expand_indices(top, level)
            cand = find_sparse(arr, offsets, want)
            if len(cand):
                p = self.address.origin_offset(level)
                anchor = tuple(int(cand[0][i]) - p[i] for i in range(arr.ndim))
                self.table[cls] = anchor
                return anchor
            level += 1
        raise SectionIncompleteError(
            f"class with {len(cls)} tiles not found up to level {self.max_level}"
        )

    def prefill(self, classes) -> None:
        for cls in classes:
            self.locate(cls)


def recenter_offset(table: SectionTable, tiling: Tiling, radius) -> Vec:
    """The v with central_patch(T_0 - v, R) equal to central_patch(T, R),
    T_0 the reference tiling of the table's system."""
    patch = central_patch(tiling, Fraction(radius))
    return recenter_offset_of_patch(table, patch)


def recenter_offset_of_patch(table: SectionTable, patch: Patch) -> Vec:
    if not patch.cells:
        raise StructuralError("cannot recenter an empty patch")
    anchor0 = table.locate(patch.pattern_class())
    here = patch.anchor()
    return tuple(Fraction(a) - b for a, b in zip(anchor0, here))


def approximant_summary(system: SubstitutionSystem, radius) -> dict:
    """Size summary of the radius-R approximant: shift regions, their
    class counts, and the global class total.  Cheap for d=1; for d=2
    inherits the census's practical radius limit."""
    from .enumeration import census

    cen = census(system, radius)
    regions = []
    for row in cen.rows:
        kinds = sorted({r.kind for r in row.regions})
        regions.append(
            {
                "cells": len(row.cells),
                "region_kinds": kinds,
                "classes": len(row.classes),
            }
        )
    return {
        "radius": Fraction(radius),
        "dim": cen.dim,
        "complete": cen.complete,
        "regions": regions,
        "distinct_classes": len(cen.all_classes()),
    }

"""Deterministic samplers over the tilings of a system.

All randomness comes from a caller-supplied random.Random, so runs are
reproducible from a seed.  Shifts are drawn from a rational grid with a
configurable margin away from 0 and 1; several constructions are exact
only because sampled shifts stay off the region thresholds, and the
margin makes that a property of the sampler rather than luck.
"""

from __future__ import annotations

import random
from collections import deque
from fractions import Fraction

import numpy as np

from .errors import SectionIncompleteError, StructuralError
from .qnum import Vec
from .section import find_sparse
from .systems import SubstitutionSystem
from .tilings import Address, AddressField, Entry, Tiling, reference_address

DEFAULT_SHIFT_DEN = 64


def shift_grid(den: int = DEFAULT_SHIFT_DEN, margin: Fraction = Fraction(1, 16)):
    """Admissible shift coordinates: multiples of 1/den inside
    [margin, 1 - margin]."""
    lo = margin * den
    out = [Fraction(m, den) for m in range(den) if lo <= m <= den - lo]
    if not out:
        raise StructuralError("empty shift grid")
    return out


def least_path_entries(
    system: SubstitutionSystem, start: str, goal: str
) -> tuple[Entry, ...]:
    """Entries climbing from ``start`` to ``goal`` in the parent graph,
    shortest and lexicographically least.  Empty when start == goal."""
    if start == goal:
        return ()
    prev: dict[str, tuple[str, Entry]] = {}
    queue = deque([start])
    while queue:
        label = queue.popleft()
        for cell, parent in system.parent_options(label):
            if parent in prev or parent == start:
                continue
            prev[parent] = (label, (cell, label))
            if parent == goal:
                path = []
                node = goal
                while node != start:
                    node, entry = prev[node]
                    path.append(entry)
                return tuple(reversed(path))
            queue.append(parent)
    raise StructuralError(f"no parent path from {start!r} to {goal!r}")


def completions(system: SubstitutionSystem, top: str, count: int) -> list[tuple[Entry, ...]]:
    """Distinct entry sequences continuing an address above a level whose
    supertile label is ``top``, each ending where the canonical covering
    cycle can attach.  Enumerated in breadth-first lexicographic order,
    so the result is deterministic."""
    cycle = system.find_covering_cycle()
    base = cycle[0][1]
    out: list[tuple[Entry, ...]] = []
    seen = set()
    queue: deque[tuple[tuple[Entry, ...], str]] = deque([((), top)])
    while queue and len(out) < count:
        prefix, label = queue.popleft()
        tail = prefix + least_path_entries(system, label, base)
        if tail not in seen:
            seen.add(tail)
            out.append(tail)
        for cell, parent in system.parent_options(label):
            queue.append((prefix + ((cell, label),), parent))
    return out


def address_with_tail(system: SubstitutionSystem, entries: tuple[Entry, ...]) -> Address:
    cycle = system.find_covering_cycle()
    return Address(system, head=entries, cycle=cycle)


def random_address(
    system: SubstitutionSystem, rng: random.Random, depth: int
) -> Address:
    """Random consistent address: a downward walk of ``depth`` entries,
    closed off with the least path to the canonical cycle."""
    label = rng.choice(system.labels)
    entries: list[Entry] = []
    for _ in range(depth):
        cell, parent = rng.choice(system.parent_options(label))
        entries.append((cell, label))
        label = parent
    cycle = system.find_covering_cycle()
    tail = least_path_entries(system, label, cycle[0][1])
    return Address(system, head=tuple(entries) + tail, cycle=cycle)


def sample_tilings(
    system: SubstitutionSystem,
    count: int,
    rng: random.Random,
    max_depth: int = 6,
    den: int = DEFAULT_SHIFT_DEN,
    margin: Fraction = Fraction(1, 16),
) -> list[Tiling]:
    grid = shift_grid(den, margin)
    out = []
    for _ in range(count):
        addr = random_address(system, rng, rng.randrange(max_depth + 1))
        shift = tuple(rng.choice(grid) for _ in range(system.dim))
        out.append(Tiling(AddressField(addr), shift))
    return out


def agreeing_pairs(
    system: SubstitutionSystem,
    count: int,
    rng: random.Random,
    min_radius: Fraction,
    den: int = DEFAULT_SHIFT_DEN,
    margin: Fraction = Fraction(1, 16),
) -> list[tuple[Tiling, Tiling, int]]:
    """Pairs of tilings with equal central patches out to at least
    ``min_radius`` (usually farther), but different beyond: they share
    the address up to some level and the supertile label there, then
    complete differently.  Returns (T, T', guaranteed radius)."""
    grid = shift_grid(den, margin)
    n = system.expansion
    out = []
    for _ in range(count):
        label = rng.choice(system.labels)
        entries: list[Entry] = []
        while True:
            cell, parent = rng.choice(system.parent_options(label))
            entries.append((cell, label))
            label = parent
            k = len(entries)
            p = [0] * system.dim
            w = 1
            for c, _ in entries:
                for i in range(system.dim):
                    p[i] += c[i] * w
                w *= n
            guaranteed = min(min(p[i] - 1, n**k - p[i]) for i in range(system.dim))
            if guaranteed >= min_radius:
                break
            if k > 64:
                raise StructuralError("runaway agreeing-pair construction")
        tails = [t for t in completions(system, label, 6)]
        rng.shuffle(tails)
        if len(tails) < 2:
            raise StructuralError(f"label {label!r} admits only one completion")
        head = tuple(entries)
        a1 = address_with_tail(system, head + tails[0])
        a2 = address_with_tail(system, head + tails[1])
        shift = tuple(rng.choice(grid) for _ in range(system.dim))
        out.append(
            (Tiling(AddressField(a1), shift), Tiling(AddressField(a2), shift), guaranteed)
        )
    return out


def _find_rooting(system: SubstitutionSystem, tiles) -> tuple[str, int, tuple[int, ...]]:
    """Locate the given (cell, label) tiles inside some supertile: returns
    (top label, level, origin offset p) such that the level-``level``
    expansion of ``top``, rooted with the origin at offset p, shows the
    tiles at their requested cells."""
    tiles = sorted(tiles)
    if not tiles:
        raise StructuralError("no tiles to plant")
    d, n = system.dim, system.expansion
    base = tuple(min(t[0][i] for t in tiles) for i in range(d))
    offsets = np.array([[t[0][i] - base[i] for i in range(d)] for t in tiles])
    want = np.array([system.label_index[t[1]] for t in tiles], dtype=np.int8)
    span = int(offsets.max(initial=0))
    level = 1
    while n**level <= span:
        level += 1
    while True:
        for top in system.labels:
            try:
                arr = system.expand_indices(top, level)
            except StructuralError:
                raise SectionIncompleteError(
                    f"pattern of {len(tiles)} tiles not plantable "
                    f"within the array budget"
                ) from None
            cand = find_sparse(arr, offsets, want)
            for q in cand:
                p = tuple(int(q[i]) - base[i] for i in range(d))
                if all(0 <= p[i] < n**level for i in range(d)):
                    return top, level, p
        level += 1


def plant_tiles(
    system: SubstitutionSystem,
    tiles,
    shift: Vec,
) -> Tiling:
    """A tiling with the given shift showing the given (cell, label)
    tiles.  The tiles must form (part of) a legal pattern; the field is
    built by locating the pattern in a supertile and rooting the address
    so the occurrence lands on the requested cells."""
    top, level, p = _find_rooting(system, tiles)
    return _rooted_tiling(system, top, level, p, shift)


def plant_tiles_variants(
    system: SubstitutionSystem,
    tiles,
    shift: Vec,
    count: int,
) -> list[Tiling]:
    """Tilings all showing the given tiles on the same cells but completed
    differently above the rooting supertile.  Deterministic order."""
    top, level, p = _find_rooting(system, tiles)
    n, d = system.expansion, system.dim
    entries: list[Entry] = []
    for k in range(level):
        block = tuple((p[i] // n**k) % n for i in range(d))
        rest = tuple(p[i] // n**k for i in range(d))
        entries.append((block, system.cell_label(top, level - k, rest)))
    cycle = system.find_covering_cycle()
    out = []
    for tail in completions(system, top, count):
        addr = Address(system, head=tuple(entries) + tail, cycle=cycle)
        out.append(Tiling(AddressField(addr), shift))
    return out


def _rooted_tiling(
    system: SubstitutionSystem, top: str, level: int, p: tuple[int, ...], shift: Vec
) -> Tiling:
    """Tiling whose level-``level`` supertile has label ``top`` and holds
    the origin cell at offset ``p``."""
    n, d = system.expansion, system.dim
    entries: list[Entry] = []
    for k in range(level):
        block = tuple((p[i] // n**k) % n for i in range(d))
        rest = tuple(p[i] // n**k for i in range(d))
        label = system.cell_label(top, level - k, rest)
        entries.append((block, label))
    cycle = system.find_covering_cycle()
    tail = least_path_entries(system, top, cycle[0][1])
    addr = Address(system, head=tuple(entries) + tail, cycle=cycle)
    return Tiling(AddressField(addr), shift)

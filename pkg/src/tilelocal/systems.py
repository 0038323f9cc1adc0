"""Block substitutions on the integer lattice.

A system has an alphabet of labels, an integer expansion factor n >= 2,
and for every label a rule assigning a label to each cell of the block
{0..n-1}^d.  Iterating the rule expands a single cell into supertiles of
side n^k; tilings of Z^d arise in tilings.py by gluing a nested sequence
of supertiles around the origin.

Conventions used throughout the package:

* cells are coordinate tuples, ordered lexicographically with the x
  coordinate first, so for d=2 the order is (0,0*), (0,1), (1,0), ...;
* expansion arrays are numpy int8 arrays of label indices, indexed
  arr[x] in d=1 and arr[x, y] in d=2;
* in the JSON interchange format a d=2 rule is a list of rows indexed
  rules[label][y][x], which reads naturally on screen; the constructor
  transposes it.

Only d in {1, 2} is supported.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from itertools import product
from pathlib import Path

import numpy as np

from .errors import StructuralError

Cell = tuple[int, ...]

# expansion arrays with more cells than this are refused; single-cell
# lookups fall back to digit descent, which has no such limit
MAX_ARRAY_CELLS = 1 << 24

_CATALOG_DIR = Path(__file__).parent / "catalog"


def block_cells(dim: int, n: int):
    """All cells of {0..n-1}^dim in lexicographic order."""
    return product(range(n), repeat=dim)


def rotate_block_cell_ccw(cell: Cell, n: int) -> Cell:
    """Quarter turn of an n x n block onto itself, counterclockwise."""
    x, y = cell
    return (n - 1 - y, x)


def rotate_block_cell_cw(cell: Cell, n: int) -> Cell:
    x, y = cell
    return (y, n - 1 - x)


@dataclass(frozen=True)
class RotationAction:
    """Cyclic rotation symmetry of a d=2 system.

    ``label_map`` sends each label to its image under one counterclockwise
    quarter turn; applying it ``order`` times must be the identity.
    """

    order: int
    label_map: dict

    def apply_label(self, label: str, power: int = 1) -> str:
        for _ in range(power % self.order):
            label = self.label_map[label]
        return label


class SubstitutionSystem:
    """A primitive block substitution with optional rotation symmetry.

    Instances are immutable in spirit; expansion arrays are cached on the
    instance.  Equality is identity, which is all the call sites need.
    """

    def __init__(self, name, dim, expansion, labels, rules, rotation=None):
        if dim not in (1, 2):
            raise StructuralError(f"dim must be 1 or 2, got {dim}")
        if not isinstance(expansion, int) or expansion < 2:
            raise StructuralError(f"expansion must be an integer >= 2, got {expansion}")
        labels = tuple(labels)
        if len(labels) == 0:
            raise StructuralError("empty alphabet")
        if len(labels) != len(set(labels)):
            raise StructuralError("duplicate labels")
        if len(labels) > 120:
            raise StructuralError("alphabet too large for int8 indexing")
        self.name = str(name)
        self.dim = dim
        self.expansion = expansion
        self.labels = labels
        self.label_index = {a: i for i, a in enumerate(labels)}
        self.rules = {}
        for a in labels:
            if a not in rules:
                raise StructuralError(f"missing rule for label {a!r}")
            self.rules[a] = self._freeze_rule(a, rules[a])
        extra = set(rules) - set(labels)
        if extra:
            raise StructuralError(f"rules for unknown labels: {sorted(extra)}")
        self.rotation = rotation
        if rotation is not None:
            self._check_rotation()
        self._expand_cache: dict[tuple[str, int], np.ndarray] = {}
        self._windows_cache: dict[int, frozenset] = {}
        self._digest: str | None = None

    def _freeze_rule(self, a, rows) -> np.ndarray:
        n, d = self.expansion, self.dim
        try:
            if d == 1:
                flat = [self.label_index[lb] for lb in rows]
                arr = np.array(flat, dtype=np.int8)
                if arr.shape != (n,):
                    raise StructuralError(f"rule for {a!r} must have {n} entries")
            else:
                if len(rows) != n or any(len(r) != n for r in rows):
                    raise StructuralError(f"rule for {a!r} must be {n}x{n}")
                arr = np.array(
                    [[self.label_index[lb] for lb in row] for row in rows],
                    dtype=np.int8,
                ).T  # JSON rows are indexed [y][x]; we index [x, y]
        except KeyError as e:
            raise StructuralError(f"rule for {a!r} uses unknown label {e.args[0]!r}") from None
        except TypeError:
            raise StructuralError(f"rule for {a!r} is not a label array") from None
        arr.flags.writeable = False
        return arr

    # -- basic lookups ------------------------------------------------

    def child_label(self, label: str, cell: Cell) -> str:
        """Label of ``cell`` in the one-step expansion of ``label``."""
        return self.labels[int(self.rules[label][cell])]

    def parent_options(self, label: str) -> list[tuple[Cell, str]]:
        """All (cell, parent) pairs whose expansion puts ``label`` at cell."""
        out = []
        for b in self.labels:
            arr = self.rules[b]
            for cell in zip(*np.nonzero(arr == self.label_index[label])):
                out.append((tuple(int(c) for c in cell), b))
        out.sort(key=lambda cb: (cb[0], self.label_index[cb[1]]))
        return out

    def cell_label(self, label: str, level: int, cell: Cell) -> str:
        """Label of a single cell of the level-``level`` supertile of ``label``.

        Digit descent; works for any level.  ``cell`` must lie in
        [0, n^level)^d.
        """
        n = self.expansion
        for k in range(level - 1, -1, -1):
            m = n**k
            block = tuple(c // m for c in cell)
            label = self.labels[int(self.rules[label][block])]
            cell = tuple(c % m for c in cell)
        return label

    # -- expansion arrays ---------------------------------------------

    def expand_indices(self, label: str, level: int) -> np.ndarray:
        """Level-``level`` supertile of ``label`` as an int8 index array."""
        key = (label, level)
        cached = self._expand_cache.get(key)
        if cached is not None:
            return cached
        n, d = self.expansion, self.dim
        if n ** (level * d) > MAX_ARRAY_CELLS:
            raise StructuralError(
                f"supertile level {level} exceeds array budget; use cell_label"
            )
        if level == 0:
            arr = np.full((1,) * d, self.label_index[label], dtype=np.int8)
        else:
            m = n ** (level - 1)
            arr = np.empty((n * m,) * d, dtype=np.int8)
            for cell in block_cells(d, n):
                sub = self.expand_indices(self.child_label(label, cell), level - 1)
                sl = tuple(slice(c * m, (c + 1) * m) for c in cell)
                arr[sl] = sub
        arr.flags.writeable = False
        self._expand_cache[key] = arr
        return arr

    # -- combinatorics ------------------------------------------------

    def substitution_matrix(self) -> np.ndarray:
        """M[i, j] = multiplicity of label j in the rule of label i."""
        k = len(self.labels)
        m = np.zeros((k, k), dtype=np.int64)
        for i, a in enumerate(self.labels):
            idx, counts = np.unique(self.rules[a], return_counts=True)
            m[i, idx] = counts
        return m

    def primitivity_exponent(self) -> int | None:
        """Least k with M^k entrywise positive, or None if not primitive."""
        m = self.substitution_matrix()
        p = m.copy()
        # Wielandt: exponent of a primitive matrix is < n^2 - 2n + 2
        for k in range(1, len(self.labels) ** 2 + 2):
            if np.all(p > 0):
                return k
            p = np.minimum(p @ m, 1_000_000)  # clamp, only positivity matters
        return None

    def require_primitive(self) -> int:
        exp = self.primitivity_exponent()
        if exp is None:
            raise StructuralError(f"system {self.name!r} is not primitive")
        return exp

    # -- rotation symmetry --------------------------------------------

    def _check_rotation(self):
        rot = self.rotation
        if self.dim != 2:
            raise StructuralError("rotation actions only supported for dim 2")
        if rot.order != 4:
            raise StructuralError("only order-4 rotation actions supported")
        lm = rot.label_map
        if set(lm) != set(self.labels) or set(lm.values()) != set(self.labels):
            raise StructuralError("label_map must be a bijection on the alphabet")
        for a in self.labels:
            if rot.apply_label(a, rot.order) != a:
                raise StructuralError(f"label_map^{rot.order} not identity at {a!r}")
        bad = self.rotation_violations()
        if bad:
            raise StructuralError(
                "substitution does not commute with rotation: " + "; ".join(bad[:4])
            )

    def rotation_violations(self) -> list[str]:
        """Cells where expand(rotate) differs from rotate(expand)."""
        rot, n = self.rotation, self.expansion
        out = []
        for a in self.labels:
            for cell in block_cells(2, n):
                want = rot.apply_label(self.child_label(a, cell))
                got = self.child_label(rot.apply_label(a), rotate_block_cell_ccw(cell, n))
                if want != got:
                    out.append(f"label {a!r} cell {cell}: {got!r} != {want!r}")
        return out

    # -- legal windows -------------------------------------------------

    def legal_windows(self, width: int) -> frozenset:
        """All cube windows of side ``width`` occurring in some supertile.

        For a primitive system these are exactly the windows occurring in
        every tiling of the system.  Computed by scanning expansions of
        every label at increasing levels until the window set is unchanged
        for (primitivity exponent + 3) consecutive levels.

        Windows are nested tuples of labels indexed window[x] in d=1 and
        window[x][y] in d=2.
        """
        if width < 1:
            raise StructuralError("window width must be >= 1")
        cached = self._windows_cache.get(width)
        if cached is not None:
            return cached
        margin = self.require_primitive() + 3
        n = self.expansion
        level = 1
        while n**level < width:
            level += 1
        prev: frozenset | None = None
        stable = 0
        while True:
            cur = set()
            for a in self.labels:
                arr = self.expand_indices(a, level)
                cur.update(self._windows_of(arr, width))
            cur = frozenset(cur)
            if cur == prev:
                stable += 1
                if stable >= margin:
                    self._windows_cache[width] = cur
                    return cur
            else:
                stable = 0
            prev = cur
            level += 1

    def _windows_of(self, arr: np.ndarray, width: int) -> set:
        from numpy.lib.stride_tricks import sliding_window_view

        if arr.shape[0] < width:
            return set()
        if self.dim == 1:
            uniq = np.unique(sliding_window_view(arr, width), axis=0)
            return {tuple(self.labels[int(i)] for i in row) for row in uniq}
        flat = sliding_window_view(arr, (width, width)).reshape(-1, width * width)
        uniq = np.unique(flat, axis=0)
        out = set()
        for row in uniq:
            block = row.reshape(width, width)
            out.add(tuple(tuple(self.labels[int(v)] for v in col) for col in block))
        return out

    # -- reference cycle -----------------------------------------------

    def find_covering_cycle(self, max_len: int = 6) -> tuple[tuple[Cell, str], ...]:
        """Least consistent supertile cycle whose tiling covers the plane.

        A cycle ((c_0, a_0), ..., (c_{C-1}, a_{C-1})) describes how the
        level-k supertile sits inside the level-(k+1) one, repeating with
        period C; consistency means the rule of a_{k+1} really does place
        a_k at cell c_k (indices mod C).  The tiling it generates covers
        all of Z^d iff on every axis some digit is > 0 and some is < n-1,
        so that the supertile footprints grow in both directions.

        Returns the lexicographically least such cycle, shortest first.
        Every primitive system with n >= 2 has one of length <= alphabet
        size * 2; max_len is just a safety stop.
        """
        n, d = self.expansion, self.dim
        entries = [
            (cell, a) for cell in block_cells(d, n) for a in self.labels
        ]
        entries.sort(key=lambda ca: (ca[0], self.label_index[ca[1]]))
        for length in range(1, max_len + 1):
            for combo in product(entries, repeat=length):
                ok = True
                for k in range(length):
                    c_k, a_k = combo[k]
                    a_next = combo[(k + 1) % length][1]
                    if self.child_label(a_next, c_k) != a_k:
                        ok = False
                        break
                if not ok:
                    continue
                covering = all(
                    any(c[axis] > 0 for c, _ in combo)
                    and any(c[axis] < n - 1 for c, _ in combo)
                    for axis in range(d)
                )
                if covering:
                    return combo
        raise StructuralError(
            f"no covering cycle of length <= {max_len} in system {self.name!r}"
        )

    # -- serialization -------------------------------------------------

    def rule_rows(self, label: str):
        """Rule of ``label`` in JSON row order (rows indexed [y][x] for d=2)."""
        arr = self.rules[label]
        if self.dim == 1:
            return [self.labels[int(i)] for i in arr]
        return [[self.labels[int(i)] for i in row] for row in arr.T]

    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "dim": self.dim,
            "expansion": self.expansion,
            "labels": list(self.labels),
            "rules": {a: self.rule_rows(a) for a in self.labels},
        }
        if self.rotation is not None:
            out["rotation"] = {
                "order": self.rotation.order,
                "label_map": dict(self.rotation.label_map),
            }
        return out

    def digest(self) -> str:
        """Short content hash of the rule data (name excluded), for
        cache keys and cross-run stable identities."""
        if self._digest is None:
            doc = self.to_json_dict()
            doc.pop("name")
            blob = json.dumps(doc, sort_keys=True).encode()
            self._digest = hashlib.blake2b(blob, digest_size=8).hexdigest()
        return self._digest

    def __repr__(self):
        return (
            f"SubstitutionSystem({self.name!r}, dim={self.dim}, "
            f"expansion={self.expansion}, labels={len(self.labels)})"
        )


def system_from_dict(doc: dict, name_hint: str = "unnamed") -> SubstitutionSystem:
    if not isinstance(doc, dict):
        raise StructuralError("system document must be a JSON object")
    for key in ("dim", "expansion", "labels", "rules"):
        if key not in doc:
            raise StructuralError(f"system document missing {key!r}")
    rotation = None
    if "rotation" in doc and doc["rotation"] is not None:
        rdoc = doc["rotation"]
        if not isinstance(rdoc, dict) or "order" not in rdoc or "label_map" not in rdoc:
            raise StructuralError("rotation must have 'order' and 'label_map'")
        rotation = RotationAction(order=int(rdoc["order"]), label_map=dict(rdoc["label_map"]))
    return SubstitutionSystem(
        name=doc.get("name", name_hint),
        dim=doc["dim"],
        expansion=doc["expansion"],
        labels=doc["labels"],
        rules=doc["rules"],
        rotation=rotation,
    )


def load_system(path: str | Path) -> SubstitutionSystem:
    path = Path(path)
    with open(path) as fh:
        doc = json.load(fh)
    return system_from_dict(doc, name_hint=path.stem)


def catalog_names() -> list[str]:
    return sorted(p.stem for p in _CATALOG_DIR.glob("*.json"))


_catalog_cache: dict[str, SubstitutionSystem] = {}


def load_catalog(name: str) -> SubstitutionSystem:
    """Load one of the bundled example systems by name.

    Cached: pipelines and sections check space membership by object
    identity, so everything in one process must share instances."""
    got = _catalog_cache.get(name)
    if got is not None:
        return got
    path = _CATALOG_DIR / f"{name}.json"
    if not path.exists():
        raise StructuralError(
            f"unknown catalog system {name!r}; have {catalog_names()}"
        )
    return _catalog_cache.setdefault(name, load_system(path))

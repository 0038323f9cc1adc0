"""Shared exception types.

The split matters for the CLI: structural and parameter problems in user
input exit with code 2 and name the offending JSON path, while internal
invariant violations exit with code 1 and a loud message, since they mean
a bug or an unusable configuration rather than a malformed file.
"""

from __future__ import annotations


class StructuralError(ValueError):
    """Malformed or inconsistent input data (bad JSON shape, unknown label)."""


class ParameterError(ValueError):
    """A numeric parameter is out of its documented range."""


class TableIncompleteError(RuntimeError):
    """A relabeling table misses a legal window class."""


class SectionIncompleteError(RuntimeError):
    """A patch class could not be located in the reference tiling."""


class ModulusViolationError(RuntimeError):
    """A certified agreement bound failed on concrete data.  Always a bug."""


class PreconditionError(RuntimeError):
    """A hypothesis of a construction fails for the given map (e.g. a map
    that is not graded-local, or does not intertwine the rotation action)."""

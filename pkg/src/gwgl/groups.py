"""Predictor group structures: validation, indexing helpers, JSON round-trip."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GroupStructure:
    """Ordered partition (or cover, when ``overlapping``) of predictor indices.

    ``groups`` is a tuple of index tuples over ``0..p-1``. Construction only
    normalizes types; call :func:`validate_groups` to enforce the invariants.
    """

    groups: tuple
    p: int
    overlapping: bool = False

    def __post_init__(self):
        norm = tuple(tuple(int(i) for i in g) for g in self.groups)
        object.__setattr__(self, "groups", norm)
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "overlapping", bool(self.overlapping))

    @classmethod
    def from_sizes(cls, sizes, overlapping=False) -> "GroupStructure":
        """Contiguous groups of the given sizes: (2, 3) -> (0,1), (2,3,4)."""
        sizes = [int(s) for s in sizes]
        stops = np.cumsum(sizes)
        starts = stops - sizes
        groups = tuple(tuple(range(a, b)) for a, b in zip(starts, stops))
        return cls(groups=groups, p=int(stops[-1]) if sizes else 0,
                   overlapping=overlapping)

    @classmethod
    def singletons(cls, p) -> "GroupStructure":
        return cls(groups=tuple((j,) for j in range(int(p))), p=int(p))

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> tuple:
        return tuple(len(g) for g in self.groups)

    def sqrt_sizes(self) -> np.ndarray:
        return np.sqrt(np.array(self.sizes, dtype=float))

    def flat_index(self):
        """(perm, starts, sizes, repeats) arrays for fast blockwise ops.

        ``perm`` concatenates the group index sets, so ``v[perm]`` lays the
        vector out group-contiguously; ``repeats`` maps group ids back onto
        that layout. Cached after first use. Valid for overlapping structures
        too, in which case ``perm`` indexes the duplicated representation.
        """
        cached = getattr(self, "_flat", None)
        if cached is None:
            sizes = np.array(self.sizes, dtype=int)
            perm = np.concatenate([np.asarray(g, dtype=int) for g in self.groups]) \
                if self.groups else np.zeros(0, dtype=int)
            starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int) \
                if len(sizes) else np.zeros(0, dtype=int)
            repeats = np.repeat(np.arange(len(sizes)), sizes)
            cached = (perm, starts, sizes, repeats)
            object.__setattr__(self, "_flat", cached)
        return cached

    def group_of(self) -> np.ndarray:
        """Index -> group id map. Only defined for non-overlapping structures."""
        if self.overlapping:
            raise ValueError("group_of is ambiguous for overlapping structures")
        out = np.full(self.p, -1, dtype=int)
        for l, g in enumerate(self.groups):
            out[list(g)] = l
        return out

    def to_dict(self) -> dict:
        return {"p": self.p,
                "groups": [list(g) for g in self.groups],
                "overlapping": self.overlapping}

    @classmethod
    def from_dict(cls, d: dict) -> "GroupStructure":
        return cls(groups=tuple(tuple(g) for g in d["groups"]),
                   p=d["p"], overlapping=d.get("overlapping", False))


def validate_groups(structure: GroupStructure, p=None) -> bool:
    """Check the group-structure invariants against dimension ``p``.

    Raises ValueError describing the first violated invariant; returns True
    when everything holds.
    """
    p = structure.p if p is None else int(p)
    if p < 1:
        raise ValueError("predictor count p must be >= 1, got %d" % p)
    if structure.p != p:
        raise ValueError("structure declares p=%d but was validated against p=%d"
                         % (structure.p, p))
    if not structure.groups:
        raise ValueError("structure has no groups")
    seen = np.zeros(p, dtype=int)
    for l, g in enumerate(structure.groups):
        if len(g) == 0:
            raise ValueError("group %d is empty" % l)
        if len(set(g)) != len(g):
            dup = sorted(i for i in set(g) if g.count(i) > 1)[0]
            raise ValueError("duplicate index %d inside group %d" % (dup, l))
        for i in g:
            if i < 0 or i >= p:
                raise ValueError("index %d in group %d out of range 0..%d"
                                 % (i, l, p - 1))
            seen[i] += 1
    uncovered = np.nonzero(seen == 0)[0]
    if uncovered.size:
        raise ValueError("index %d uncovered by any group" % uncovered[0])
    if not structure.overlapping:
        multi = np.nonzero(seen > 1)[0]
        if multi.size:
            raise ValueError("index %d appears in multiple groups of a "
                             "non-overlapping structure" % multi[0])
    return True

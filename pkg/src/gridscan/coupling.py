"""Weighted sets, sparse bipartite couplings and the three-phase heuristic.

``couple_three_phase`` is a plain-Python implementation used as the
readable reference; :func:`fast_mismatch` runs the compiled kernel that the
sweeps use, and the two are checked against each other in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .block import (
    BlockGeometry,
    Colouring,
    canonical_key,
    enumerate_agreeing,
    format_colouring,
    geometry_arrays,
)


@dataclass(frozen=True)
class WeightedSet:
    """Colourings in canonical order with integer weights."""

    entries: tuple[Colouring, ...]
    weights: tuple[int, ...]

    @property
    def total_weight(self) -> int:
        return sum(self.weights)

    def __len__(self) -> int:
        return len(self.entries)

    def probability(self, i: int) -> Fraction:
        return Fraction(self.weights[i], self.total_weight)


@dataclass
class CouplingGraph:
    left: WeightedSet
    right: WeightedSet
    # (left index, right index, weight) in construction order
    edges: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def total_weight(self) -> int:
        return sum(w for _, _, w in self.edges)

    def left_sums(self) -> list[int]:
        s = [0] * len(self.left)
        for i, _, w in self.edges:
            s[i] += w
        return s

    def right_sums(self) -> list[int]:
        s = [0] * len(self.right)
        for _, j, w in self.edges:
            s[j] += w
        return s

    def is_valid(self) -> bool:
        return (
            self.left_sums() == list(self.left.weights)
            and self.right_sums() == list(self.right.weights)
            and all(w > 0 for _, _, w in self.edges)
        )

    def dump(self) -> str:
        """One ``<left> <right> <weight>`` line per edge."""
        return "".join(
            f"{format_colouring(self.left.entries[i])} "
            f"{format_colouring(self.right.entries[j])} {w}\n"
            for i, j, w in self.edges
        )


def canonical_order(c: Sequence[int], g: BlockGeometry, q: int = 7) -> int:
    return canonical_key(c, q, g)


def build_weighted_sets(
    CZ: Sequence[Colouring], CZ2: Sequence[Colouring]
) -> tuple[WeightedSet, WeightedSet]:
    """Left gets weight |C_Z'| per colouring of C_Z, right gets |C_Z|."""
    if not CZ or not CZ2:
        raise ValueError("over-constrained boundary: no agreeing colouring")
    a, b = len(CZ), len(CZ2)
    return (
        WeightedSet(tuple(CZ), (b,) * a),
        WeightedSet(tuple(CZ2), (a,) * b),
    )


def _greedy(left_idx: Iterable[int], right_idx: list[int], resL, resR, edges):
    jj = 0
    for i in left_idx:
        while resL[i] > 0 and jj < len(right_idx):
            j = right_idx[jj]
            if resR[j] == 0:
                jj += 1
                continue
            e = min(resL[i], resR[j])
            edges.append((i, j, e))
            resL[i] -= e
            resR[j] -= e


def couple_three_phase(
    WL: WeightedSet, WR: WeightedSet, g: BlockGeometry
) -> CouplingGraph:
    """Identical colourings first, then colourings equal off v1, then the
    rest, each greedily in canonical order."""
    if WL.total_weight != WR.total_weight:
        raise ValueError("weighted sets have different totals")
    resL = list(WL.weights)
    resR = list(WR.weights)
    edges: list[tuple[int, int, int]] = []

    ridx = {c: j for j, c in enumerate(WR.entries)}
    for i, c in enumerate(WL.entries):
        j = ridx.get(c)
        if j is not None:
            e = min(resL[i], resR[j])
            if e:
                edges.append((i, j, e))
                resL[i] -= e
                resR[j] -= e

    def off_v1(c: Colouring) -> Colouring:
        return c[1:]

    groups: dict[Colouring, list[int]] = {}
    for j, c in enumerate(WR.entries):
        groups.setdefault(off_v1(c), []).append(j)
    lgroups: dict[Colouring, list[int]] = {}
    for i, c in enumerate(WL.entries):
        lgroups.setdefault(off_v1(c), []).append(i)
    for k, li in lgroups.items():
        if k in groups:
            _greedy(li, groups[k], resL, resR, edges)

    _greedy(range(len(WL)), list(range(len(WR))), resL, resR, edges)
    assert not any(resL) and not any(resR)
    return CouplingGraph(WL, WR, edges)


def mismatch_probability(K: CouplingGraph, vertex: int) -> Fraction:
    num = sum(
        w for i, j, w in K.edges
        if K.left.entries[i][vertex] != K.right.entries[j][vertex]
    )
    return Fraction(num, K.left.total_weight)


def coupling_for(Z, Z2, q: int, g: BlockGeometry) -> CouplingGraph:
    WL, WR = build_weighted_sets(enumerate_agreeing(Z, q, g),
                                 enumerate_agreeing(Z2, q, g))
    return couple_three_phase(WL, WR, g)


class FastCoupler:
    """Reusable buffers around the compiled enumeration and coupling."""

    def __init__(self, g: BlockGeometry, q: int):
        self.g = g
        self.q = q
        self.arrays = geometry_arrays(g)
        cap = q ** g.n_block
        self.L = np.empty(cap, np.int64)
        self.R = np.empty(cap, np.int64)
        self.resL = np.empty(cap, np.int64)
        self.resR = np.empty(cap, np.int64)
        self.ei = np.empty(2 * cap, np.int64)
        self.ej = np.empty(2 * cap, np.int64)
        self.ew = np.empty(2 * cap, np.int64)
        self.mism = np.zeros(g.n_block, np.int64)

    def _z(self, Z) -> np.ndarray:
        return np.array([-1 if c is None else c - 1 for c in Z], np.int64)

    def mismatch(self, Z, Z2) -> tuple[list[int], int]:
        """Per-vertex mismatch numerators (vertex order) and the common
        denominator |C_Z|*|C_Z'|."""
        nL = kernels.enum_keys(*self.arrays, self._z(Z), self.q, self.L)
        nR = kernels.enum_keys(*self.arrays, self._z(Z2), self.q, self.R)
        if nL == 0 or nR == 0:
            raise ValueError("over-constrained boundary: no agreeing colouring")
        ne = kernels.three_phase(self.L, nL, self.R, nR, self.q, self.resL,
                                 self.resR, self.ei, self.ej, self.ew)
        kernels.edge_mismatch(self.L, self.R, self.ei, self.ej, self.ew, ne,
                              self.q, self.g.n_block, self.mism)
        num = [0] * self.g.n_block
        for level, v in enumerate(self.g.order):
            num[v] = int(self.mism[level])
        return num, nL * nR


def fast_mismatch(Z, Z2, q: int, g: BlockGeometry) -> list[Fraction]:
    num, den = FastCoupler(g, q).mismatch(Z, Z2)
    return [Fraction(n, den) for n in num]

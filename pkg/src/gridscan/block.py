"""Block geometry, colourings and enumeration of agreeing block colourings.

Coordinates are (x, y) with y pointing up. Block vertices are numbered
v1..vN and boundary vertices z1..zB; both are 0-based indices in code.
Colours are 1-based integers; ``None`` marks a wildcard boundary entry.

Labelling of the 2x2 block::

        z7  z6
    z8  v2  v3  z5
    z1  v1  v4  z4
        z2  z3

Boundary vertices always run counter-clockwise from the canonical
discrepancy slot z1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional, Sequence

import numpy as np

WILDCARD = None

Coord = tuple[int, int]
Colouring = tuple[int, ...]
BoundaryColouring = tuple[Optional[int], ...]

SUPPORTED = ((2, 2), (2, 3), (3, 3))


@dataclass(frozen=True)
class Symmetry:
    """A rotation/reflection of the block as two label permutations.

    ``block[j]`` is the image of block vertex j, ``boundary[i]`` the image of
    boundary vertex i.
    """

    block: tuple[int, ...]
    boundary: tuple[int, ...]


@dataclass(frozen=True)
class BlockGeometry:
    rows: int
    cols: int
    block_coords: tuple[Coord, ...]
    boundary_coords: tuple[Coord, ...]
    internal_edges: tuple[tuple[int, int], ...]
    boundary_edges: tuple[tuple[int, int], ...]
    # canonical discrepancy slots (boundary indices); slots[0] is z1
    slots: tuple[int, ...]
    # significance order for the canonical colouring key, most significant first
    order: tuple[int, ...]
    symmetries: tuple[Symmetry, ...]

    @property
    def name(self) -> str:
        return f"{self.rows}x{self.cols}"

    @property
    def n_block(self) -> int:
        return len(self.block_coords)

    @property
    def n_boundary(self) -> int:
        return len(self.boundary_coords)

    @cached_property
    def block_neighbours(self) -> tuple[tuple[int, ...], ...]:
        nb: list[list[int]] = [[] for _ in range(self.n_block)]
        for a, b in self.internal_edges:
            nb[a].append(b)
            nb[b].append(a)
        return tuple(tuple(sorted(x)) for x in nb)

    @cached_property
    def boundary_neighbours(self) -> tuple[tuple[int, ...], ...]:
        """For each block vertex, the boundary vertices adjacent to it."""
        nb: list[list[int]] = [[] for _ in range(self.n_block)]
        for z, v in self.boundary_edges:
            nb[v].append(z)
        return tuple(tuple(sorted(x)) for x in nb)

    @cached_property
    def boundary_anchor(self) -> tuple[int, ...]:
        """The unique block vertex adjacent to each boundary vertex."""
        out = [0] * self.n_boundary
        for z, v in self.boundary_edges:
            out[z] = v
        return tuple(out)

    def vertex_label(self, v: int) -> str:
        return f"v{v + 1}"

    def boundary_label(self, z: int) -> str:
        return f"z{z + 1}"


def _perimeter(rows: int, cols: int) -> list[Coord]:
    # counter-clockwise: left side downwards, bottom rightwards, right side
    # upwards, top leftwards
    left = [(-1, y) for y in range(rows - 1, -1, -1)]
    bottom = [(x, -1) for x in range(cols)]
    right = [(cols, y) for y in range(rows)]
    top = [(x, rows) for x in range(cols - 1, -1, -1)]
    return left + bottom + right + top


def _block_coords(rows: int, cols: int) -> list[Coord]:
    if (rows, cols) == (2, 2):
        return [(0, 0), (0, 1), (1, 1), (1, 0)]
    # row-major from the top-left corner
    return [(x, y) for y in range(rows - 1, -1, -1) for x in range(cols)]


# first entry becomes z1
_SLOT_COORDS: dict[tuple[int, int], tuple[Coord, ...]] = {
    (2, 2): ((-1, 0),),
    (2, 3): ((-1, 1),),
    (3, 3): ((-1, 2), (1, 3)),
}


def _transforms(rows: int, cols: int):
    # isometries of the rectangle in doubled centred coordinates
    maps = [
        lambda X, Y: (X, Y),
        lambda X, Y: (-X, Y),
        lambda X, Y: (X, -Y),
        lambda X, Y: (-X, -Y),
    ]
    if rows == cols:
        maps += [
            lambda X, Y: (Y, X),
            lambda X, Y: (-Y, X),
            lambda X, Y: (Y, -X),
            lambda X, Y: (-Y, -X),
        ]
    return maps


@lru_cache(maxsize=None)
def block_geometry(rows: int, cols: int) -> BlockGeometry:
    """Build the geometry of a ``rows`` x ``cols`` block (2x2, 2x3 or 3x3)."""
    if (rows, cols) not in SUPPORTED:
        raise ValueError(f"unsupported block {rows}x{cols}")
    block = _block_coords(rows, cols)
    perim = _perimeter(rows, cols)
    start = perim.index(_SLOT_COORDS[(rows, cols)][0])
    boundary = perim[start:] + perim[:start]
    bindex = {c: i for i, c in enumerate(boundary)}
    vindex = {c: i for i, c in enumerate(block)}

    internal = []
    for a, (x, y) in enumerate(block):
        for nbr in ((x + 1, y), (x, y + 1)):
            if nbr in vindex:
                internal.append(tuple(sorted((a, vindex[nbr]))))
    bedges = []
    for z, (x, y) in enumerate(boundary):
        for nbr in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if nbr in vindex:
                bedges.append((z, vindex[nbr]))

    slots = tuple(bindex[c] for c in _SLOT_COORDS[(rows, cols)])

    # most distant from v1 first, ties by label
    x1, y1 = block[0]
    dist = [abs(x - x1) + abs(y - y1) for x, y in block]
    order = tuple(sorted(range(len(block)), key=lambda v: (-dist[v], v)))

    syms = []
    for f in _transforms(rows, cols):
        def image(c: Coord) -> Coord:
            X, Y = f(2 * c[0] - (cols - 1), 2 * c[1] - (rows - 1))
            return ((X + cols - 1) // 2, (Y + rows - 1) // 2)

        syms.append(Symmetry(
            block=tuple(vindex[image(c)] for c in block),
            boundary=tuple(bindex[image(c)] for c in boundary),
        ))

    return BlockGeometry(
        rows=rows,
        cols=cols,
        block_coords=tuple(block),
        boundary_coords=tuple(boundary),
        internal_edges=tuple(sorted(internal)),
        boundary_edges=tuple(sorted(bedges)),
        slots=slots,
        order=order,
        symmetries=tuple(syms),
    )


def parse_block(name: str) -> BlockGeometry:
    """``"2x3"`` -> geometry."""
    try:
        r, c = (int(t) for t in name.lower().split("x"))
    except ValueError:
        raise ValueError(f"bad block spec {name!r}") from None
    return block_geometry(r, c)


def _check_dims(c: Sequence, Z: Sequence, g: BlockGeometry) -> None:
    if len(c) != g.n_block or len(Z) != g.n_boundary:
        raise ValueError(
            f"colouring sizes ({len(c)}, {len(Z)}) do not match block "
            f"{g.name} ({g.n_block}, {g.n_boundary})"
        )


def agrees(c: Sequence[int], Z: Sequence[Optional[int]], g: BlockGeometry) -> bool:
    """True iff ``c`` is proper on the block and avoids every coloured
    boundary neighbour."""
    _check_dims(c, Z, g)
    for a, b in g.internal_edges:
        if c[a] == c[b]:
            return False
    for z, v in g.boundary_edges:
        if Z[z] is not None and Z[z] == c[v]:
            return False
    return True


def canonical_key(c: Sequence[int], q: int, g: BlockGeometry) -> int:
    """Base-q packing of ``c`` with digits in ``g.order`` (first = most
    significant). For the 2x2 block this is lexicographic on (v3, v2, v4, v1)."""
    key = 0
    for v in g.order:
        key = key * q + (c[v] - 1)
    return key


def key_to_colouring(key: int, q: int, g: BlockGeometry) -> Colouring:
    out = [0] * g.n_block
    for v in reversed(g.order):
        key, d = divmod(key, q)
        out[v] = d + 1
    return tuple(out)


def enumerate_agreeing(
    Z: Sequence[Optional[int]], q: int, g: BlockGeometry
) -> list[Colouring]:
    """All block colourings agreeing with ``Z``, in canonical key order.

    Backtracks over the vertices in significance order, trying colours in
    increasing order, so the output is sorted without a final sort.
    """
    if len(Z) != g.n_boundary:
        raise ValueError(f"boundary of length {len(Z)} on block {g.name}")
    allowed = []
    for v in range(g.n_block):
        banned = {Z[z] for z in g.boundary_neighbours[v] if Z[z] is not None}
        allowed.append([c for c in range(1, q + 1) if c not in banned])
    earlier = []
    seen: set[int] = set()
    for v in g.order:
        earlier.append([u for u in g.block_neighbours[v] if u in seen])
        seen.add(v)

    n = g.n_block
    colour = [0] * n
    out: list[Colouring] = []

    def extend(level: int) -> None:
        if level == n:
            out.append(tuple(colour))
            return
        v = g.order[level]
        taken = {colour[u] for u in earlier[level]}
        for c in allowed[v]:
            if c not in taken:
                colour[v] = c
                extend(level + 1)

    extend(0)
    return out


def enumerate_by_filter(
    Z: Sequence[Optional[int]], q: int, g: BlockGeometry
) -> list[Colouring]:
    """Brute force over all q**N assignments; reference for the backtracker."""
    hits = [
        c for c in itertools.product(range(1, q + 1), repeat=g.n_block)
        if agrees(c, Z, g)
    ]
    return sorted(hits, key=lambda c: canonical_key(c, q, g))


def apply_symmetry_boundary(
    Z: Sequence[Optional[int]], s: Symmetry
) -> BoundaryColouring:
    """Colour boundary vertex s(z) with Z[z]."""
    out: list[Optional[int]] = [None] * len(Z)
    for z, col in enumerate(Z):
        out[s.boundary[z]] = col
    return tuple(out)


def apply_symmetry_block(c: Sequence[int], s: Symmetry) -> Colouring:
    out = [0] * len(c)
    for v, col in enumerate(c):
        out[s.block[v]] = col
    return tuple(out)


def corner_twin(g: BlockGeometry, i: int) -> Optional[int]:
    """The other boundary vertex on the same block vertex, if any.

    Both touch only that block vertex, so exchanging them is an
    automorphism of block plus boundary even when no isometry does it.
    """
    a = g.boundary_anchor[i]
    twins = [z for z in g.boundary_neighbours[a] if z != i]
    return twins[0] if twins else None


def symmetry_map_position(
    g: BlockGeometry, i: int, j: int
) -> Optional[tuple[int, int]]:
    """Move boundary position ``i`` onto a canonical slot by a symmetry.

    Returns ``(slot, image of j)``, trying symmetries in their stored order
    (identity first). If no isometry reaches a slot, ``i`` is first swapped
    with its corner twin, which reaches the long-side corner positions of
    the 2x3 block. ``None`` when neither works, as for the middle positions
    of the 2x3 block.
    """
    for cand in (i, corner_twin(g, i)):
        if cand is None:
            continue
        for s in g.symmetries:
            if s.boundary[cand] in g.slots:
                return s.boundary[cand], s.block[j]
    return None


def format_colouring(c: Sequence[Optional[int]]) -> str:
    """Digits in label order, ``*`` for a wildcard."""
    return "".join("*" if x is None else str(x) for x in c)


def parse_colouring(text: str) -> BoundaryColouring:
    return tuple(None if ch == "*" else int(ch) for ch in text.strip())


def geometry_arrays(g: BlockGeometry):
    """Dense tables for the numba kernels.

    Returns ``(order, prev, n_prev, bnb, n_bnb)``: ``prev[l]`` lists the
    block neighbours of ``order[l]`` that sit earlier in the order, ``bnb[v]``
    the boundary neighbours of v.
    """
    n = g.n_block
    order = np.array(g.order, dtype=np.int64)
    prev = np.full((n, 4), -1, dtype=np.int64)
    n_prev = np.zeros(n, dtype=np.int64)
    seen: set[int] = set()
    for level, v in enumerate(g.order):
        us = [u for u in g.block_neighbours[v] if u in seen]
        prev[level, : len(us)] = us
        n_prev[level] = len(us)
        seen.add(v)
    bnb = np.full((n, 2), -1, dtype=np.int64)
    n_bnb = np.zeros(n, dtype=np.int64)
    for v in range(n):
        zs = g.boundary_neighbours[v]
        bnb[v, : len(zs)] = zs
        n_bnb[v] = len(zs)
    return order, prev, n_prev, bnb, n_bnb

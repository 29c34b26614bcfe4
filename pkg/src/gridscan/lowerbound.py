"""Lower bounds on per-vertex disagreement valid for every coupling, and the
resulting lower bounds on the influence sum alpha, for q=6."""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels
from .block import (
    BlockGeometry,
    format_colouring,
    geometry_arrays,
    parse_block,
    parse_colouring,
    symmetry_map_position,
)
from .seven import PairSpace, frac_str, parse_frac, shard_range

# largest full sweeps we run; 3x3 would need ~1.1e10 pairs
FULL_OK = {(2, 2), (2, 3)}


def _fr(*xs: str) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in xs)


# published lower bounds: (block, slot index) -> {vertex: value}
TARGETS: dict[tuple[str, int], dict[int, Fraction]] = {
    ("2x2", 0): dict(zip((0, 1, 2, 3), _fr("0.379", "0.107", "0.050", "0.107"))),
    ("2x3", 0): dict(zip((0, 2, 3, 5), _fr("0.3671", "0.0298", "0.0997", "0.0174"))),
    ("3x3", 0): dict(zip((0, 2, 6, 8), _fr("0.3537", "0.0245", "0.0245", "0.0071"))),
    ("3x3", 1): dict(zip((0, 2, 6, 8), _fr("0.0838", "0.0838", "0.0138", "0.0138"))),
}


@dataclass(frozen=True)
class MarginalCounts:
    m: tuple[int, ...]
    m_prime: tuple[int, ...]
    M: int

    def lower_bound(self) -> Fraction:
        s = sum(min(a, b) for a, b in zip(self.m, self.m_prime))
        return 1 - Fraction(s, self.M)


@dataclass(frozen=True)
class WitnessPair:
    Z: tuple[int, ...]
    Z2: tuple[int, ...]
    vertex: int
    bound: Fraction

    def line(self) -> str:
        return (f"{format_colouring(self.Z)} {format_colouring(self.Z2)} "
                f"v{self.vertex + 1} {frac_str(self.bound)}")


class CountCache:
    """Per-vertex colour counts of agreeing colourings, memoised by boundary."""

    def __init__(self, g: BlockGeometry, q: int):
        self.g, self.q = g, q
        self.arrays = geometry_arrays(g)
        self._memo: dict[tuple, tuple[np.ndarray, int]] = {}

    def __call__(self, Z: Sequence[Optional[int]]) -> tuple[np.ndarray, int]:
        key = tuple(Z)
        hit = self._memo.get(key)
        if hit is None:
            z = np.array([-1 if c is None else c - 1 for c in Z], np.int64)
            counts = np.zeros((self.g.n_block, self.q), np.int64)
            total = kernels.marginal_counts(*self.arrays, z, self.q, counts)
            if len(self._memo) > 100_000:
                self._memo.clear()
            hit = self._memo[key] = (counts, int(total))
        return hit


def marginal_counts(Z, Z2, vertex: int, q: int, g: BlockGeometry,
                    cache: Optional[CountCache] = None) -> MarginalCounts:
    cache = cache or CountCache(g, q)
    cA, NA = cache(Z)
    cB, NB = cache(Z2)
    if NA == 0 or NB == 0:
        raise ValueError("over-constrained boundary: no agreeing colouring")
    return MarginalCounts(
        tuple(int(x) * NB for x in cA[vertex]),
        tuple(int(x) * NA for x in cB[vertex]),
        NA * NB,
    )


def min_coupling_lower_bound(Z, Z2, vertex: int, q: int, g: BlockGeometry,
                             cache: Optional[CountCache] = None) -> Fraction:
    """``1 - sum_c min(m_c, m'_c) / M``; no coupling of the two block
    distributions disagrees at ``vertex`` with smaller probability."""
    return marginal_counts(Z, Z2, vertex, q, g, cache).lower_bound()


# ------------------------------------------------------------------ full

def full_sweep(g: BlockGeometry, q: int = 6, slot: Optional[int] = None,
               fix_colours: Optional[bool] = None, shards: int = 1,
               shard_ids: Optional[Iterable[int]] = None) -> list[WitnessPair]:
    """Exact per-vertex maxima over all pairs differing at ``slot``.

    2x3 defaults to fixing the slot colours to (1, 2), which loses nothing
    because the bound is invariant under a joint colour permutation.
    """
    if (g.rows, g.cols) not in FULL_OK:
        raise ValueError(
            f"full sweep of the {g.name} block is infeasible "
            f"(about {q ** (g.n_boundary - 1) * q * (q - 1):.2e} pairs); "
            "use search or witness mode"
        )
    slot = g.slots[0] if slot is None else slot
    fix = (g.rows, g.cols) != (2, 2) if fix_colours is None else fix_colours
    space = PairSpace(g, q, slot)
    n = g.n_block
    best = [(Fraction(0), -1)] * n
    ids = range(shards) if shard_ids is None else shard_ids
    for k in ids:
        start, stop = shard_range(space.n_outer, shards, k)
        num = np.zeros(n, np.int64)
        den = np.ones(n, np.int64)
        idx = np.full(n, -1, np.int64)
        kernels.sweep_lower_range(*geometry_arrays(g), q, slot, space.others,
                                  start, stop, fix, num, den, idx)
        for v in range(n):
            if idx[v] < 0:
                continue
            cand = (Fraction(int(num[v]), int(den[v])), int(idx[v]))
            cur = best[v]
            if cur[1] < 0 or cand[0] > cur[0] or (
                cand[0] == cur[0] and cand[1] < cur[1]
            ):
                best[v] = cand
    out = []
    for v, (val, i) in enumerate(best):
        if i >= 0:
            Z, Z2 = space.decode(i)
            out.append(WitnessPair(Z, Z2, v, val))
    return out


# ---------------------------------------------------------------- search

def hill_climb(g: BlockGeometry, vertex: int, q: int = 6,
               slot: Optional[int] = None, budget: int = 20_000,
               seed: int = 0, cache: Optional[CountCache] = None,
               start: Optional[tuple[Sequence[int], Sequence[int]]] = None
               ) -> WitnessPair:
    """Seeded first-improvement hill climbing with random restarts.

    A move recolours one non-slot boundary vertex in both Z and Z', or
    changes the colour of Z' at the slot. ``budget`` caps the number of
    bound evaluations.
    """
    slot = g.slots[0] if slot is None else slot
    rng = np.random.default_rng(seed)
    cache = cache or CountCache(g, q)
    others = [z for z in range(g.n_boundary) if z != slot]

    def value(Z, Z2):
        return min_coupling_lower_bound(Z, Z2, vertex, q, g, cache)

    def random_pair():
        Z = [int(c) for c in rng.integers(1, q + 1, g.n_boundary)]
        Z2 = list(Z)
        Z2[slot] = int(rng.choice([c for c in range(1, q + 1) if c != Z[slot]]))
        return Z, Z2

    best: Optional[WitnessPair] = None
    evals = 0
    first = True
    while evals < budget:
        if first and start is not None:
            Z, Z2 = list(start[0]), list(start[1])
        else:
            Z, Z2 = random_pair()
        first = False
        cur = value(Z, Z2)
        evals += 1
        improved = True
        while improved and evals < budget:
            improved = False
            moves = [(z, c) for z in others for c in range(1, q + 1) if c != Z[z]]
            moves += [(-1, c) for c in range(1, q + 1)
                      if c not in (Z[slot], Z2[slot])]
            for k in rng.permutation(len(moves)):
                z, c = moves[k]
                A, B = list(Z), list(Z2)
                if z < 0:
                    B[slot] = c
                else:
                    A[z] = B[z] = c
                val = value(A, B)
                evals += 1
                if val > cur:
                    Z, Z2, cur = A, B, val
                    improved = True
                    break
                if evals >= budget:
                    break
        if best is None or cur > best.bound:
            best = WitnessPair(tuple(Z), tuple(Z2), vertex, cur)
    assert best is not None
    return best


def search(g: BlockGeometry, vertices: Sequence[int], q: int = 6,
           slot: Optional[int] = None, budget: int = 20_000, seed: int = 0,
           time_limit: Optional[float] = None) -> list[WitnessPair]:
    """Best witness per target vertex; each vertex gets its own seed."""
    ss = np.random.SeedSequence(seed)
    seeds = ss.spawn(len(vertices))
    cache = CountCache(g, q)
    out = []
    t0 = time.time()
    for v, s in zip(vertices, seeds):
        out.append(hill_climb(g, v, q, slot, budget,
                              int(s.generate_state(1)[0]), cache))
        if time_limit is not None and time.time() - t0 > time_limit:
            break
    return out


# --------------------------------------------------------------- witness

def read_witnesses(path: Path | str) -> list[WitnessPair]:
    out = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        a, b, v, f = line.split()
        out.append(WitnessPair(parse_colouring(a), parse_colouring(b),
                               int(v.lstrip("v")) - 1, parse_frac(f)))
    return out


def write_witnesses(path: Path | str, ws: Iterable[WitnessPair],
                    header: str = "") -> None:
    text = "".join(f"# {h}\n" for h in header.splitlines() if h)
    text += "".join(w.line() + "\n" for w in ws)
    Path(path).write_text(text)


def check_witness(w: WitnessPair, g: BlockGeometry, q: int = 6,
                  slot: Optional[int] = None,
                  cache: Optional[CountCache] = None) -> bool:
    """The pair differs exactly at the slot and its bound is as recorded."""
    slot = g.slots[0] if slot is None else slot
    diff = [z for z in range(g.n_boundary) if w.Z[z] != w.Z2[z]]
    if diff != [slot]:
        return False
    return min_coupling_lower_bound(w.Z, w.Z2, w.vertex, q, g, cache) == w.bound


def witness_file(block: str, slot_index: int = 0) -> Path:
    name = f"witness_{block}" + (f"_slot{slot_index}" if slot_index else "")
    return Path(__file__).parent / "data" / f"{name}.txt"


# ----------------------------------------------------------------- alpha

def position_bounds(g: BlockGeometry, per_slot: dict[int, Sequence[Fraction]],
                    j: int = 0) -> dict[int, Fraction]:
    """Lower bound on the influence of each boundary position on block
    vertex ``j``: the slot value for the image of ``j``, or 0 when the
    position reaches no slot with a bound."""
    out = {}
    for i in range(g.n_boundary):
        hit = symmetry_map_position(g, i, j)
        if hit is None or hit[0] not in per_slot:
            out[i] = Fraction(0)
        else:
            out[i] = Fraction(per_slot[hit[0]][hit[1]])
    return out


def alpha_lower_bound(bounds: dict[int, Fraction] | Sequence[Fraction]) -> Fraction:
    vals = bounds.values() if isinstance(bounds, dict) else bounds
    return sum((Fraction(x) for x in vals), Fraction(0))


def block_from_name(name: str) -> BlockGeometry:
    return parse_block(name)

"""Exhaustive q=7 sweep over 2x2 boundary pairs, the influence table and
the resulting mixing bound."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .block import (
    BlockGeometry,
    block_geometry,
    format_colouring,
    geometry_arrays,
    parse_colouring,
    symmetry_map_position,
)
from .coupling import FastCoupler

THRESHOLDS = (
    Fraction(283, 1000),
    Fraction(79, 1000),
    Fraction(51, 1000),
    Fraction(79, 1000),
)


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def parse_frac(s: str) -> Fraction:
    n, d = s.split("/")
    return Fraction(int(n), int(d))


# ---------------------------------------------------------------- indexing

@dataclass(frozen=True)
class PairSpace:
    """Ordered boundary pairs differing exactly at one slot.

    Pair index = outer*q*(q-1) + c*(q-1) + rank(c'), where ``outer`` encodes
    the other boundary colours in base q (z-order, first most significant)
    and c' is ranked among the colours different from c.
    """

    g: BlockGeometry
    q: int
    slot: int

    @property
    def others(self) -> np.ndarray:
        return np.array(
            [z for z in range(self.g.n_boundary) if z != self.slot], np.int64
        )

    @property
    def n_outer(self) -> int:
        return self.q ** (self.g.n_boundary - 1)

    def n_pairs(self, fix: bool) -> int:
        return self.n_outer * (2 if fix else self.q * (self.q - 1))

    def decode(self, idx: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        q = self.q
        outer, rest = divmod(idx, q * (q - 1))
        c, rank = divmod(rest, q - 1)
        c2 = rank + 1 if rank >= c else rank
        Z = [0] * self.g.n_boundary
        for z in reversed(self.others.tolist()):
            outer, d = divmod(outer, q)
            Z[z] = d + 1
        Z2 = list(Z)
        Z[self.slot] = c + 1
        Z2[self.slot] = c2 + 1
        return tuple(Z), tuple(Z2)

    def encode(self, Z: Sequence[int], Z2: Sequence[int]) -> int:
        q = self.q
        outer = 0
        for z in self.others.tolist():
            outer = outer * q + (Z[z] - 1)
        c, c2 = Z[self.slot] - 1, Z2[self.slot] - 1
        rank = c2 - 1 if c2 > c else c2
        return outer * q * (q - 1) + c * (q - 1) + rank


def shard_range(n_outer: int, shards: int, shard_id: int) -> tuple[int, int]:
    """Contiguous block of outer indices for one shard."""
    if not 0 <= shard_id < shards:
        raise ValueError(f"shard id {shard_id} outside 0..{shards - 1}")
    return n_outer * shard_id // shards, n_outer * (shard_id + 1) // shards


# ----------------------------------------------------------------- reports

@dataclass
class VertexMax:
    value: Fraction
    index: int  # pair index of the witness, -1 if none
    witness: Optional[tuple[str, str]] = None


def _better(a: VertexMax, b: VertexMax) -> VertexMax:
    """Larger value wins; equal values keep the smaller pair index."""
    if b.index < 0:
        return a
    if a.index < 0:
        return b
    if b.value > a.value or (b.value == a.value and b.index < a.index):
        return b
    return a


@dataclass
class SweepReport:
    block: str
    q: int
    slot: int
    fix_colours: bool
    per_vertex: list[VertexMax]
    pairs_processed: int
    thresholds: list[Fraction]
    shards_done: list[int] = field(default_factory=list)
    n_shards: int = 1
    timing: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(m.value < t for m, t in zip(self.per_vertex, self.thresholds))

    @property
    def complete(self) -> bool:
        return sorted(self.shards_done) == list(range(self.n_shards))

    def maxima(self) -> list[Fraction]:
        return [m.value for m in self.per_vertex]

    def to_json(self) -> dict:
        return {
            "block": self.block,
            "q": self.q,
            "slot": self.slot,
            "fix_colours": self.fix_colours,
            "certifying": not self.fix_colours,
            "pairs_processed": self.pairs_processed,
            "n_shards": self.n_shards,
            "shards_done": sorted(self.shards_done),
            "complete": self.complete,
            "pass": self.passed,
            "per_vertex": [
                {
                    "vertex": f"v{v + 1}",
                    "max": frac_str(m.value),
                    "max_decimal": f"{float(m.value):.8f}",
                    "threshold": frac_str(t),
                    "below_threshold": m.value < t,
                    "pair_index": m.index,
                    "witness": list(m.witness) if m.witness else None,
                }
                for v, (m, t) in enumerate(zip(self.per_vertex, self.thresholds))
            ],
            "timing": self.timing,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SweepReport":
        pv = [
            VertexMax(parse_frac(e["max"]), e["pair_index"],
                      tuple(e["witness"]) if e["witness"] else None)
            for e in d["per_vertex"]
        ]
        return cls(
            block=d["block"], q=d["q"], slot=d["slot"],
            fix_colours=d["fix_colours"], per_vertex=pv,
            pairs_processed=d["pairs_processed"],
            thresholds=[parse_frac(e["threshold"]) for e in d["per_vertex"]],
            shards_done=list(d["shards_done"]), n_shards=d["n_shards"],
            timing=dict(d.get("timing", {})),
        )


def merge_reports(reports: Sequence[SweepReport]) -> SweepReport:
    """Max-merge of shard reports; associative and order independent."""
    if not reports:
        raise ValueError("nothing to merge")
    r0 = reports[0]
    for r in reports[1:]:
        if (r.block, r.q, r.slot, r.fix_colours, r.n_shards) != (
            r0.block, r0.q, r0.slot, r0.fix_colours, r0.n_shards
        ):
            raise ValueError("reports come from different sweeps")
    done = sorted({s for r in reports for s in r.shards_done})
    if sum(len(r.shards_done) for r in reports) != len(done):
        raise ValueError("overlapping shards in merge")
    per_vertex = list(r0.per_vertex)
    for r in reports[1:]:
        per_vertex = [_better(a, b) for a, b in zip(per_vertex, r.per_vertex)]
    return SweepReport(
        block=r0.block, q=r0.q, slot=r0.slot, fix_colours=r0.fix_colours,
        per_vertex=per_vertex,
        pairs_processed=sum(r.pairs_processed for r in reports),
        thresholds=list(r0.thresholds), shards_done=done,
        n_shards=r0.n_shards,
        timing={"wall_seconds": sum(r.timing.get("wall_seconds", 0.0)
                                    for r in reports)},
    )


# ------------------------------------------------------------------ sweep

def _run_shard(args) -> dict:
    q, fix, shards, shard_id, outer_range = args
    g = block_geometry(2, 2)
    space = PairSpace(g, q, g.slots[0])
    start, stop = outer_range or shard_range(space.n_outer, shards, shard_id)
    n = g.n_block
    num = np.zeros(n, np.int64)
    den = np.ones(n, np.int64)
    idx = np.full(n, -1, np.int64)
    t0 = time.time()
    visited = kernels.sweep_coupling_range(
        *geometry_arrays(g), q, space.slot, space.others, start, stop, fix,
        num, den, idx,
    )
    wall = time.time() - t0
    per_vertex = [VertexMax(Fraction(0), -1) for _ in range(n)]
    for level, v in enumerate(g.order):
        if idx[level] >= 0:
            Z, Z2 = space.decode(int(idx[level]))
            per_vertex[v] = VertexMax(
                Fraction(int(num[level]), int(den[level])), int(idx[level]),
                (format_colouring(Z), format_colouring(Z2)),
            )
    rep = SweepReport(
        block=g.name, q=q, slot=space.slot, fix_colours=fix,
        per_vertex=per_vertex, pairs_processed=int(visited),
        thresholds=list(THRESHOLDS), shards_done=[shard_id], n_shards=shards,
        timing={"wall_seconds": wall},
    )
    return rep.to_json()


def shard_file(directory: Path, shards: int, shard_id: int) -> Path:
    return Path(directory) / f"shard-{shard_id:04d}-of-{shards:04d}.json"


def sweep_seven(
    q: int = 7,
    shards: int = 1,
    shard_ids: Optional[Sequence[int]] = None,
    fix_colours: bool = False,
    resume_dir: Optional[os.PathLike] = None,
    threads: int = 1,
    outer_range: Optional[tuple[int, int]] = None,
) -> SweepReport:
    """Sweep ordered boundary pairs of the 2x2 block differing at z1.

    Every pair gets the three-phase coupling; the exact per-vertex maxima
    and their witnesses are returned. With ``resume_dir`` each finished
    shard is written there and skipped on the next call. ``outer_range``
    restricts a single-shard run to a slice of outer indices (tests).
    """
    ids = list(range(shards)) if shard_ids is None else list(shard_ids)
    done: list[SweepReport] = []
    todo = []
    for k in ids:
        if resume_dir is not None:
            f = shard_file(Path(resume_dir), shards, k)
            if f.exists():
                rep = SweepReport.from_json(json.loads(f.read_text()))
                if rep.fix_colours == fix_colours and rep.q == q:
                    done.append(rep)
                    continue
        todo.append((q, fix_colours, shards, k, outer_range))

    def store(d: dict) -> SweepReport:
        rep = SweepReport.from_json(d)
        if resume_dir is not None:
            Path(resume_dir).mkdir(parents=True, exist_ok=True)
            f = shard_file(Path(resume_dir), shards, rep.shards_done[0])
            tmp = f.with_suffix(".tmp")
            tmp.write_text(json.dumps(d, indent=1))
            tmp.replace(f)
        return rep

    if threads > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            for d in ex.map(_run_shard, todo):
                done.append(store(d))
    else:
        for t in todo:
            done.append(store(_run_shard(t)))
    return merge_reports(done)


def verify_witnesses(report: SweepReport) -> bool:
    """Recompute every witness pair in isolation and compare exactly."""
    g = block_geometry(2, 2)
    fc = FastCoupler(g, report.q)
    space = PairSpace(g, report.q, report.slot)
    for v, m in enumerate(report.per_vertex):
        if m.witness is None:
            continue
        Z, Z2 = (parse_colouring(s) for s in m.witness)
        if space.encode(Z, Z2) != m.index:
            return False
        num, den = fc.mismatch(Z, Z2)
        if Fraction(num[v], den) != m.value:
            return False
    return True


# -------------------------------------------------------- influence table

@dataclass(frozen=True)
class InfluenceTable:
    # boundary position -> bound on the influence of that position on j
    rho_by_position: dict[int, Fraction]
    j: int = 0

    def rho(self, i: Optional[int]) -> Fraction:
        """Influence of vertex ``i``; non-boundary vertices (``None`` or
        unknown labels) have none."""
        if i is None:
            return Fraction(0)
        return self.rho_by_position.get(i, Fraction(0))

    @property
    def alpha(self) -> Fraction:
        return sum(self.rho_by_position.values(), Fraction(0))

    @property
    def mixing_constant(self) -> Optional[Fraction]:
        a = self.alpha
        return 1 / (1 - a) if a < 1 else None


def influence_table(
    maxima: Sequence[Fraction], g: Optional[BlockGeometry] = None, j: int = 0
) -> InfluenceTable:
    """Bound the influence of each boundary position on block vertex ``j``
    by the vertex maximum that position maps to under the block symmetry."""
    g = g or block_geometry(2, 2)
    table = {}
    for i in range(g.n_boundary):
        hit = symmetry_map_position(g, i, j)
        table[i] = Fraction(0) if hit is None else Fraction(maxima[hit[1]])
    return InfluenceTable(table, j)


@dataclass(frozen=True)
class NoBound:
    alpha: Fraction


@dataclass(frozen=True)
class MixingBound:
    alpha: Fraction
    constant: Fraction
    scan_bound: int


def alpha_and_mixing(table: InfluenceTable, n: int, eps) -> MixingBound | NoBound:
    """``ceil(ln(n/eps) / (1 - alpha))`` scans, or :class:`NoBound`."""
    if n < 1 or not 0 < eps < 1:
        raise ValueError("need n >= 1 and 0 < eps < 1")
    a = table.alpha
    if a >= 1:
        return NoBound(a)
    const = 1 / (1 - a)
    bound = math.ceil(math.log(n / float(eps)) * float(const))
    return MixingBound(a, const, bound)

"""Systematic scan with 2x2 heat-bath block updates on a torus.

The torus is stored as ``cells[y, x]``; block and boundary offsets come
from the 2x2 geometry, so a block anchored at (ax, ay) covers
x in {ax, ax+1} and y in {ay, ay+1} with wrap-around.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional, Sequence

import numpy as np
from numba import njit
from scipy import stats

from . import kernels
from .block import block_geometry, enumerate_agreeing, format_colouring, geometry_arrays


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


@dataclass
class TorusColouring:
    width: int
    height: int
    q: int
    cells: np.ndarray  # int64 [height, width], colours 1..q

    def __post_init__(self):
        if self.width < 4 or self.height < 4 or self.width % 2 or self.height % 2:
            raise ValueError("torus sides must be even and at least 4")
        if self.cells.shape != (self.height, self.width):
            raise ValueError("cells do not match the torus size")

    def copy(self) -> "TorusColouring":
        return TorusColouring(self.width, self.height, self.q, self.cells.copy())

    def is_proper(self) -> bool:
        c = self.cells
        return bool(np.all(c != np.roll(c, 1, 0)) and np.all(c != np.roll(c, 1, 1)))


def stripes(width: int, height: int, q: int = 7) -> TorusColouring:
    """Proper four-colour stripe pattern (needs q >= 4)."""
    y, x = np.indices((height, width))
    return TorusColouring(width, height, q, (1 + x % 2 + 2 * (y % 2)).astype(np.int64))


def row_major_schedule(width: int, height: int) -> np.ndarray:
    """Block anchors (ax, ay), row by row."""
    return np.array([(ax, ay) for ay in range(0, height, 2)
                     for ax in range(0, width, 2)], np.int64)


def _offsets():
    g = block_geometry(2, 2)
    return (np.array(g.block_coords, np.int64),
            np.array(g.boundary_coords, np.int64))


# ------------------------------------------------------------------- kernels

@njit(cache=True)
def _update(cells, q, ax, ay, u, bxy, zxy, order, prev, n_prev, bnb, n_bnb,
            Z, keys):
    h, w = cells.shape
    for k in range(zxy.shape[0]):
        Z[k] = cells[(ay + zxy[k, 1]) % h, (ax + zxy[k, 0]) % w] - 1
    n = kernels.enum_keys(order, prev, n_prev, bnb, n_bnb, Z, q, keys)
    idx = int(u * n)
    if idx >= n:
        idx = n - 1
    key = keys[idx]
    for lv in range(order.shape[0] - 1, -1, -1):
        v = order[lv]
        cells[(ay + bxy[v, 1]) % h, (ax + bxy[v, 0]) % w] = key % q + 1
        key //= q
    return n


@njit(cache=True)
def _scan(cells, q, anchors, us, bxy, zxy, order, prev, n_prev, bnb, n_bnb):
    Z = np.empty(zxy.shape[0], np.int64)
    keys = np.empty(q ** 4, np.int64)
    for b in range(anchors.shape[0]):
        _update(cells, q, anchors[b, 0], anchors[b, 1], us[b], bxy, zxy,
                order, prev, n_prev, bnb, n_bnb, Z, keys)


@njit(cache=True)
def _draw_keys(Z, q, us, order, prev, n_prev, bnb, n_bnb, out):
    keys = np.empty(q ** 4, np.int64)
    n = kernels.enum_keys(order, prev, n_prev, bnb, n_bnb, Z, q, keys)
    for t in range(us.shape[0]):
        idx = int(us[t] * n)
        out[t] = idx if idx < n else n - 1
    return n


class Scanner:
    def __init__(self, q: int):
        self.q = q
        self.g = block_geometry(2, 2)
        self.arrays = geometry_arrays(self.g)
        self.bxy, self.zxy = _offsets()

    def heat_bath_update(self, state: TorusColouring, anchor, rng) -> TorusColouring:
        """Redraw the block at ``anchor`` uniformly from the colourings that
        agree with its current boundary; returns a new state."""
        out = state.copy()
        self.update_inplace(out, anchor, rng.random())
        return out

    def update_inplace(self, state: TorusColouring, anchor, u: float) -> int:
        Z = np.empty(8, np.int64)
        keys = np.empty(self.q ** 4, np.int64)
        n = _update(state.cells, self.q, int(anchor[0]), int(anchor[1]), u,
                    self.bxy, self.zxy, *self.arrays, Z, keys)
        assert n > 0, "no agreeing block colouring"
        return n

    def scan(self, state: TorusColouring, schedule: np.ndarray, rng=None,
             us: Optional[np.ndarray] = None) -> TorusColouring:
        """One heat-bath update per block, in schedule order (in place)."""
        if us is None:
            us = rng.random(len(schedule))
        _scan(state.cells, self.q, schedule, us, self.bxy, self.zxy, *self.arrays)
        return state


def heat_bath_update(state: TorusColouring, anchor, rng) -> TorusColouring:
    return Scanner(state.q).heat_bath_update(state, anchor, rng)


def scan(state: TorusColouring, schedule: np.ndarray, rng) -> TorusColouring:
    return Scanner(state.q).scan(state, schedule, rng)


# --------------------------------------------------------------- diagnostics

def hamming(a: TorusColouring, b: TorusColouring) -> int:
    return int(np.count_nonzero(a.cells != b.cells))


def perturb_one(state: TorusColouring, x: int, y: int) -> TorusColouring:
    """Copy with vertex (x, y) moved to the smallest colour that keeps the
    state proper."""
    c = state.cells
    h, w = c.shape
    nbrs = {c[(y + 1) % h, x], c[(y - 1) % h, x], c[y, (x + 1) % w], c[y, (x - 1) % w]}
    for col in range(1, state.q + 1):
        if col != c[y, x] and col not in nbrs:
            out = state.copy()
            out.cells[y, x] = col
            return out
    raise ValueError("no alternative colour at that vertex")


def discrepancy_decay(stateA: TorusColouring, stateB: TorusColouring,
                      scans: int, rng, schedule: Optional[np.ndarray] = None
                      ) -> list[int]:
    """Hamming distance after each scan, both chains fed the same uniforms."""
    sc = Scanner(stateA.q)
    schedule = row_major_schedule(stateA.width, stateA.height) if schedule is None else schedule
    A, B = stateA.copy(), stateB.copy()
    out = []
    for _ in range(scans):
        us = rng.random(len(schedule))
        sc.scan(A, schedule, us=us)
        sc.scan(B, schedule, us=us)
        out.append(hamming(A, B))
    return out


def decay_trials(width: int, height: int, q: int, scans: int, trials: int,
                 seed: int) -> np.ndarray:
    """``[trial, scan]`` Hamming distances from a one-vertex discrepancy in
    the stripe state, one spawned seed per trial.

    The discrepancy sits in the last block of the row-major scan, so earlier
    blocks see it on their boundary before it is overwritten.
    """
    base = stripes(width, height, q)
    other = perturb_one(base, width - 1, height - 1)
    out = np.zeros((trials, scans), np.int64)
    for t, s in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        rng = np.random.Generator(np.random.PCG64(s))
        out[t] = discrepancy_decay(base, other, scans, rng)
    return out


def sample_block_indices(Z: Sequence[int], q: int, draws: int, rng) -> tuple[np.ndarray, int]:
    """Indices (into the canonical agreeing list) of ``draws`` heat-bath
    draws for boundary ``Z``."""
    arrays = geometry_arrays(block_geometry(2, 2))
    z = np.array([c - 1 for c in Z], np.int64)
    out = np.empty(draws, np.int64)
    n = _draw_keys(z, q, rng.random(draws), *arrays, out)
    return out, int(n)


@dataclass
class ChiSquare:
    boundary: tuple[int, ...]
    support: int
    statistic: float
    pvalue: float
    counts: np.ndarray


def block_chi_square(Z: Sequence[int], q: int, draws: int, rng) -> ChiSquare:
    """Goodness of fit of heat-bath draws against uniform on C_Z."""
    idx, n = sample_block_indices(Z, q, draws, rng)
    counts = np.bincount(idx, minlength=n)
    stat, p = stats.chisquare(counts)
    return ChiSquare(tuple(Z), n, float(stat), float(p), counts)


def block_transition_matrix(Z: Sequence[int], q: int) -> tuple[list, np.ndarray, int]:
    """Exact one-block heat-bath kernel over all q**4 block states (proper
    or not) with the boundary held at ``Z``, as integers scaled by |C_Z|."""
    g = block_geometry(2, 2)
    states = list(product(range(1, q + 1), repeat=4))
    C = set(enumerate_agreeing(Z, q, g))
    row = np.array([1 if s in C else 0 for s in states], np.int64)
    return states, np.tile(row, (len(states), 1)), len(C)


def stationarity_defect(Z: Sequence[int], q: int) -> Fraction:
    """Max |(pi P - pi)(s)| for pi uniform on C_Z; zero means exact."""
    states, P, n = block_transition_matrix(Z, q)
    if not np.all(P.sum(axis=1) == n):
        raise AssertionError("kernel rows are not distributions")
    pi = P[0].copy()  # uniform on C_Z, scaled by n
    # (pi/n)(P/n) - pi/n, scaled by n*n
    diff = pi @ P - n * pi
    return Fraction(int(np.abs(diff).max()), n * n)


def write_decay_csv(path, dist: np.ndarray) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["trial", "scan", "hamming"])
        for t in range(dist.shape[0]):
            for s in range(dist.shape[1]):
                w.writerow([t, s + 1, int(dist[t, s])])


def write_chi_csv(path, results: Sequence[ChiSquare], q: int) -> None:
    g = block_geometry(2, 2)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["colouring", "count", "expected"])
        for r in results:
            exp = r.counts.sum() / r.support
            keys = enumerate_agreeing(r.boundary, q, g)
            zs = format_colouring(r.boundary)
            for c, k in zip(keys, r.counts):
                w.writerow([f"{zs}/{format_colouring(c)}", int(k), f"{exp:.3f}"])


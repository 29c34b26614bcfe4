import json
import math
from fractions import Fraction

import pytest

from gridscan.block import format_colouring
from gridscan.coupling import fast_mismatch
from gridscan.seven import (
    THRESHOLDS,
    InfluenceTable,
    MixingBound,
    NoBound,
    PairSpace,
    SweepReport,
    alpha_and_mixing,
    influence_table,
    merge_reports,
    shard_range,
    sweep_seven,
    verify_witnesses,
)

ONES = (1,) * 8


def test_pair_space_roundtrip(g22):
    sp = PairSpace(g22, 7, 0)
    assert sp.n_pairs(False) == 7 ** 8 * 6
    assert sp.n_pairs(True) == 2 * 7 ** 7
    for idx in (0, 1, 41, 42, 12345677, sp.n_pairs(False) - 1):
        Z, Z2 = sp.decode(idx)
        assert sp.encode(Z, Z2) == idx
        diff = [z for z in range(8) if Z[z] != Z2[z]]
        assert diff == [0]
    assert sp.decode(0) == ((1,) * 8, (2,) + (1,) * 7)


def test_single_pair_sweep_equals_pair_values(g22):
    # outer 0 with the colour fix is exactly the two orderings of (1, 2) at z1
    rep = sweep_seven(fix_colours=True, outer_range=(0, 1))
    assert rep.pairs_processed == 2
    a = fast_mismatch(ONES, (2,) + (1,) * 7, 7, g22)
    b = fast_mismatch((2,) + (1,) * 7, ONES, 7, g22)
    assert rep.maxima() == [max(x, y) for x, y in zip(a, b)]
    assert verify_witnesses(rep)


def test_shards_merge_identically():
    whole = sweep_seven(shards=1, outer_range=(0, 300))
    parts = [sweep_seven(outer_range=r) for r in ((0, 120), (120, 300))]
    for p, k in zip(parts, (0, 1)):
        p.shards_done, p.n_shards = [k], 2
    whole.n_shards = 1
    merged = merge_reports(parts)
    merged_rev = merge_reports(parts[::-1])
    for a, b, c in zip(whole.per_vertex, merged.per_vertex, merged_rev.per_vertex):
        assert a.value == b.value == c.value
        assert a.index == b.index == c.index
    assert merged.pairs_processed == whole.pairs_processed == 300 * 42


def test_shard_ranges_cover():
    n = 7 ** 7
    cuts = [shard_range(n, 64, k) for k in range(64)]
    assert cuts[0][0] == 0 and cuts[-1][1] == n
    assert all(a[1] == b[0] for a, b in zip(cuts, cuts[1:]))
    with pytest.raises(ValueError):
        shard_range(n, 4, 4)


def test_resume_skips_done(tmp_path):
    r1 = sweep_seven(shards=7 ** 6, shard_ids=[0, 1], fix_colours=True, resume_dir=tmp_path)
    files = sorted(p.name for p in tmp_path.iterdir())
    assert len(files) == 2
    # corrupting the stored wall time shows the file is reused, not recomputed
    f = tmp_path / files[0]
    d = json.loads(f.read_text())
    d["timing"]["wall_seconds"] = 123.0
    f.write_text(json.dumps(d))
    r2 = sweep_seven(shards=7 ** 6, shard_ids=[0, 1], fix_colours=True, resume_dir=tmp_path)
    assert r2.timing["wall_seconds"] >= 123.0
    assert r2.maxima() == r1.maxima()


def test_report_json_roundtrip():
    rep = sweep_seven(fix_colours=True, outer_range=(0, 50))
    d = rep.to_json()
    assert d["certifying"] is False
    back = SweepReport.from_json(json.loads(json.dumps(d)))
    assert back.maxima() == rep.maxima()
    assert [m.witness for m in back.per_vertex] == [m.witness for m in rep.per_vertex]


def test_influence_table_thresholds(g22):
    t = influence_table(THRESHOLDS, g22)
    assert sorted(t.rho_by_position.values()) == sorted(
        [Fraction(283, 1000)] * 2 + [Fraction(79, 1000)] * 4 + [Fraction(51, 1000)] * 2)
    assert t.rho(None) == 0
    assert influence_table([0, 0, 0, 0], g22).alpha == 0


def test_alpha_and_mixing_published_thresholds():
    t = influence_table(THRESHOLDS)
    res = alpha_and_mixing(t, 10 ** 6, Fraction(1, 100))
    assert isinstance(res, MixingBound)
    assert res.alpha == Fraction(984, 1000)
    assert res.constant == Fraction(125, 2) and res.constant <= 63
    assert res.scan_bound == math.ceil(math.log(10 ** 8) * 62.5)


def test_alpha_zero_and_no_bound():
    zero = InfluenceTable({i: Fraction(0) for i in range(8)})
    res = alpha_and_mixing(zero, 1, Fraction(1, 10))
    assert res.alpha == 0 and res.scan_bound == math.ceil(math.log(10))
    six = influence_table([Fraction(379, 1000), Fraction(107, 1000),
                           Fraction(50, 1000), Fraction(107, 1000)])
    res = alpha_and_mixing(six, 100, Fraction(1, 10))
    assert isinstance(res, NoBound) and res.alpha == Fraction(1286, 1000)
    with pytest.raises(ValueError):
        alpha_and_mixing(zero, 0, Fraction(1, 2))


def test_witness_tamper_detected():
    rep = sweep_seven(fix_colours=True, outer_range=(0, 20))
    m = rep.per_vertex[0]
    m.value = m.value + Fraction(1, 10 ** 9)
    assert not verify_witnesses(rep)


def test_witness_strings(g22):
    rep = sweep_seven(fix_colours=True, outer_range=(0, 5))
    for m in rep.per_vertex:
        if m.witness:
            assert all(len(s) == 8 for s in m.witness)
            assert format_colouring(PairSpace(g22, 7, 0).decode(m.index)[0]) == m.witness[0]


def test_process_pool_matches_serial():
    kw = dict(shards=7 ** 6, shard_ids=[0, 1, 2], fix_colours=True)
    a = sweep_seven(threads=1, **kw)
    b = sweep_seven(threads=2, **kw)
    assert a.maxima() == b.maxima()
    assert [m.index for m in a.per_vertex] == [m.index for m in b.per_vertex]

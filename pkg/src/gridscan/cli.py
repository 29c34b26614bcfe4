"""Command line entry point.

Exit codes: 0 success, 2 a bound was not met, 1 usage or runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

log = logging.getLogger("gridscan")

OUT_ENV = "GRIDSCAN_OUT"
EXIT_OK, EXIT_ERROR, EXIT_VIOLATED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _out_path(args, name: str | None) -> Path | None:
    if name is None:
        return None
    p = Path(name)
    if p.is_absolute():
        return p
    base = args.outdir or os.environ.get(OUT_ENV)
    return Path(base) / p if base else p


def _write_json(path: Path | None, data: dict) -> None:
    text = json.dumps(data, indent=1, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        log.info("wrote %s", path)


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


def _influence_json(maxima) -> dict:
    from .seven import alpha_and_mixing, influence_table, frac_str, NoBound

    table = influence_table(maxima)
    res = alpha_and_mixing(table, 1, Fraction(1, 2))
    out = {
        "rho_by_position": {f"z{i + 1}": frac_str(v)
                            for i, v in sorted(table.rho_by_position.items())},
        "alpha": frac_str(table.alpha),
        "alpha_decimal": f"{float(table.alpha):.6f}",
    }
    if isinstance(res, NoBound):
        out["mixing_constant"] = None
    else:
        out["mixing_constant"] = frac_str(res.constant)
        out["mixing_constant_decimal"] = f"{float(res.constant):.6f}"
    return out


# ------------------------------------------------------------------ verify7

def cmd_verify7(args) -> int:
    from .seven import sweep_seven, verify_witnesses

    ids = None if args.shard_id is None else [args.shard_id]
    t0 = time.time()
    rep = sweep_seven(shards=args.shards, shard_ids=ids,
                       fix_colours=args.fix_colours, resume_dir=args.resume,
                       threads=args.threads)
    rep.timing = {"wall_seconds": time.time() - t0,
                  "finished": time.strftime("%Y-%m-%dT%H:%M:%S")}
    d = rep.to_json()
    d["config"] = _config(args)
    if rep.complete:
        d["witnesses_reverified"] = verify_witnesses(rep)
        d["influence"] = _influence_json(rep.maxima())
    _write_json(_out_path(args, args.out), d)
    for m, t, v in zip(rep.per_vertex, rep.thresholds, range(4)):
        log.info("v%d max %s (%.6f) threshold %s", v + 1, m.value,
                 float(m.value), t)
    return EXIT_OK if rep.passed else EXIT_VIOLATED


# ------------------------------------------------------------------- lower6

def cmd_lower6(args) -> int:
    from . import lowerbound as lb
    from .block import parse_block

    g = parse_block(args.block)
    slot = g.slots[args.slot]
    targets = lb.TARGETS.get((g.name, args.slot), {})
    cache = lb.CountCache(g, 6)
    if args.mode == "full":
        try:
            ws = lb.full_sweep(g, slot=slot, shards=args.shards,
                               shard_ids=None if args.shard_id is None else [args.shard_id])
        except ValueError as e:
            print(f"lower6: {e}", file=sys.stderr)
            return EXIT_ERROR
    elif args.mode == "search":
        verts = sorted(targets) or list(range(g.n_block))
        ws = lb.search(g, verts, slot=slot, budget=args.budget, seed=args.seed)
    else:
        path = Path(args.witness) if args.witness else lb.witness_file(g.name, args.slot)
        ws = lb.read_witnesses(path)
        bad = [w for w in ws if not lb.check_witness(w, g, slot=slot, cache=cache)]
        if bad:
            for w in bad:
                print(f"lower6: witness does not verify: {w.line()}", file=sys.stderr)
            return EXIT_ERROR

    best = {}
    for w in ws:
        if w.vertex not in best or w.bound > best[w.vertex].bound:
            best[w.vertex] = w
    ok = all(v in best and best[v].bound >= t for v, t in targets.items())
    out = {
        "block": g.name,
        "slot": f"z{slot + 1}",
        "mode": args.mode,
        "config": _config(args),
        "maxima": {
            f"v{v + 1}": {
                "bound": lb.frac_str(w.bound),
                "decimal": f"{float(w.bound):.6f}",
                "target": lb.frac_str(targets[v]) if v in targets else None,
                "witness": w.line(),
            }
            for v, w in sorted(best.items())
        },
        "targets_met": ok,
    }
    if args.witness_out:
        lb.write_witnesses(_out_path(args, args.witness_out),
                           [best[v] for v in sorted(best)],
                           header=f"{g.name} slot z{slot + 1}, q=6")
    _write_json(_out_path(args, args.out), out)
    return EXIT_OK if ok else EXIT_VIOLATED


# ----------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    from . import simulate as sim

    out = _out_path(args, args.out)
    if args.diagnostic == "hamming":
        if args.q != 7:
            log.warning("decay diagnostic is meant for q=7")
        d = sim.decay_trials(args.width, args.height, args.q, args.scans,
                             args.trials, args.seed)
        if out:
            out.parent.mkdir(parents=True, exist_ok=True)
            sim.write_decay_csv(out, d)
        mean = d.mean(axis=0)
        print("scan,mean_hamming")
        for s, m in enumerate(mean, 1):
            print(f"{s},{m:.4f}")
    else:
        rng = sim.make_rng(args.seed)
        res = []
        for _ in range(args.trials):
            Z = tuple(int(c) for c in rng.integers(1, args.q + 1, 8))
            res.append(sim.block_chi_square(Z, args.q, args.scans, rng))
        if out:
            out.parent.mkdir(parents=True, exist_ok=True)
            sim.write_chi_csv(out, res, args.q)
        for r in res:
            print(f"{''.join(map(str, r.boundary))} support={r.support} "
                  f"chi2={r.statistic:.2f} p={r.pvalue:.4f}")
    return EXIT_OK


# ------------------------------------------------------------------- report

def cmd_report(args) -> int:
    from .seven import SweepReport, merge_reports, verify_witnesses

    files = sorted(Path(args.inp).glob("*.json")) if Path(args.inp).is_dir() else []
    reps = []
    for f in files:
        try:
            reps.append(SweepReport.from_json(json.loads(f.read_text())))
        except (KeyError, ValueError, json.JSONDecodeError):
            log.warning("skipping %s", f)
    if not reps:
        print(f"report: nothing to merge in {args.inp}", file=sys.stderr)
        return EXIT_ERROR
    try:
        rep = merge_reports(reps)
    except ValueError as e:
        print(f"report: {e}", file=sys.stderr)
        return EXIT_ERROR
    d = rep.to_json()
    d["config"] = _config(args)
    d["influence"] = _influence_json(rep.maxima())
    d["witnesses_reverified"] = verify_witnesses(rep)
    _write_json(_out_path(args, args.out), d)
    if not rep.complete:
        log.warning("only %d of %d shards present", len(rep.shards_done), rep.n_shards)
    return EXIT_OK if rep.passed else EXIT_VIOLATED


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gridscan", description=__doc__)
    p.add_argument("--threads", type=int, default=1, help="worker processes")
    p.add_argument("--outdir", help=f"base directory for outputs (env {OUT_ENV})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("verify7", help="exhaustive q=7 sweep on the 2x2 block")
    s.add_argument("--shards", type=int, default=1)
    s.add_argument("--shard-id", type=int)
    s.add_argument("--fix-colours", action="store_true",
                   help="only z1 colours (1,2); fast but not certifying")
    s.add_argument("--out", default=None)
    s.add_argument("--resume", default=None, help="checkpoint directory")
    s.set_defaults(func=cmd_verify7)

    s = sub.add_parser("lower6", help="q=6 coupling lower bounds")
    s.add_argument("--block", default="2x2", choices=["2x2", "2x3", "3x3"])
    s.add_argument("--mode", default="full", choices=["full", "search", "witness"])
    s.add_argument("--slot", type=int, default=0,
                   help="discrepancy slot index (3x3 has 0 and 1)")
    s.add_argument("--witness", help="witness file for witness mode")
    s.add_argument("--witness-out", help="write best witnesses here")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--budget", type=int, default=20_000)
    s.add_argument("--shards", type=int, default=1)
    s.add_argument("--shard-id", type=int)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_lower6)

    s = sub.add_parser("simulate", help="systematic scan diagnostics")
    s.add_argument("--width", type=int, default=8)
    s.add_argument("--height", type=int, default=8)
    s.add_argument("--q", type=int, default=7)
    s.add_argument("--scans", type=int, default=20,
                   help="scans per trial (hamming) or draws per boundary (blockchi)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--diagnostic", default="hamming", choices=["hamming", "blockchi"])
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("report", help="merge verify7 shard reports")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as e:
        print(f"gridscan: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

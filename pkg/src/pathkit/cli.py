"""``pathkit`` command line: synth | sample | stats | eval | baseline | align | masks.

Exit status: 0 on success, 1 on bad input, 2 when an internal invariant fails.
Progress and summaries go to stderr as one JSON object per line.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional

from . import io as pio
from .alignment import align_transcript, tokenize
from .baselines import RXR_STEPS, Policy, run_policy
from .grounding import DEFAULT_H, DEFAULT_W, TraceError, observed_fraction, pool_mask, step_windows, text_mask, visual_mask
from .metrics import SUCCESS_THRESHOLD_M, Episode, aggregate, evaluate_episode
from .navgraph import DEFAULT_SPACING_M, GraphError, build_room_graph, generate_synthetic_house, path_length
from .sampler import (
    MAX_LEN_M,
    MAX_LEVELS,
    MAX_PER_BUILDING,
    MAX_ROOMS,
    dataset_stats,
    greedy_select,
    sample_candidates,
)

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


def log(event: str, **fields):
    print(json.dumps({"event": event, **fields}), file=sys.stderr, flush=True)


def positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def non_negative_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {s}")
    return v


def positive_float(s: str) -> float:
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


# ---------------------------------------------------------------------------
# commands


def cmd_synth(args) -> int:
    g = generate_synthetic_house(args.rooms, args.panos_per_room, args.levels, args.spacing, args.seed, args.building_id)
    pio.write_graph(args.output, g)
    log("synth", building_id=g.building_id, nodes=len(g.nodes), edges=len(g.edges),
        room_vertices=len(build_room_graph(g).vertices), output=args.output)
    return EXIT_OK


def cmd_sample(args) -> int:
    graphs = pio.read_graphs(args.graph)
    pool = []
    for bid in sorted(graphs):
        cands = sample_candidates(graphs[bid], args.seed, args.max_rooms, args.max_levels, args.draws_per_room_path)
        log("candidates", building_id=bid, count=len(cands))
        pool.extend(cands)
    if not pool:
        raise pio.InputError("no feasible candidate paths in the supplied graphs")
    ds = greedy_select(pool, args.target, args.max_len_m, args.max_per_building)
    for p in ds.paths:
        assert p.length_m <= args.max_len_m, p.path_id
        assert abs(path_length(graphs[p.building_id], p.nodes) - p.length_m) < 1e-9, p.path_id
    assert max(ds.coverage.per_building.values()) <= args.max_per_building
    pio.write_jsonl(args.output, (p.to_dict() for p in ds.paths))
    if ds.shortfall:
        log("shortfall", requested=args.target, selected=len(ds.paths), shortfall=ds.shortfall)
    log("sample", selected=len(ds.paths), pool=len(pool), output=args.output)
    return EXIT_OK


def cmd_stats(args) -> int:
    graphs = pio.read_graphs(args.graph)
    paths = pio.read_paths(args.paths)
    report = dataset_stats(paths, graphs).to_dict()
    written = pio.emit_report(report, args.output)
    log("stats", count=report["count"], outputs=[str(p) for p in written])
    return EXIT_OK


def cmd_eval(args) -> int:
    graphs = pio.read_graphs(args.graph)
    refs = {p.path_id: p for p in pio.read_paths(args.paths)}
    executed = pio.read_executed(args.executed)
    episodes = []
    for pid in sorted(executed):
        if pid not in refs:
            raise pio.InputError(f"executed trajectory for unknown path {pid!r}")
        ref = refs[pid]
        if ref.building_id not in graphs:
            raise pio.InputError(f"no graph for building {ref.building_id!r}")
        ep = Episode(ref, tuple(executed[pid]), graphs[ref.building_id])
        m = evaluate_episode(ep, args.d_th, args.ne_euclidean)
        assert m.sdtw == m.sr * m.ndtw and m.spl <= m.sr, pid
        episodes.append((pid, m))
    if not episodes:
        raise pio.InputError("no episodes to evaluate")
    summary = aggregate([m for _, m in episodes])
    report = {
        "d_th": args.d_th,
        "ne": "euclidean" if args.ne_euclidean else "geodesic",
        "aggregate": summary,
        "episodes": [{"path_id": pid, **m.to_dict()} for pid, m in episodes],
    }
    pio.emit_report(report, args.output)
    log("eval", **{k: summary[k] for k in ("episodes", "sr_pct", "spl_pct", "ndtw_pct", "sdtw_pct")})
    return EXIT_OK


def cmd_baseline(args) -> int:
    graphs = pio.read_graphs(args.graph)
    rows = []
    for ref in pio.read_paths(args.paths):
        if ref.building_id not in graphs:
            raise pio.InputError(f"no graph for building {ref.building_id!r}")
        run = run_policy(args.policy, graphs[ref.building_id], ref.nodes, args.steps, args.seed, ref.path_id)
        assert len(run.executed) <= args.steps + 1
        rows.append({"path_id": ref.path_id, "nodes": list(run.executed)})
    pio.write_jsonl(args.output, rows)
    log("baseline", policy=args.policy, episodes=len(rows), output=args.output)
    return EXIT_OK


def cmd_align(args) -> int:
    manual = tokenize(pio._read_text(args.manual))
    asr = pio.read_asr(args.asr)
    instr, cost = align_transcript(manual, asr, args.instruction_id, args.language)
    pio.write_jsonl(args.output, [instr.to_dict()])
    log("align", tokens=len(instr.tokens), asr_tokens=len(asr), cost=cost, output=args.output)
    return EXIT_OK


def cmd_masks(args) -> int:
    trace = pio.read_trace(args.trace)
    instr = pio.read_instruction(args.instr)
    rows = []
    for t, start, end in step_windows(trace):
        vis = visual_mask(trace, t, args.h, args.w)
        rows.append({
            "step": t,
            "pano_id": trace.path[t],
            "window": [start, end],
            "text_mask": text_mask(instr, trace, t).tolist(),
            "pooled_mask": pool_mask(vis).tolist(),
            "observed_fraction": observed_fraction(vis),
        })
    pio.write_jsonl(args.output, rows)
    log("masks", steps=len(rows), output=args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic house graph")
    p.add_argument("--rooms", type=positive_int, required=True, help="rooms per level")
    p.add_argument("--panos-per-room", type=positive_int, required=True)
    p.add_argument("--levels", type=positive_int, default=1)
    p.add_argument("--spacing", type=positive_float, default=DEFAULT_SPACING_M, help="pano spacing in meters")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--building-id", default=None, help="defaults to synth-<seed>")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sample", help="two-level path sampling with greedy coverage selection")
    p.add_argument("-g", "--graph", action="append", required=True, help="graph JSON (repeatable)")
    p.add_argument("--target", type=positive_int, required=True, help="number of paths to select")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-rooms", type=positive_int, default=MAX_ROOMS)
    p.add_argument("--max-levels", type=positive_int, default=MAX_LEVELS)
    p.add_argument("--max-len-m", type=positive_float, default=MAX_LEN_M)
    p.add_argument("--max-per-building", type=positive_int, default=MAX_PER_BUILDING)
    p.add_argument("--draws-per-room-path", type=positive_int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("stats", help="path dataset statistics (JSON plus CSV histograms)")
    p.add_argument("-p", "--paths", required=True)
    p.add_argument("-g", "--graph", action="append", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="score executed trajectories against reference paths")
    p.add_argument("-g", "--graph", action="append", required=True)
    p.add_argument("-p", "--paths", required=True)
    p.add_argument("-e", "--executed", required=True)
    p.add_argument("--d-th", type=positive_float, default=SUCCESS_THRESHOLD_M, help="success threshold in meters")
    p.add_argument("--ne-euclidean", action="store_true", help="straight-line navigation error instead of geodesic")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="run a simple baseline policy on every path")
    p.add_argument("--policy", choices=[x.value for x in Policy], required=True)
    p.add_argument("-g", "--graph", action="append", required=True)
    p.add_argument("-p", "--paths", required=True)
    p.add_argument("--steps", type=non_negative_int, default=RXR_STEPS, help="step budget (8 RxR-style, 5 R2R-style)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("align", help="time-align a manual transcript to ASR tokens")
    p.add_argument("--manual", required=True, help="plain-text transcript (whitespace tokenized)")
    p.add_argument("--asr", required=True, help="ASR JSONL with text/start_s/end_s")
    p.add_argument("--instruction-id", default="")
    p.add_argument("--language", default="und", help="BCP-47 tag")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("masks", help="per-step text masks and pooled visual masks from a pose trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--instr", required=True)
    p.add_argument("--h", type=positive_int, default=DEFAULT_H)
    p.add_argument("--w", type=positive_int, default=DEFAULT_W)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_masks)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AssertionError as e:
        log("error", kind="invariant", message=str(e))
        return EXIT_INTERNAL
    except (pio.InputError, GraphError, TraceError, ValueError, KeyError) as e:
        log("error", kind="input", message=str(e))
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""File formats: graph JSON, path/executed/ASR/trace JSONL, atomic writes."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Sequence

from .alignment import TimedInstruction, TimedToken
from .grounding import PoseSample, PoseTrace, TraceError
from .navgraph import PanoGraph, dump_pano_graph, load_pano_graph
from .sampler import GuidePath


class InputError(ValueError):
    """Unreadable or malformed user input."""


def atomic_write_text(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def read_jsonl(path) -> List[dict]:
    rows = []
    for lineno, line in enumerate(_read_text(path).splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as e:
            raise InputError(f"{path}:{lineno}: malformed JSON ({e.msg})") from None
    return rows


def dumps_jsonl(rows: Iterable[dict]) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows)


def write_jsonl(path, rows: Iterable[dict]):
    atomic_write_text(path, dumps_jsonl(rows))


def write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def read_graph(path) -> PanoGraph:
    return load_pano_graph(_read_text(path))


def write_graph(path, g: PanoGraph):
    atomic_write_text(path, dump_pano_graph(g) + "\n")


def read_graphs(paths: Sequence) -> Dict[str, PanoGraph]:
    graphs = {}
    for p in paths:
        g = read_graph(p)
        if g.building_id in graphs:
            raise InputError(f"building {g.building_id!r} given twice")
        graphs[g.building_id] = g
    return graphs


def read_paths(path) -> List[GuidePath]:
    try:
        return [GuidePath.from_dict(r) for r in read_jsonl(path)]
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{path}: bad path record ({e})") from None


def read_executed(path) -> Dict[str, List[str]]:
    out = {}
    for r in read_jsonl(path):
        try:
            out[str(r["path_id"])] = [str(n) for n in r["nodes"]]
        except (KeyError, TypeError):
            raise InputError(f"{path}: executed rows need path_id and nodes") from None
    return out


def read_asr(path) -> List[TimedToken]:
    try:
        return [TimedToken(str(r["text"]), float(r["start_s"]), float(r["end_s"])) for r in read_jsonl(path)]
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{path}: bad ASR row ({e})") from None


def read_instruction(path) -> TimedInstruction:
    rows = read_jsonl(path)
    if len(rows) != 1:
        raise InputError(f"{path}: expected exactly one instruction record, got {len(rows)}")
    try:
        return TimedInstruction.from_dict(rows[0])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{path}: bad instruction record ({e})") from None


def read_trace(path) -> PoseTrace:
    """Pose trace JSONL: a header row ``{"path": [...]}`` followed by one row per sample."""
    rows = read_jsonl(path)
    if not rows or "path" not in rows[0]:
        raise InputError(f"{path}: first row must carry the viewpoint path")
    try:
        samples = [
            PoseSample(float(r["time_s"]), str(r["pano_id"]), float(r["heading_rad"]),
                       float(r["elevation_rad"]), float(r["vfov_rad"]))
            for r in rows[1:]
        ]
        return PoseTrace(tuple(samples), tuple(rows[0]["path"]))
    except (KeyError, TypeError) as e:
        raise InputError(f"{path}: bad pose sample ({e})") from None
    except TraceError as e:
        raise InputError(f"{path}: {e}") from None


def trace_rows(trace: PoseTrace) -> List[dict]:
    return [{"path": list(trace.path)}] + [s.to_dict() for s in trace.samples]


def histogram_csv(hist: Mapping[int, int], key: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([key, "count"])
    for k, v in sorted(hist.items()):
        w.writerow([k, v])
    return buf.getvalue()


HISTOGRAMS = {
    "length_m_histogram": ("length_m", "length_m_floor"),
    "length_edges_histogram": ("length_edges", "edges"),
    "visit_count_histogram": ("visit_counts", "visits"),
}


def emit_report(report: dict, path) -> List[Path]:
    """Write a report as JSON; histogram entries also go to sibling CSVs
    (``<stem>.length_m.csv`` and so on). Returns the files written."""
    path = Path(path)
    write_json(path, report)
    written = [path]
    for key, (suffix, column) in HISTOGRAMS.items():
        if key not in report:
            continue
        hist = {int(k): v for k, v in report[key].items()}
        csv_path = path.with_name(f"{path.stem}.{suffix}.csv")
        atomic_write_text(csv_path, histogram_csv(hist, column))
        written.append(csv_path)
    return written

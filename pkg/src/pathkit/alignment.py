"""Transfer ASR word timings onto a manual transcript with DTW."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .dtw import dtw


@dataclass(frozen=True)
class TimedToken:
    text: str
    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.text:
            raise ValueError("token text is empty")
        if not 0 <= self.start_s <= self.end_s:
            raise ValueError(f"bad token interval [{self.start_s}, {self.end_s}] for {self.text!r}")

    def to_dict(self) -> dict:
        return {"text": self.text, "start_s": self.start_s, "end_s": self.end_s}


@dataclass(frozen=True)
class TimedInstruction:
    instruction_id: str
    language: str
    tokens: Tuple[TimedToken, ...]

    def __post_init__(self):
        starts = [t.start_s for t in self.tokens]
        if any(b < a for a, b in zip(starts, starts[1:])):
            raise ValueError("token start times must be non-decreasing")

    def to_dict(self) -> dict:
        return {
            "instruction_id": self.instruction_id,
            "language": self.language,
            "tokens": [t.to_dict() for t in self.tokens],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TimedInstruction":
        tokens = tuple(TimedToken(t["text"], float(t["start_s"]), float(t["end_s"])) for t in d["tokens"])
        return cls(str(d.get("instruction_id", "")), str(d.get("language", "und")), tokens)


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def token_cost(a: str, b: str) -> float:
    """Case-insensitive edit distance normalized by the longer token, in [0, 1]."""
    a, b = a.lower(), b.lower()
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def tokenize(text: str) -> List[str]:
    return text.split()


def alignment_cost_matrix(manual: Sequence[str], asr: Sequence[TimedToken]) -> np.ndarray:
    return np.array([[token_cost(m, a.text) for a in asr] for m in manual], dtype=float).reshape(len(manual), len(asr))


def align_transcript(
    manual: Sequence[str],
    asr: Sequence[TimedToken],
    instruction_id: str = "",
    language: str = "und",
) -> Tuple[TimedInstruction, float]:
    """Align manual tokens to ASR tokens; returns the timed instruction and the warp cost.

    A manual token matched to several ASR tokens spans from the earliest start
    to the latest end among them.
    """
    if not manual or not asr:
        raise ValueError("both the manual transcript and the ASR output must be non-empty")
    starts = [a.start_s for a in asr]
    if any(b < a for a, b in zip(starts, starts[1:])):
        raise ValueError("ASR tokens must be ordered by start time")
    cost, path = dtw(alignment_cost_matrix(manual, asr))
    spans = {}
    for i, j in path:
        lo, hi = spans.get(i, (np.inf, -np.inf))
        spans[i] = (min(lo, asr[j].start_s), max(hi, asr[j].end_s))
    tokens = tuple(TimedToken(text, *spans[i]) for i, text in enumerate(manual))
    return TimedInstruction(instruction_id, language, tokens), cost

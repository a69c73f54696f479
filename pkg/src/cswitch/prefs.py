"""Pairwise preference dataset construction from human ratings.

Within each input, every pair of rated generations with unequal mean
scores becomes one preference pair; equal scores are dropped rather than
broken arbitrarily. Pairs split into easy/hard buckets by score margin.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Iterable, Sequence

from .corpus import GenerationRecord, RatingRecord, iter_jsonl
from .errors import ValidationError

log = logging.getLogger(__name__)

DIMENSIONS = ("combined", "accuracy", "fluency")
BUCKETS = ("easy", "hard")


@dataclass
class PreferencePair:
    input_id: str
    gen_a_id: str
    gen_b_id: str
    winner: str
    margin: float
    dimension: str
    bucket: str
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.gen_a_id == self.gen_b_id:
            raise ValidationError("a pair must compare two distinct generations")
        if self.winner not in ("a", "b"):
            raise ValidationError(f"winner must be 'a' or 'b', got {self.winner!r}")
        if self.margin <= 0:
            raise ValidationError("margin must be positive (ties are excluded)")
        if self.dimension not in DIMENSIONS:
            raise ValidationError(f"dimension {self.dimension!r} not in {DIMENSIONS}")
        if self.bucket not in BUCKETS:
            raise ValidationError(f"bucket {self.bucket!r} not in {BUCKETS}")

    def to_json_dict(self) -> dict[str, Any]:
        d = {
            "input_id": self.input_id,
            "gen_a_id": self.gen_a_id,
            "gen_b_id": self.gen_b_id,
            "winner": self.winner,
            "margin": self.margin,
            "dimension": self.dimension,
            "bucket": self.bucket,
        }
        d.update(self.extra)
        return d

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "PreferencePair":
        known = {"input_id", "gen_a_id", "gen_b_id", "winner", "margin", "dimension", "bucket"}
        return cls(
            input_id=str(d["input_id"]),
            gen_a_id=str(d["gen_a_id"]),
            gen_b_id=str(d["gen_b_id"]),
            winner=str(d["winner"]),
            margin=float(d["margin"]),
            dimension=str(d["dimension"]),
            bucket=str(d["bucket"]),
            extra={k: v for k, v in d.items() if k not in known},
        )


def load_pairs(path) -> list[PreferencePair]:
    out = []
    for line_no, obj in iter_jsonl(path):
        try:
            out.append(PreferencePair.from_json_dict(obj))
        except (ValidationError, KeyError, ValueError) as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from exc
    return out


@dataclass
class PrefStats:
    total: int
    easy: int
    hard: int


def mean_scores(ratings: Iterable[RatingRecord]) -> dict[str, dict[str, float]]:
    """Per-generation mean accuracy/fluency/combined over all its ratings."""
    sums: dict[str, list[float]] = {}
    for r in ratings:
        acc, flu, n = sums.setdefault(r.generation_id, [0.0, 0.0, 0.0])
        sums[r.generation_id] = [acc + r.accuracy, flu + r.fluency, n + 1]
    out = {}
    for gen_id, (acc, flu, n) in sums.items():
        a, f = acc / n, flu / n
        out[gen_id] = {"accuracy": a, "fluency": f, "combined": (a + f) / 2.0}
    return out


def build_pairs(
    ratings: Sequence[RatingRecord],
    generations: Sequence[GenerationRecord],
    dimension: str = "combined",
    threshold: float = 1.0,
) -> list[PreferencePair]:
    """All unordered preference pairs per input, bucketed by margin.

    Generations without any rating are excluded (with a warning); pairs
    whose mean scores are exactly equal are dropped. A pair is easy iff its
    margin is at least the threshold, hard otherwise.
    """
    if dimension not in DIMENSIONS:
        raise ValidationError(f"dimension {dimension!r} not in {DIMENSIONS}")
    if threshold < 0:
        raise ValidationError("threshold must be >= 0")
    scores = mean_scores(ratings)
    by_input: dict[str, list[GenerationRecord]] = {}
    for gen in generations:
        if gen.id not in scores:
            log.warning("generation %r has no ratings, skipping", gen.id)
            continue
        by_input.setdefault(gen.input_id, []).append(gen)

    pairs: list[PreferencePair] = []
    for input_id, gens in by_input.items():
        for gen_a, gen_b in combinations(gens, 2):
            score_a = scores[gen_a.id][dimension]
            score_b = scores[gen_b.id][dimension]
            if score_a == score_b:
                continue
            margin = abs(score_a - score_b)
            pairs.append(
                PreferencePair(
                    input_id=input_id,
                    gen_a_id=gen_a.id,
                    gen_b_id=gen_b.id,
                    winner="a" if score_a > score_b else "b",
                    margin=margin,
                    dimension=dimension,
                    bucket="easy" if margin >= threshold else "hard",
                )
            )
    return pairs


def pref_stats(pairs: Sequence[PreferencePair]) -> PrefStats:
    easy = sum(1 for p in pairs if p.bucket == "easy")
    return PrefStats(total=len(pairs), easy=easy, hard=len(pairs) - easy)

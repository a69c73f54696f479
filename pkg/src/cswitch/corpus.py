"""Parallel corpora and pipeline record types, persisted as JSON lines.

One record per line, UTF-8, text fields NFC-normalized. Unknown keys are
kept in an ``extra`` dict and written back out unchanged, so annotation
exports can carry columns this package does not know about.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ValidationError

GENERATION_METHODS = ("baseline", "human_ect", "ezswitch", "word_replacement")
DIRECTIONS = ("l1_to_cs", "l2_to_cs")
SOURCES = ("gold-human", "silver-llm")


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class LanguagePair:
    """A language pair with the human-readable names used inside prompts."""

    l1: str
    l2: str
    l1_name: str
    l2_name: str

    def __post_init__(self):
        if self.l1 == self.l2:
            raise ValidationError(f"l1 and l2 must differ, both are {self.l1!r}")
        if not self.l1_name.strip() or not self.l2_name.strip():
            raise ValidationError("language names must be non-empty")


@dataclass
class ParallelRecord:
    """One sentence pair, the unit of work for the whole pipeline."""

    id: str
    text_l1: str
    text_l2: str
    source: str = "gold-human"
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.text_l1 = nfc(self.text_l1)
        self.text_l2 = nfc(self.text_l2)
        if not self.id:
            raise ValidationError("record id must be non-empty")
        if not self.text_l1.strip() or not self.text_l2.strip():
            raise ValidationError(f"record {self.id!r}: both texts must be non-empty")
        if self.source not in SOURCES:
            raise ValidationError(
                f"record {self.id!r}: source {self.source!r} not in {SOURCES}"
            )

    def to_json_dict(self) -> dict[str, Any]:
        d = {
            "id": self.id,
            "text_l1": self.text_l1,
            "text_l2": self.text_l2,
            "source": self.source,
        }
        d.update(self.extra)
        return d

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "ParallelRecord":
        known = {"id", "text_l1", "text_l2", "source"}
        try:
            return cls(
                id=str(d["id"]),
                text_l1=str(d["text_l1"]),
                text_l2=str(d["text_l2"]),
                source=str(d.get("source", "gold-human")),
                extra={k: v for k, v in d.items() if k not in known},
            )
        except KeyError as exc:
            raise ValidationError(f"missing field {exc.args[0]!r}") from exc


@dataclass
class GenerationRecord:
    """One code-switched output together with how it was produced."""

    id: str
    input_id: str
    method: str
    model: str
    direction: str
    text_cs: str
    constraint_words: list[str] = field(default_factory=list)
    prompt_hash: str = ""
    decode_params: dict[str, Any] = field(default_factory=dict)
    constraint_coverage: float | None = None
    warning: str | None = None
    error: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.text_cs = nfc(self.text_cs)
        if self.method not in GENERATION_METHODS:
            raise ValidationError(
                f"generation {self.id!r}: method {self.method!r} not in {GENERATION_METHODS}"
            )
        if self.direction not in DIRECTIONS:
            raise ValidationError(
                f"generation {self.id!r}: direction {self.direction!r} not in {DIRECTIONS}"
            )
        if self.method == "baseline" and self.constraint_words:
            raise ValidationError(
                f"generation {self.id!r}: baseline must not carry constraint words"
            )
        if not self.text_cs.strip() and self.error is None:
            raise ValidationError(
                f"generation {self.id!r}: empty text_cs without an error flag"
            )

    def to_json_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "input_id": self.input_id,
            "method": self.method,
            "model": self.model,
            "direction": self.direction,
            "text_cs": self.text_cs,
            "constraint_words": list(self.constraint_words),
            "prompt_hash": self.prompt_hash,
            "decode_params": dict(self.decode_params),
        }
        if self.constraint_coverage is not None:
            d["constraint_coverage"] = self.constraint_coverage
        if self.warning is not None:
            d["warning"] = self.warning
        if self.error is not None:
            d["error"] = self.error
        d.update(self.extra)
        return d

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "GenerationRecord":
        known = {
            "id", "input_id", "method", "model", "direction", "text_cs",
            "constraint_words", "prompt_hash", "decode_params",
            "constraint_coverage", "warning", "error",
        }
        try:
            return cls(
                id=str(d["id"]),
                input_id=str(d["input_id"]),
                method=str(d["method"]),
                model=str(d["model"]),
                direction=str(d["direction"]),
                text_cs=str(d.get("text_cs", "")),
                constraint_words=[str(w) for w in d.get("constraint_words", [])],
                prompt_hash=str(d.get("prompt_hash", "")),
                decode_params=dict(d.get("decode_params", {})),
                constraint_coverage=d.get("constraint_coverage"),
                warning=d.get("warning"),
                error=d.get("error"),
                extra={k: v for k, v in d.items() if k not in known},
            )
        except KeyError as exc:
            raise ValidationError(f"missing field {exc.args[0]!r}") from exc


@dataclass
class RatingRecord:
    """One evaluator's accuracy/fluency judgment for one generation."""

    generation_id: str
    evaluator_id: str
    accuracy: int
    fluency: int
    timestamp: str = ""
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name, value in (("accuracy", self.accuracy), ("fluency", self.fluency)):
            if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 3:
                raise ValidationError(
                    f"rating for {self.generation_id!r}: {name}={value!r} outside 1..3"
                )

    def to_json_dict(self) -> dict[str, Any]:
        d = {
            "generation_id": self.generation_id,
            "evaluator_id": self.evaluator_id,
            "accuracy": self.accuracy,
            "fluency": self.fluency,
            "timestamp": self.timestamp,
        }
        d.update(self.extra)
        return d

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "RatingRecord":
        known = {"generation_id", "evaluator_id", "accuracy", "fluency", "timestamp"}
        try:
            return cls(
                generation_id=str(d["generation_id"]),
                evaluator_id=str(d["evaluator_id"]),
                accuracy=int(d["accuracy"]),
                fluency=int(d["fluency"]),
                timestamp=str(d.get("timestamp", "")),
                extra={k: v for k, v in d.items() if k not in known},
            )
        except KeyError as exc:
            raise ValidationError(f"missing field {exc.args[0]!r}") from exc


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield (line_number, parsed object) for every non-blank line."""
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"file not found: {p}")
    with p.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{p}:{line_no}: malformed line ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise ValidationError(f"{p}:{line_no}: expected an object")
            yield line_no, obj


def load_corpus(path: str | Path, pair: LanguagePair) -> list[ParallelRecord]:
    """Load a parallel corpus, preserving file order and rejecting duplicate ids.

    If a line carries explicit ``l1``/``l2`` keys they must match ``pair``.
    """
    records: list[ParallelRecord] = []
    seen: dict[str, int] = {}
    for line_no, obj in iter_jsonl(path):
        try:
            rec = ParallelRecord.from_json_dict(obj)
        except ValidationError as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from exc
        for key, expected in (("l1", pair.l1), ("l2", pair.l2)):
            got = rec.extra.get(key)
            if got is not None and got != expected:
                raise ValidationError(
                    f"{path}:{line_no}: record {key}={got!r} does not match corpus {key}={expected!r}"
                )
        if rec.id in seen:
            raise ValidationError(
                f"duplicate id {rec.id!r} at {path}:{line_no} (first seen at line {seen[rec.id]})"
            )
        seen[rec.id] = line_no
        records.append(rec)
    return records


def load_generations(path: str | Path) -> list[GenerationRecord]:
    out = []
    for line_no, obj in iter_jsonl(path):
        try:
            out.append(GenerationRecord.from_json_dict(obj))
        except ValidationError as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from exc
    return out


def load_ratings(path: str | Path) -> list[RatingRecord]:
    out = []
    for line_no, obj in iter_jsonl(path):
        try:
            out.append(RatingRecord.from_json_dict(obj))
        except ValidationError as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from exc
    return out


def write_records(records: Iterable[Any], path: str | Path) -> int:
    """Write records (anything with ``to_json_dict``) one per line; returns the count."""
    p = Path(path)
    count = 0
    try:
        with p.open("w", encoding="utf-8") as fh:
            for rec in records:
                d = rec.to_json_dict() if hasattr(rec, "to_json_dict") else dict(rec)
                fh.write(json.dumps(d, ensure_ascii=False) + "\n")
                count += 1
    except OSError as exc:
        raise ValidationError(f"cannot write {p}: {exc}") from exc
    return count

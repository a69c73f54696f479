"""LLM-as-judge scoring of generations on the 1-3 accuracy/fluency rubric."""

from __future__ import annotations

import json
import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import requests

from .corpus import GenerationRecord, ParallelRecord, iter_jsonl
from .errors import ScoreParseError, ScoreRangeError, ValidationError
from .genpipe import DecodeParams, LlmEndpoint, PromptCache, PromptTemplate, chat_complete

log = logging.getLogger(__name__)

JUDGE_TEMPLATE = PromptTemplate(
    kind="judge",
    text=(
        "You are provided with triplets of sentences. The first two sentence "
        "in each triplet is the original monolingual sentences. The second "
        "sentence is a generated code-switched sentence. Your task is to "
        "evaluate the generated sentence based on two criteria: Accuracy and "
        "Fluency. You will score each criterion on a scale from 1 to 3, where "
        "1 is the lowest and 3 is the highest. When evaluating the generated "
        "sentences, focus on the content and meaning. Ignore any extra "
        "formatting, alignment artifacts, or additional explanatory text. "
        "Judge the sentence to determine its accuracy and fluency.\n"
        "original_l1: {original_l1}\n"
        "original_l2: {original_l2}\n"
        "generated: {generated}\n"
        'Answer with exactly {{"accuracy": n, "fluency": n}} where each n is 1, 2, or 3.'
    ),
)


@dataclass
class JudgeScore:
    generation_id: str
    accuracy: int
    fluency: int
    raw_response: str = ""
    error: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for name, value in (("accuracy", self.accuracy), ("fluency", self.fluency)):
            if value not in (1, 2, 3):
                raise ValidationError(
                    f"judge score for {self.generation_id!r}: {name}={value!r} not in 1..3"
                )

    def to_json_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "generation_id": self.generation_id,
            "accuracy": self.accuracy,
            "fluency": self.fluency,
            "raw_response": self.raw_response,
        }
        if self.error is not None:
            d["error"] = self.error
        d.update(self.extra)
        return d

    @classmethod
    def from_json_dict(cls, d: dict[str, Any]) -> "JudgeScore":
        known = {"generation_id", "accuracy", "fluency", "raw_response", "error"}
        return cls(
            generation_id=str(d["generation_id"]),
            accuracy=int(d["accuracy"]),
            fluency=int(d["fluency"]),
            raw_response=str(d.get("raw_response", "")),
            error=d.get("error"),
            extra={k: v for k, v in d.items() if k not in known},
        )


def load_judge_scores(path) -> list[JudgeScore]:
    out = []
    for line_no, obj in iter_jsonl(path):
        try:
            out.append(JudgeScore.from_json_dict(obj))
        except (ValidationError, KeyError, ValueError) as exc:
            raise ValidationError(f"{path}:{line_no}: {exc}") from exc
    return out


def build_judge_prompt(original_l1: str, original_l2: str, generated: str) -> str:
    for name, text in (
        ("original_l1", original_l1),
        ("original_l2", original_l2),
        ("generated", generated),
    ):
        if not text.strip():
            raise ValidationError(f"{name} must be non-empty")
    return JUDGE_TEMPLATE.render(
        original_l1=original_l1, original_l2=original_l2, generated=generated
    )


def format_judge_scores(accuracy: int, fluency: int) -> str:
    """Canonical reply form; parse_judge_scores inverts it."""
    return json.dumps({"accuracy": accuracy, "fluency": fluency})


_FALLBACK_ACC = re.compile(r"accuracy[^0-9-]*(-?\d+)", re.IGNORECASE)
_FALLBACK_FLU = re.compile(r"fluency[^0-9-]*(-?\d+)", re.IGNORECASE)


def parse_judge_scores(response: str) -> tuple[int, int]:
    """Extract (accuracy, fluency) from a judge reply.

    Tries a strict JSON object first, then falls back to scanning for the
    labels followed by an integer. Out-of-range values are rejected, never
    clamped.
    """
    accuracy: int | None = None
    fluency: int | None = None
    try:
        obj = json.loads(response.strip())
    except ValueError:
        obj = None
    if isinstance(obj, dict):
        a, f = obj.get("accuracy"), obj.get("fluency")
        if isinstance(a, int) and isinstance(f, int):
            accuracy, fluency = a, f
    if accuracy is None or fluency is None:
        acc_m = _FALLBACK_ACC.search(response)
        flu_m = _FALLBACK_FLU.search(response)
        if acc_m is None or flu_m is None:
            raise ScoreParseError("could not locate accuracy/fluency scores", raw=response)
        accuracy, fluency = int(acc_m.group(1)), int(flu_m.group(1))
    for name, value in (("accuracy", accuracy), ("fluency", fluency)):
        if not 1 <= value <= 3:
            raise ScoreRangeError(f"{name}={value} outside the 1..3 rubric")
    return accuracy, fluency


def judge_batch(
    records: Sequence[GenerationRecord],
    endpoint: LlmEndpoint,
    originals: Mapping[str, ParallelRecord],
    params: DecodeParams | None = None,
    cache: PromptCache | None = None,
    parallelism: int = 4,
) -> list[JudgeScore]:
    """Score every generation; output order and length match the input.

    Generations flagged as failed (or with empty text) receive (1, 1)
    without an endpoint call, following the annotation guideline for
    failed responses. Judge-side failures are likewise floored to (1, 1)
    with the error recorded on the score.
    """
    params = params or DecodeParams(temperature=0.0)
    session = requests.Session()
    lock = threading.Lock()

    def score_one(record: GenerationRecord) -> JudgeScore:
        if record.error is not None or not record.text_cs.strip():
            return JudgeScore(record.id, 1, 1, raw_response="")
        original = originals.get(record.input_id)
        if original is None:
            return JudgeScore(
                record.id, 1, 1, error=f"no original texts for input {record.input_id!r}"
            )
        try:
            prompt = build_judge_prompt(original.text_l1, original.text_l2, record.text_cs)
            cached = cache.get(endpoint.model, prompt, params) if cache else None
            if cached is not None:
                response = cached
            else:
                response = chat_complete(endpoint, prompt, params, session=session)
                if cache:
                    with lock:
                        cache.put(endpoint.model, prompt, params, response)
            accuracy, fluency = parse_judge_scores(response)
            return JudgeScore(record.id, accuracy, fluency, raw_response=response)
        except Exception as exc:  # per-record failure, never aborts the batch
            return JudgeScore(record.id, 1, 1, error=f"{type(exc).__name__}: {exc}")

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        return list(pool.map(score_one, records))

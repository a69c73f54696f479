"""Prompt construction and batched code-switched generation.

Prompts follow the fixed instruction templates; generation fans out over
methods x models x directions with bounded request concurrency and a
content-addressed on-disk cache, and every cell of the matrix yields a
record even when the endpoint call fails.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import string
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import requests

from .alignment import BitextAlignment, TokenizedPair, tokenize
from .corpus import (
    DIRECTIONS,
    GENERATION_METHODS,
    GenerationRecord,
    LanguagePair,
    ParallelRecord,
)
from .ect import ConstraintWords, constraint_words, valid_switching_points
from .errors import EmptyCompletionError, TransportError, ValidationError

log = logging.getLogger(__name__)

_RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})
_ECT_METHODS = ("human_ect", "ezswitch")


@dataclass(frozen=True)
class PromptTemplate:
    """A named template; rendering with a missing placeholder is an error."""

    kind: str
    text: str

    def placeholders(self) -> set[str]:
        return {
            name
            for _, name, _, _ in string.Formatter().parse(self.text)
            if name
        }

    def render(self, **bindings: str) -> str:
        missing = self.placeholders() - bindings.keys()
        if missing:
            raise ValidationError(
                f"{self.kind} template: unbound placeholders {sorted(missing)}"
            )
        return self.text.format(**bindings)


TRANSLATE_TEMPLATE = PromptTemplate(
    kind="translate",
    text="Translate the following {lang1} sentence to {lang2}:\n{input}",
)

BASELINE_TEMPLATE = PromptTemplate(
    kind="baseline",
    text=(
        "You are a Bilingual {lang1}-{lang2} speaker, you will help translate "
        "these {lang1} sentences into a code-mixed sentence with Romanized "
        "{lang2} and {lang1}\n{input}"
    ),
)

ECT_TEMPLATE = PromptTemplate(
    kind="ect",
    text=(
        "You are a Bilingual {lang1}-{lang2} speaker, you will help translate "
        "these {lang1} sentences into a code-mixed sentence with Romanized "
        "{lang2} and {lang1} with specific keywords that should to appear.\n"
        "{input}\nWords wanted: {words}"
    ),
)


@dataclass(frozen=True)
class DecodeParams:
    temperature: float = 0.0
    max_tokens: int = 256
    seed: int | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValidationError("max_tokens must be positive")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"temperature": self.temperature, "max_tokens": self.max_tokens}
        if self.seed is not None:
            d["seed"] = self.seed
        return d


@dataclass(frozen=True)
class LlmEndpoint:
    """A chat-completion endpoint; auth token is read from the named env var."""

    base_url: str
    model: str
    auth_env: str | None = None
    timeout: float = 60.0
    max_retries: int = 3
    retry_backoff: float = 0.5

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValidationError("timeout must be positive")


def _direction_names(pair: LanguagePair, direction: str) -> tuple[str, str]:
    if direction not in DIRECTIONS:
        raise ValidationError(f"direction {direction!r} not in {DIRECTIONS}")
    if direction == "l1_to_cs":
        return pair.l1_name, pair.l2_name
    return pair.l2_name, pair.l1_name


def _with_exemplar(prompt: str, exemplar: str | None) -> str:
    if not exemplar:
        return prompt
    head, _, tail = prompt.partition("\n")
    return f"{head}\nExample: {exemplar}\n{tail}"


def build_translate_prompt(pair: LanguagePair, input_text: str, direction: str = "l1_to_cs") -> str:
    if not input_text.strip():
        raise ValidationError("input sentence must be non-empty")
    lang1, lang2 = _direction_names(pair, direction)
    return TRANSLATE_TEMPLATE.render(lang1=lang1, lang2=lang2, input=input_text)


def build_baseline_prompt(
    pair: LanguagePair, input_text: str, direction: str = "l1_to_cs", exemplar: str | None = None
) -> str:
    if not input_text.strip():
        raise ValidationError("input sentence must be non-empty")
    lang1, lang2 = _direction_names(pair, direction)
    prompt = BASELINE_TEMPLATE.render(lang1=lang1, lang2=lang2, input=input_text)
    return _with_exemplar(prompt, exemplar)


def build_ect_prompt(
    pair: LanguagePair,
    input_text: str,
    direction: str,
    words: ConstraintWords | Sequence[str],
    exemplar: str | None = None,
) -> str:
    """Constraint prompt ending in a ``Words wanted:`` list, comma-joined.

    An empty word list renders a degenerate but valid prompt; the caller is
    responsible for flagging the record.
    """
    if not input_text.strip():
        raise ValidationError("input sentence must be non-empty")
    lang1, lang2 = _direction_names(pair, direction)
    word_list = list(words.words if isinstance(words, ConstraintWords) else words)
    prompt = ECT_TEMPLATE.render(
        lang1=lang1, lang2=lang2, input=input_text, words=", ".join(word_list)
    )
    return _with_exemplar(prompt, exemplar)


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def chat_complete(
    endpoint: LlmEndpoint,
    prompt: str,
    params: DecodeParams,
    session: requests.Session | None = None,
) -> str:
    """POST the prompt to {base_url}/chat/completions and return the first choice.

    Transient failures (connection errors, 429, 5xx) retry with exponential
    backoff up to max_retries; other HTTP errors fail immediately.
    """
    url = endpoint.base_url.rstrip("/") + "/chat/completions"
    payload: dict[str, Any] = {
        "model": endpoint.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": params.temperature,
        "max_tokens": params.max_tokens,
    }
    if params.seed is not None:
        payload["seed"] = params.seed
    headers = {}
    if endpoint.auth_env:
        token = os.environ.get(endpoint.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
    poster = session.post if session is not None else requests.post

    last_status: int | None = None
    last_error = "no attempt made"
    for attempt in range(endpoint.max_retries + 1):
        try:
            resp = poster(url, json=payload, timeout=endpoint.timeout, headers=headers)
        except requests.RequestException as exc:
            last_error = str(exc)
            last_status = None
        else:
            last_status = resp.status_code
            if resp.status_code == 200:
                try:
                    content = resp.json()["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise TransportError(
                        f"malformed completion response: {exc}", status=200
                    ) from exc
                if not isinstance(content, str) or not content.strip():
                    raise EmptyCompletionError("endpoint returned an empty completion")
                return content
            last_error = f"HTTP {resp.status_code}"
            if resp.status_code not in _RETRY_STATUSES:
                raise TransportError(
                    f"endpoint error {last_error}", status=resp.status_code
                )
        if attempt < endpoint.max_retries:
            time.sleep(endpoint.retry_backoff * (2 ** attempt))
    raise TransportError(
        f"retries exhausted after {endpoint.max_retries + 1} attempts ({last_error})",
        status=last_status,
    )


class PromptCache:
    """Content-addressed completion store keyed by (model, prompt, params).

    Entries live as one JSON file per digest; reads verify that the stored
    request re-hashes to the filename, so a corrupt entry degrades to a miss.
    Safe for concurrent readers; writes are serialized and atomic.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @staticmethod
    def key(model: str, prompt: str, params: DecodeParams) -> str:
        blob = json.dumps(
            {"model": model, "prompt": prompt, "params": params.to_dict()},
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def get(self, model: str, prompt: str, params: DecodeParams) -> str | None:
        digest = self.key(model, prompt, params)
        path = self.root / f"{digest}.json"
        if not path.exists():
            return None
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
            stored = self.key(entry["model"], entry["prompt"], DecodeParams(**entry["params"]))
        except (ValueError, KeyError, TypeError, ValidationError):
            log.warning("unreadable cache entry %s, treating as miss", path.name)
            return None
        if stored != digest:
            log.warning("cache entry %s fails digest check, treating as miss", path.name)
            return None
        return entry["response"]

    def put(self, model: str, prompt: str, params: DecodeParams, response: str) -> None:
        digest = self.key(model, prompt, params)
        entry = {
            "model": model,
            "prompt": prompt,
            "params": params.to_dict(),
            "response": response,
        }
        path = self.root / f"{digest}.json"
        tmp = self.root / f".{digest}.tmp"
        with self._lock:
            tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
            os.replace(tmp, path)


def word_replacement(
    tp: TokenizedPair, links: Iterable[tuple[int, int]]
) -> tuple[str, list[str]]:
    """Substitute the L2 token at every valid switching point, no LLM involved.

    Returns the space-joined sentence and the substituted words in order.
    """
    sps = valid_switching_points(links)
    tokens = list(tp.tokens_l1)
    used: list[str] = []
    for link in sps.valid_links:
        replacement = tp.tokens_l2[link.j]
        tokens[link.i] = replacement
        if replacement not in used:
            used.append(replacement)
    return " ".join(tokens), used


def _normalize_alignments(
    alignments: Mapping[str, Any] | None, methods: Sequence[str]
) -> dict[str, Mapping[str, Any]]:
    """Accept either {input_id: links} or {method: {input_id: links}}."""
    per_method: dict[str, Mapping[str, Any]] = {}
    if alignments is None:
        return per_method
    if any(k in GENERATION_METHODS for k in alignments):
        for method, table in alignments.items():
            if method not in GENERATION_METHODS:
                raise ValidationError(f"unknown method key {method!r} in alignments")
            per_method[method] = table
    else:
        for method in methods:
            per_method[method] = alignments
    return per_method


def _links_of(entry: Any) -> list[tuple[int, int]]:
    if isinstance(entry, BitextAlignment):
        return list(entry.links)
    return [tuple(x) for x in entry]


@dataclass
class _Unit:
    record: ParallelRecord
    method: str
    endpoint: LlmEndpoint
    direction: str
    prompt: str = ""
    words: list[str] = field(default_factory=list)
    warning: str | None = None
    error: str | None = None
    text_cs: str = ""
    needs_llm: bool = True

    @property
    def gen_id(self) -> str:
        return f"{self.record.id}:{self.method}:{self.endpoint.model}:{self.direction}"


def run_matrix(
    corpus: Sequence[ParallelRecord],
    methods: Iterable[str],
    endpoints: Sequence[LlmEndpoint],
    directions: Iterable[str],
    alignments: Mapping[str, Any] | None = None,
    params: DecodeParams | None = None,
    *,
    pair: LanguagePair,
    cache: PromptCache | None = None,
    parallelism: int = 4,
    constraint_side: str = "l2_only",
    exemplar: str | None = None,
) -> list[GenerationRecord]:
    """Generate one record per (input x method x model x direction).

    Per-record failures are captured on the record and never abort the
    batch, so the output length is always the full product. Records come
    back in input-major order regardless of request completion order.
    Constraint methods need an alignment per input id; ``alignments`` maps
    input ids to link lists, optionally nested per method. The
    word_replacement method performs direct substitution and still emits
    one record per endpoint to keep the matrix cardinality exact.
    """
    params = params or DecodeParams()
    methods_l = [m for m in GENERATION_METHODS if m in set(methods)]
    unknown = set(methods) - set(GENERATION_METHODS)
    if unknown:
        raise ValidationError(f"unknown methods {sorted(unknown)}")
    directions_l = [d for d in DIRECTIONS if d in set(directions)]
    unknown = set(directions) - set(DIRECTIONS)
    if unknown:
        raise ValidationError(f"unknown directions {sorted(unknown)}")
    if not methods_l or not directions_l or not endpoints:
        raise ValidationError("methods, directions, and endpoints must be non-empty")
    per_method = _normalize_alignments(alignments, methods_l)

    units: list[_Unit] = []
    tokenized: dict[str, TokenizedPair] = {}
    for record in corpus:
        for method in methods_l:
            for endpoint in endpoints:
                for direction in directions_l:
                    units.append(
                        _prepare_unit(
                            record, method, endpoint, direction, pair, per_method,
                            tokenized, constraint_side, exemplar,
                        )
                    )

    session = requests.Session()
    lock = threading.Lock()

    def execute(unit: _Unit) -> None:
        if unit.error is not None or not unit.needs_llm:
            return
        try:
            cached = cache.get(unit.endpoint.model, unit.prompt, params) if cache else None
            if cached is not None:
                unit.text_cs = cached
                return
            completion = chat_complete(unit.endpoint, unit.prompt, params, session=session)
            unit.text_cs = completion
            if cache:
                with lock:
                    cache.put(unit.endpoint.model, unit.prompt, params, completion)
        except Exception as exc:  # per-record failure, never aborts the batch
            unit.error = f"{type(exc).__name__}: {exc}"

    max_workers = max(1, parallelism)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        list(pool.map(execute, units))

    return [_unit_to_record(u, params) for u in units]


def _prepare_unit(
    record: ParallelRecord,
    method: str,
    endpoint: LlmEndpoint,
    direction: str,
    pair: LanguagePair,
    per_method: Mapping[str, Mapping[str, Any]],
    tokenized: dict[str, TokenizedPair],
    constraint_side: str,
    exemplar: str | None,
) -> _Unit:
    unit = _Unit(record=record, method=method, endpoint=endpoint, direction=direction)
    input_text = record.text_l1 if direction == "l1_to_cs" else record.text_l2
    try:
        if method == "baseline":
            unit.prompt = build_baseline_prompt(pair, input_text, direction, exemplar)
            return unit

        entry = per_method.get(method, {}).get(record.id)
        if entry is None:
            unit.error = f"no alignment available for input {record.id!r}"
            unit.needs_llm = False
            return unit
        if record.id not in tokenized:
            tokenized[record.id] = TokenizedPair(
                tuple(tokenize(record.text_l1)), tuple(tokenize(record.text_l2))
            )
        tp = tokenized[record.id]
        links = _links_of(entry)
        if direction == "l2_to_cs":
            tp = tp.mirrored()
            links = [(j, i) for i, j in links]

        if method == "word_replacement":
            unit.needs_llm = False
            unit.text_cs, unit.words = word_replacement(tp, links)
            return unit

        sps = valid_switching_points(links, pair_id=record.id)
        cw = constraint_words(sps, tp, side=constraint_side)
        unit.words = cw.words
        if not cw.words:
            unit.warning = "no valid switching points; empty constraint list"
        unit.prompt = build_ect_prompt(pair, input_text, direction, cw, exemplar)
        return unit
    except Exception as exc:
        unit.error = f"{type(exc).__name__}: {exc}"
        unit.needs_llm = False
        return unit


def constraint_coverage(text_cs: str, words: Sequence[str]) -> float | None:
    """Fraction of wanted words present in the output, case-folded token match."""
    if not words:
        return None
    try:
        present = {t.casefold() for t in tokenize(text_cs)}
    except ValidationError:
        return 0.0
    return sum(1 for w in words if w.casefold() in present) / len(words)


def _unit_to_record(unit: _Unit, params: DecodeParams) -> GenerationRecord:
    coverage = None
    if unit.method in _ECT_METHODS and unit.error is None:
        coverage = constraint_coverage(unit.text_cs, unit.words)
    return GenerationRecord(
        id=unit.gen_id,
        input_id=unit.record.id,
        method=unit.method,
        model=unit.endpoint.model,
        direction=unit.direction,
        text_cs=unit.text_cs if unit.error is None else "",
        constraint_words=[] if unit.method == "baseline" else list(unit.words),
        prompt_hash=prompt_digest(unit.prompt) if unit.prompt else "",
        decode_params=params.to_dict(),
        constraint_coverage=coverage,
        warning=unit.warning,
        error=unit.error,
    )

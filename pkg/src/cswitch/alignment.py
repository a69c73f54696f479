"""Tokenization, Pharaoh alignment parsing, and a built-in IBM Model 1 aligner.

The built-in aligner is a plain lexical-translation model trained with EM.
It exists so the pipeline runs end to end without an external alignment
tool; externally produced Pharaoh files are the first-class input.
"""

from __future__ import annotations

import math
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from .errors import ValidationError


class AlignmentPair(NamedTuple):
    """A single word-alignment link: token i on the L1 side, token j on L2."""

    i: int
    j: int


@dataclass(frozen=True)
class TokenizedPair:
    tokens_l1: tuple[str, ...]
    tokens_l2: tuple[str, ...]

    def __post_init__(self):
        for side, toks in (("l1", self.tokens_l1), ("l2", self.tokens_l2)):
            if not toks:
                raise ValidationError(f"tokens_{side} must be non-empty")
            for t in toks:
                if not t or any(ch.isspace() for ch in t):
                    raise ValidationError(f"bad token {t!r} on side {side}")

    def mirrored(self) -> "TokenizedPair":
        return TokenizedPair(self.tokens_l2, self.tokens_l1)


@dataclass
class BitextAlignment:
    pair_id: str
    links: list[AlignmentPair] = field(default_factory=list)

    def validate(self, tp: TokenizedPair) -> "BitextAlignment":
        for link in self.links:
            if not (0 <= link.i < len(tp.tokens_l1) and 0 <= link.j < len(tp.tokens_l2)):
                raise ValidationError(
                    f"alignment {self.pair_id!r}: link {link.i}-{link.j} out of range "
                    f"for {len(tp.tokens_l1)}/{len(tp.tokens_l2)} tokens"
                )
        return self

    def mirrored(self) -> "BitextAlignment":
        return BitextAlignment(self.pair_id, [AlignmentPair(j, i) for i, j in self.links])


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _detach_punct(chunk: str) -> list[str]:
    leading: list[str] = []
    while chunk and _is_punct(chunk[0]):
        leading.append(chunk[0])
        chunk = chunk[1:]
    trailing: list[str] = []
    while chunk and _is_punct(chunk[-1]):
        trailing.append(chunk[-1])
        chunk = chunk[:-1]
    trailing.reverse()
    return leading + ([chunk] if chunk else []) + trailing


def tokenize(text: str) -> list[str]:
    """NFC-normalize, split on Unicode whitespace, detach edge punctuation.

    Intra-word punctuation (hyphens, apostrophes) stays attached so the
    output lines up with what word aligners see.
    """
    tokens: list[str] = []
    for chunk in unicodedata.normalize("NFC", text).split():
        tokens.extend(_detach_punct(chunk))
    if not tokens:
        raise ValidationError(f"empty sentence after tokenization: {text!r}")
    return tokens


_PHARAOH_PAIR = re.compile(r"(\d+)-(\d+)\Z")


def parse_pharaoh(line: str, tp: TokenizedPair, pair_id: str = "") -> BitextAlignment:
    """Parse one line of space-separated ``i-j`` links, 0-based, ASCII hyphen."""
    links: list[AlignmentPair] = []
    seen: set[AlignmentPair] = set()
    for part in line.split():
        m = _PHARAOH_PAIR.match(part)
        if m is None:
            raise ValidationError(f"malformed alignment pair {part!r}")
        link = AlignmentPair(int(m.group(1)), int(m.group(2)))
        if link.i >= len(tp.tokens_l1) or link.j >= len(tp.tokens_l2):
            raise ValidationError(
                f"alignment pair {part!r} out of range for "
                f"{len(tp.tokens_l1)}/{len(tp.tokens_l2)} tokens"
            )
        if link not in seen:
            seen.add(link)
            links.append(link)
    return BitextAlignment(pair_id, links)


def format_pharaoh(links: Iterable[AlignmentPair]) -> str:
    return " ".join(f"{i}-{j}" for i, j in links)


@dataclass
class LexiconModel:
    """Lexical translation table t(target | source), source tokens from L1.

    Every per-source distribution sums to 1 within 1e-9.
    """

    table: dict[str, dict[str, float]]

    def prob(self, source: str, target: str) -> float:
        return self.table.get(source, {}).get(target, 0.0)

    def max_normalization_error(self) -> float:
        return max(abs(sum(row.values()) - 1.0) for row in self.table.values())


def train_ibm1(corpus: list[TokenizedPair], iterations: int) -> LexiconModel:
    """EM-train a Model 1 lexicon on the corpus.

    Zero iterations returns the initialization: for each source token a
    uniform distribution over the target tokens it co-occurs with. Each EM
    iteration renormalizes every per-source distribution, so the corpus
    log-likelihood is non-decreasing across iterations.
    """
    if not corpus:
        raise ValidationError("empty corpus")
    if iterations < 0:
        raise ValidationError("iterations must be >= 0")

    cooc: dict[str, set[str]] = {}
    for tp in corpus:
        for e in tp.tokens_l1:
            cooc.setdefault(e, set()).update(tp.tokens_l2)

    table: dict[str, dict[str, float]] = {
        e: {f: 1.0 / len(targets) for f in targets} for e, targets in cooc.items()
    }

    for _ in range(iterations):
        counts: dict[str, dict[str, float]] = {e: {} for e in table}
        totals: dict[str, float] = {e: 0.0 for e in table}
        for tp in corpus:
            for f in tp.tokens_l2:
                denom = sum(table[e].get(f, 0.0) for e in tp.tokens_l1)
                if denom <= 0.0:
                    continue
                for e in tp.tokens_l1:
                    share = table[e].get(f, 0.0) / denom
                    if share:
                        counts[e][f] = counts[e].get(f, 0.0) + share
                        totals[e] += share
        for e, row in counts.items():
            total = totals[e]
            if total > 0.0:
                table[e] = {f: c / total for f, c in row.items()}

    return LexiconModel(table)


def log_likelihood(model: LexiconModel, corpus: list[TokenizedPair]) -> float:
    """Corpus log-likelihood under the uniform-alignment Model 1."""
    ll = 0.0
    for tp in corpus:
        m = len(tp.tokens_l1)
        for f in tp.tokens_l2:
            s = sum(model.prob(e, f) for e in tp.tokens_l1)
            ll += math.log(max(s, 1e-300)) - math.log(m)
    return ll


def align_ibm1(model: LexiconModel, tp: TokenizedPair, pair_id: str = "") -> BitextAlignment:
    """Greedy decode: link each L1 token to its most probable L2 token.

    Ties break toward the smallest j. Tokens the model has never seen (or
    with no positive probability against this sentence) stay unaligned.
    """
    links: list[AlignmentPair] = []
    for i, e in enumerate(tp.tokens_l1):
        row = model.table.get(e)
        if not row:
            continue
        best_j = -1
        best_p = 0.0
        for j, f in enumerate(tp.tokens_l2):
            p = row.get(f, 0.0)
            if p > best_p:
                best_p = p
                best_j = j
        if best_j >= 0:
            links.append(AlignmentPair(i, best_j))
    return BitextAlignment(pair_id, links)

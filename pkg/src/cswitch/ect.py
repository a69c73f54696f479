"""Relaxed equivalence-constraint filtering of word alignments.

A link is a valid switching point iff no other link crosses it, i.e. there
is no second link whose source and target positions are ordered in opposite
directions. Switching at a crossing link would scramble the word order of
one of the two languages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .alignment import AlignmentPair, TokenizedPair
from .errors import ValidationError

CONSTRAINT_SIDES = ("l2_only", "both")


@dataclass
class SwitchingPointSet:
    pair_id: str
    valid_links: list[AlignmentPair] = field(default_factory=list)
    all_links_count: int = 0


@dataclass
class ConstraintWords:
    """Surface tokens to be requested in the generation prompt."""

    words: list[str]
    side: str = "l2_only"


def _as_links(links: Iterable[Sequence[int]]) -> list[AlignmentPair]:
    out: list[AlignmentPair] = []
    seen: set[AlignmentPair] = set()
    for raw in links:
        link = AlignmentPair(int(raw[0]), int(raw[1]))
        if link not in seen:
            seen.add(link)
            out.append(link)
    return out


def valid_switching_points(
    links: Iterable[Sequence[int]], pair_id: str = ""
) -> SwitchingPointSet:
    """Keep the links not involved in any crossing, by pairwise scan.

    A pair of links crosses when ``(a_i < a_j and b_i > b_j)`` or
    ``(a_i > a_j and b_i < b_j)``; links sharing a source or target index
    do not cross. Output is sorted ascending by source index.
    """
    unique = _as_links(links)
    valid: list[AlignmentPair] = []
    for a in unique:
        ok = True
        for b in unique:
            if (a.i < b.i and a.j > b.j) or (a.i > b.i and a.j < b.j):
                ok = False
                break
        if ok:
            valid.append(a)
    valid.sort()
    return SwitchingPointSet(pair_id=pair_id, valid_links=valid, all_links_count=len(unique))


def crossing_oracle(links: Iterable[Sequence[int]], pair_id: str = "") -> SwitchingPointSet:
    """Independent brute-force reference for ``valid_switching_points``.

    Enumerates every unordered pair once and marks both ends of each
    crossing; shares no traversal logic with the production routine. Kept
    exported so external verification harnesses can call it.
    """
    unique = sorted({AlignmentPair(int(raw[0]), int(raw[1])) for raw in links})
    crossed: set[AlignmentPair] = set()
    for a, b in combinations(unique, 2):
        if (a.i - b.i) * (a.j - b.j) < 0:
            crossed.add(a)
            crossed.add(b)
    return SwitchingPointSet(
        pair_id=pair_id,
        valid_links=[l for l in unique if l not in crossed],
        all_links_count=len(unique),
    )


def constraint_words(
    sps: SwitchingPointSet,
    tp: TokenizedPair,
    side: str = "l2_only",
    max_words: int | None = None,
) -> ConstraintWords:
    """Collect the surface tokens at valid switching points.

    ``l2_only`` takes the translation-side token of each valid link in
    ascending source order; ``both`` interleaves source token then target
    token. Duplicates keep their first occurrence. ``max_words`` truncates
    after deduplication; the default is uncapped.
    """
    if side not in CONSTRAINT_SIDES:
        raise ValidationError(f"side {side!r} not in {CONSTRAINT_SIDES}")
    words: list[str] = []
    seen: set[str] = set()
    for link in sps.valid_links:
        if link.i >= len(tp.tokens_l1) or link.j >= len(tp.tokens_l2):
            raise ValidationError(
                f"switching point {link.i}-{link.j} out of range for the tokenized pair"
            )
        if side == "l2_only":
            candidates = (tp.tokens_l2[link.j],)
        else:
            candidates = (tp.tokens_l1[link.i], tp.tokens_l2[link.j])
        for w in candidates:
            if w not in seen:
                seen.add(w)
                words.append(w)
    if max_words is not None:
        words = words[:max_words]
    return ConstraintWords(words=words, side=side)

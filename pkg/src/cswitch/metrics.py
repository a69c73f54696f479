"""Code-switching metrics, rank correlation, agreement, and significance tests.

Everything here is a pure function over plain Python values; the only
stateful object is ScoreTable, an in-memory column store for per-generation
scores that the aggregation and correlation reports run over.
"""

from __future__ import annotations

import logging
import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .alignment import TokenizedPair, tokenize
from .corpus import LanguagePair
from .errors import (
    InsufficientDataError,
    UndefinedMetricError,
    ValidationError,
)

log = logging.getLogger(__name__)

LANG_L1 = "L1"
LANG_L2 = "L2"
LANG_OTHER = "OTHER"

# Script blocks that force the L2 tag, by language code. Unknown codes fall
# back to the union so tagging still works for unanticipated pairs.
_L2_SCRIPTS = {
    "hi": {"DEVANAGARI"},
    "ta": {"TAMIL"},
    "ml": {"MALAYALAM"},
}
_ALL_L2_SCRIPTS = set().union(*_L2_SCRIPTS.values())


@dataclass
class TokenLangSeq:
    tokens: list[str]
    tags: list[str]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValidationError("tokens and tags must have equal length")
        if not self.tokens:
            raise ValidationError("token sequence must be non-empty")


@dataclass
class AnovaResult:
    factor: str
    F: float
    p: float
    df_between: int
    df_within: int


@dataclass
class AgreementResult:
    dimension: str
    alpha: float


def _char_script(ch: str) -> str:
    try:
        return unicodedata.name(ch).split(" ", 1)[0]
    except ValueError:
        return ""


def tag_token_languages(
    text_cs: str, tp: TokenizedPair, pair: LanguagePair
) -> TokenLangSeq:
    """Tag each token of a code-switched sentence as L1, L2, or OTHER.

    Script detection runs first: any character from the L2 script(s) tags
    the token L2. Latin-script tokens are resolved against the case-folded
    vocabularies of the two sides: only-in-L2 is L2 (romanized), only-in-L1
    is L1, and anything ambiguous (both sides, neither side, punctuation,
    numerals) is OTHER.
    """
    l1_vocab = {t.casefold() for t in tp.tokens_l1}
    l2_vocab = {t.casefold() for t in tp.tokens_l2}
    l2_scripts = _L2_SCRIPTS.get(pair.l2, _ALL_L2_SCRIPTS)

    tokens = tokenize(text_cs)
    tags: list[str] = []
    for token in tokens:
        letters = [ch for ch in token if ch.isalpha()]
        if not letters:
            tags.append(LANG_OTHER)
            continue
        scripts = {_char_script(ch) for ch in letters}
        if scripts & l2_scripts:
            tags.append(LANG_L2)
            continue
        if scripts != {"LATIN"}:
            tags.append(LANG_OTHER)
            continue
        folded = token.casefold()
        in_l1 = folded in l1_vocab
        in_l2 = folded in l2_vocab
        if in_l2 and not in_l1:
            tags.append(LANG_L2)
        elif in_l1 and not in_l2:
            tags.append(LANG_L1)
        else:
            tags.append(LANG_OTHER)
    return TokenLangSeq(tokens=tokens, tags=tags)


def i_index(seq: TokenLangSeq) -> float:
    """Fraction of adjacent language-dependent token pairs that switch language.

    OTHER-tagged tokens are removed before pairing, so the denominator is
    (number of L1/L2 tokens - 1).
    """
    dependent = [t for t in seq.tags if t in (LANG_L1, LANG_L2)]
    if len(dependent) < 2:
        raise UndefinedMetricError(
            f"need at least 2 language-dependent tokens, got {len(dependent)}"
        )
    switches = sum(1 for a, b in zip(dependent, dependent[1:]) if a != b)
    return switches / (len(dependent) - 1)


def comet_avg(l1_score: float | None, l2_score: float | None) -> float | None:
    """Arithmetic mean of the two reference-permutation scores; None if either is missing."""
    if l1_score is None or l2_score is None:
        return None
    return (l1_score + l2_score) / 2.0


def _count_inversions(values: list) -> tuple[list, int]:
    """Merge sort returning (sorted list, number of strict inversions)."""
    n = len(values)
    if n <= 1:
        return values, 0
    left, cl = _count_inversions(values[: n // 2])
    right, cr = _count_inversions(values[n // 2 :])
    merged: list = []
    count = cl + cr
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            count += len(left) - i
            j += 1
    merged.extend(left[i:])
    merged.extend(right[j:])
    return merged, count


def _tie_term(values: Iterable) -> int:
    return sum(c * (c - 1) // 2 for c in Counter(values).values())


def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> float:
    """Tie-corrected Kendall rank correlation.

    (C - D) / sqrt((n0 - n1)(n0 - n2)) with n0 = n(n-1)/2 and n1, n2 the
    tie terms of x and y. Discordant pairs are counted by merge-sort
    inversions after sorting by (x, y), so the integer arithmetic is exact.
    """
    n = len(x)
    if n != len(y):
        raise ValidationError(f"length mismatch: {n} vs {len(y)}")
    if n < 2:
        raise ValidationError("need at least 2 observations")
    n0 = n * (n - 1) // 2
    n1 = _tie_term(x)
    n2 = _tie_term(y)
    if n1 == n0 or n2 == n0:
        raise UndefinedMetricError("all values tied in one argument")
    pairs = sorted(zip(x, y))
    n3 = _tie_term(pairs)
    _, discordant = _count_inversions([b for _, b in pairs])
    con_minus_dis = n0 - n1 - n2 + n3 - 2 * discordant
    return con_minus_dis / math.sqrt((n0 - n1) * (n0 - n2))


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[k : k + n]) for k in range(len(tokens) - n + 1))


def sentence_bleu(
    hypothesis: Sequence[str], references: Sequence[Sequence[str]], max_order: int = 4
) -> float:
    """Sentence-level BLEU over n-grams 1..4 with brevity penalty.

    Zero counts at orders >= 2 get add-one smoothing; zero unigram overlap
    floors the score to 0 (no higher-order n-gram can match either).
    Orders longer than the hypothesis are skipped.
    """
    if not hypothesis:
        raise ValidationError("empty hypothesis")
    if not references or any(not r for r in references):
        raise ValidationError("empty reference set")
    h = len(hypothesis)
    orders = min(max_order, h)
    log_sum = 0.0
    for n in range(1, orders + 1):
        hyp_counts = _ngram_counts(hypothesis, n)
        max_ref: Counter = Counter()
        for ref in references:
            for gram, c in _ngram_counts(ref, n).items():
                if c > max_ref[gram]:
                    max_ref[gram] = c
        clipped = sum(min(c, max_ref[g]) for g, c in hyp_counts.items())
        total = h - n + 1
        if clipped == 0:
            if n == 1:
                return 0.0
            precision = 1.0 / (total + 1)
        else:
            precision = clipped / total
        log_sum += math.log(precision) / orders
    closest_ref = min((len(r) for r in references), key=lambda rl: (abs(rl - h), rl))
    brevity = 1.0 if h >= closest_ref else math.exp(1.0 - closest_ref / h)
    return brevity * math.exp(log_sum)


def _ordinal_delta(values: Sequence[float], marginals: Mapping[float, float]):
    """Squared ordinal distance over the observed value domain."""
    index = {v: k for k, v in enumerate(values)}

    def delta(a: float, b: float) -> float:
        if a == b:
            return 0.0
        lo, hi = sorted((index[a], index[b]))
        between = sum(marginals[values[g]] for g in range(lo, hi + 1))
        d = between - (marginals[a] + marginals[b]) / 2.0
        return d * d

    return delta


def krippendorff_alpha(
    ratings: Sequence[Sequence[float | None]],
    level: str = "ordinal",
    dimension: str = "",
) -> AgreementResult:
    """Krippendorff's alpha from an evaluator x item matrix with missing cells.

    Rows are evaluators, columns items, None marks a missing rating. Items
    with fewer than two ratings are not pairable and drop out. Implemented
    through the coincidence matrix: alpha = 1 - D_observed / D_expected.
    """
    if level not in ("nominal", "interval", "ordinal"):
        raise ValidationError(f"unknown level {level!r}")
    if not ratings:
        raise InsufficientDataError("empty rating matrix")
    n_items = len(ratings[0])
    if any(len(row) != n_items for row in ratings):
        raise ValidationError("ragged rating matrix")

    units = []
    for col in range(n_items):
        vals = [row[col] for row in ratings if row[col] is not None]
        if len(vals) >= 2:
            units.append(vals)
    if len(units) < 2:
        raise InsufficientDataError(
            f"need >= 2 items with >= 2 ratings, got {len(units)}"
        )

    coincidence: dict[tuple[float, float], float] = {}
    for vals in units:
        m = len(vals)
        for a_idx, a in enumerate(vals):
            for b_idx, b in enumerate(vals):
                if a_idx != b_idx:
                    coincidence[(a, b)] = coincidence.get((a, b), 0.0) + 1.0 / (m - 1)

    domain = sorted({v for pair in coincidence for v in pair})
    marginals = {
        v: sum(coincidence.get((v, w), 0.0) for w in domain) for v in domain
    }
    n_total = sum(marginals.values())

    if level == "nominal":
        delta = lambda a, b: 0.0 if a == b else 1.0
    elif level == "interval":
        delta = lambda a, b: (a - b) ** 2
    else:
        delta = _ordinal_delta(domain, marginals)

    d_observed = sum(
        coincidence.get((a, b), 0.0) * delta(a, b) for a in domain for b in domain
    ) / n_total
    if d_observed == 0.0:
        return AgreementResult(dimension=dimension, alpha=1.0)
    d_expected = sum(
        marginals[a] * marginals[b] * delta(a, b) for a in domain for b in domain
    ) / (n_total * (n_total - 1.0))
    return AgreementResult(dimension=dimension, alpha=1.0 - d_observed / d_expected)


def _betacf(a: float, b: float, x: float, max_iter: int = 300, eps: float = 3e-15) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) via the continued-fraction expansion."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        a * math.log(x)
        + b * math.log1p(-x)
        + math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - regularized_incomplete_beta(b, a, 1.0 - x)


def f_survival(f_value: float, df_between: int, df_within: int) -> float:
    """P(F > f_value) for the F distribution, through I_x(a, b)."""
    if f_value <= 0.0:
        return 1.0
    if math.isinf(f_value):
        return 0.0
    x = df_within / (df_within + df_between * f_value)
    return regularized_incomplete_beta(df_within / 2.0, df_between / 2.0, x)


def anova_oneway(groups: Sequence[Sequence[float]], factor: str = "") -> AnovaResult:
    """One-way ANOVA: F = MS_between / MS_within, p from the F survival function."""
    if len(groups) < 2:
        raise ValidationError("need at least 2 groups")
    if any(len(g) < 2 for g in groups):
        raise ValidationError("every group needs at least 2 values")
    n_total = sum(len(g) for g in groups)
    grand = sum(sum(g) for g in groups) / n_total
    ss_between = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups)
    ss_within = sum(
        sum((v - sum(g) / len(g)) ** 2 for v in g) for g in groups
    )
    df_between = len(groups) - 1
    df_within = n_total - len(groups)
    if ss_within == 0.0:
        if ss_between == 0.0:
            raise UndefinedMetricError("zero variance both between and within groups")
        return AnovaResult(factor, math.inf, 0.0, df_between, df_within)
    f_value = (ss_between / df_between) / (ss_within / df_within)
    return AnovaResult(factor, f_value, f_survival(f_value, df_between, df_within), df_between, df_within)


@dataclass
class ScoreTable:
    """Per-generation score columns plus string-valued grouping keys."""

    ids: list[str]
    columns: dict[str, list[float | None]] = field(default_factory=dict)
    meta: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        for name, col in list(self.columns.items()) + list(self.meta.items()):
            if len(col) != len(self.ids):
                raise ValidationError(
                    f"column {name!r} has {len(col)} entries for {len(self.ids)} rows"
                )

    @classmethod
    def from_rows(
        cls, rows: Iterable[Mapping[str, Any]], id_key: str = "generation_id"
    ) -> "ScoreTable":
        """Build from mappings; numeric values become columns, strings meta."""
        materialized = list(rows)
        ids = []
        for idx, row in enumerate(materialized):
            if id_key not in row:
                raise ValidationError(f"row {idx} missing {id_key!r}")
            ids.append(str(row[id_key]))
        numeric_keys: list[str] = []
        meta_keys: list[str] = []
        for row in materialized:
            for key, value in row.items():
                if key == id_key:
                    continue
                if isinstance(value, bool):
                    continue
                if isinstance(value, (int, float)) and key not in numeric_keys:
                    numeric_keys.append(key)
                elif isinstance(value, str) and key not in meta_keys:
                    meta_keys.append(key)
        columns = {
            key: [
                float(row[key])
                if isinstance(row.get(key), (int, float)) and not isinstance(row.get(key), bool)
                else None
                for row in materialized
            ]
            for key in numeric_keys
        }
        meta = {
            key: [str(row.get(key, "")) for row in materialized] for key in meta_keys
        }
        return cls(ids=ids, columns=columns, meta=meta)

    def add_column(self, name: str, values: Sequence[float | None]) -> None:
        if len(values) != len(self.ids):
            raise ValidationError(
                f"column {name!r} has {len(values)} entries for {len(self.ids)} rows"
            )
        self.columns[name] = list(values)

    def to_rows(self) -> list[dict[str, Any]]:
        rows = []
        for idx, gen_id in enumerate(self.ids):
            row: dict[str, Any] = {"generation_id": gen_id}
            for key, col in self.meta.items():
                row[key] = col[idx]
            for key, col in self.columns.items():
                if col[idx] is not None:
                    row[key] = col[idx]
            rows.append(row)
        return rows


def aggregate_means(
    table: ScoreTable, group_by: Sequence[str] = ("method", "model", "direction")
) -> list[dict[str, Any]]:
    """Per-group arithmetic means of every numeric column.

    Missing values are excluded and per-column counts reported; a column
    empty within a group is omitted from that group's means with a warning.
    """
    for key in group_by:
        if key not in table.meta:
            raise ValidationError(f"group key {key!r} not present in the table")
    group_rows: dict[tuple[str, ...], list[int]] = {}
    for idx in range(len(table.ids)):
        key = tuple(table.meta[k][idx] for k in group_by)
        group_rows.setdefault(key, []).append(idx)
    report = []
    for key in sorted(group_rows):
        indices = group_rows[key]
        means: dict[str, float] = {}
        counts: dict[str, int] = {}
        for name, col in table.columns.items():
            present = [col[i] for i in indices if col[i] is not None]
            counts[name] = len(present)
            if present:
                means[name] = sum(present) / len(present)
            else:
                log.warning("group %s has no values for column %r", key, name)
        report.append(
            {
                **dict(zip(group_by, key)),
                "n": len(indices),
                "means": means,
                "counts": counts,
            }
        )
    return report


def correlate_table(
    table: ScoreTable,
    targets: Sequence[str] = ("human_accuracy", "human_fluency"),
) -> list[tuple[str, dict[str, float | None]]]:
    """Kendall tau-b of every numeric column against each target column.

    Rows with a missing value in either column are dropped pairwise; cells
    where tau is undefined (all ties) come back as None. Rows are sorted
    descending by the first target, undefined cells last.
    """
    for target in targets:
        if target not in table.columns:
            raise ValidationError(f"target column {target!r} not present")
    rows: list[tuple[str, dict[str, float | None]]] = []
    for name, col in table.columns.items():
        cells: dict[str, float | None] = {}
        for target in targets:
            tcol = table.columns[target]
            paired = [
                (a, b) for a, b in zip(col, tcol) if a is not None and b is not None
            ]
            if len(paired) < 2:
                cells[target] = None
                continue
            try:
                cells[target] = kendall_tau_b(
                    [a for a, _ in paired], [b for _, b in paired]
                )
            except UndefinedMetricError:
                cells[target] = None
        rows.append((name, cells))
    primary = targets[0]
    rows.sort(key=lambda r: (r[1][primary] is None, -(r[1][primary] or 0.0)))
    return rows

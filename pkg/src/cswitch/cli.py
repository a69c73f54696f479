"""Command-line entry point for the whole pipeline.

Subcommands: ingest, align, switch-points, generate, judge, metrics,
correlate, prefs, anova, agreement, serve. Every run writes a manifest
whose digest covers the input file contents and the resolved options, so
identical runs are identical manifests. Exit codes: 0 success,
1 validation/usage error, 2 transport error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from . import __version__
from .alignment import (
    TokenizedPair,
    align_ibm1,
    format_pharaoh,
    parse_pharaoh,
    tokenize,
    train_ibm1,
)
from .corpus import (
    GenerationRecord,
    LanguagePair,
    ParallelRecord,
    RatingRecord,
    iter_jsonl,
    load_corpus,
    load_generations,
    load_ratings,
    write_records,
)
from .ect import valid_switching_points
from .errors import CswitchError, TransportError, UndefinedMetricError, ValidationError
from .genpipe import DecodeParams, LlmEndpoint, PromptCache, run_matrix
from .judge import judge_batch, load_judge_scores
from .metrics import (
    ScoreTable,
    aggregate_means,
    anova_oneway,
    comet_avg,
    correlate_table,
    i_index,
    krippendorff_alpha,
    sentence_bleu,
    tag_token_languages,
)
from .prefs import build_pairs, pref_stats

LANGUAGE_NAMES = {
    "en": "English",
    "hi": "Hindi",
    "ta": "Tamil",
    "ml": "Malayalam",
}

# Options whose values are input files; the manifest digests their contents
# instead of their paths, so renaming a file does not change the digest.
_INPUT_OPTIONS = {
    "input", "pairs", "alignments", "pharaoh", "generations", "ratings",
    "judge_scores", "scores", "table", "references",
}
_EXCLUDED_FROM_DIGEST = {"command", "config", "manifest", "func"}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def language_pair(l1: str, l2: str, l1_name: str | None = None, l2_name: str | None = None) -> LanguagePair:
    return LanguagePair(
        l1=l1,
        l2=l2,
        l1_name=l1_name or LANGUAGE_NAMES.get(l1, l1),
        l2_name=l2_name or LANGUAGE_NAMES.get(l2, l2),
    )


def _sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def _write_manifest(args: argparse.Namespace, outputs: dict[str, str]) -> Path:
    options: dict[str, Any] = {}
    inputs: dict[str, str] = {}
    for key, value in sorted(vars(args).items()):
        if key in _EXCLUDED_FROM_DIGEST or value is None:
            continue
        if key in _INPUT_OPTIONS:
            inputs[key] = _sha256_file(value)
        else:
            options[key] = value
    payload = {"command": args.command, "config": options, "inputs": inputs}
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    ).hexdigest()
    manifest = {
        **payload,
        "outputs": {k: _sha256_file(v) for k, v in outputs.items() if Path(v).exists()},
        "manifest_digest": digest,
        "version": __version__,
        "created_at": datetime.now(tz=timezone.utc).isoformat(),
    }
    if getattr(args, "manifest", None):
        path = Path(args.manifest)
    elif getattr(args, "output", None):
        path = Path(str(args.output) + ".manifest.json")
    elif getattr(args, "journal", None):
        path = Path(str(args.journal) + ".manifest.json")
    else:
        path = Path(f"{args.command}.manifest.json")
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def _pair_from_args(args) -> LanguagePair:
    return language_pair(args.l1, args.l2, getattr(args, "l1_name", None), getattr(args, "l2_name", None))


def _tokenized(records: Sequence[ParallelRecord]) -> dict[str, TokenizedPair]:
    return {
        rec.id: TokenizedPair(tuple(tokenize(rec.text_l1)), tuple(tokenize(rec.text_l2)))
        for rec in records
    }


def _load_alignment_links(
    args, records: Sequence[ParallelRecord], tokenized: dict[str, TokenizedPair]
) -> dict[str, list[tuple[int, int]]]:
    """Links per input id, from a raw Pharaoh file or an alignment JSONL."""
    links: dict[str, list[tuple[int, int]]] = {}
    if getattr(args, "pharaoh", None):
        lines = Path(args.pharaoh).read_text(encoding="utf-8").splitlines()
        if len(lines) != len(records):
            raise ValidationError(
                f"{args.pharaoh}: {len(lines)} alignment lines for {len(records)} sentence pairs"
            )
        for rec, line in zip(records, lines):
            parsed = parse_pharaoh(line, tokenized[rec.id], pair_id=rec.id)
            links[rec.id] = [tuple(l) for l in parsed.links]
    elif getattr(args, "alignments", None):
        for line_no, obj in iter_jsonl(args.alignments):
            rec_id = str(obj.get("id", ""))
            if rec_id not in tokenized:
                raise ValidationError(
                    f"{args.alignments}:{line_no}: unknown pair id {rec_id!r}"
                )
            parsed = parse_pharaoh(str(obj.get("pharaoh", "")), tokenized[rec_id], pair_id=rec_id)
            links[rec_id] = [tuple(l) for l in parsed.links]
    else:
        raise ValidationError("either --pharaoh or --alignments is required")
    return links


# ---------------------------------------------------------------- commands


def cmd_ingest(args) -> dict[str, str]:
    pair = _pair_from_args(args)
    records = load_corpus(args.input, pair)
    count = write_records(records, args.output)
    print(f"ingested {count} records -> {args.output}")
    return {"records": args.output}


def cmd_align(args) -> dict[str, str]:
    pair = _pair_from_args(args)
    records = load_corpus(args.pairs, pair)
    tokenized = _tokenized(records)
    rows = []
    if args.pharaoh:
        link_map = _load_alignment_links(args, records, tokenized)
        for rec in records:
            rows.append({"id": rec.id, "pharaoh": format_pharaoh(link_map[rec.id])})
    else:
        corpus_tps = [tokenized[rec.id] for rec in records]
        model = train_ibm1(corpus_tps, iterations=args.iterations)
        for rec in records:
            alignment = align_ibm1(model, tokenized[rec.id], pair_id=rec.id)
            rows.append({"id": rec.id, "pharaoh": format_pharaoh(alignment.links)})
    count = write_records(rows, args.output)
    print(f"aligned {count} pairs -> {args.output}")
    return {"alignments": args.output}


def cmd_switch_points(args) -> dict[str, str]:
    pair = _pair_from_args(args)
    records = load_corpus(args.pairs, pair)
    tokenized = _tokenized(records)
    link_map = _load_alignment_links(args, records, tokenized)
    rows = []
    for rec in records:
        sps = valid_switching_points(link_map.get(rec.id, []), pair_id=rec.id)
        rows.append(
            {
                "pair_id": sps.pair_id,
                "valid_links": [[l.i, l.j] for l in sps.valid_links],
                "all_links_count": sps.all_links_count,
            }
        )
    count = write_records(rows, args.output)
    print(f"switch points for {count} pairs -> {args.output}")
    return {"switch_points": args.output}


def _raise_if_endpoint_down(results) -> None:
    """Distinguish a dead endpoint (exit 2) from per-record hiccups (exit 0).

    Records are already on disk at this point; the batch itself completed.
    """
    llm_backed = [r for r in results if r.method != "word_replacement"]
    if not llm_backed:
        return
    errors = [r.error for r in llm_backed]
    if all(e is not None for e in errors) and any("TransportError" in e for e in errors):
        raise TransportError(
            f"every endpoint call failed; first error: {errors[0]}"
        )


def cmd_generate(args) -> dict[str, str]:
    if not args.base_url:
        raise ValidationError("--base-url is required (flag or config)")
    if not args.models:
        raise ValidationError("--models is required (flag or config)")
    pair = _pair_from_args(args)
    records = load_corpus(args.pairs, pair)
    methods_csv = args.methods or "baseline,human_ect,ezswitch"
    methods = [m.strip() for m in methods_csv.split(",") if m.strip()]
    directions_csv = args.directions or "both"
    directions = (
        list(("l1_to_cs", "l2_to_cs"))
        if directions_csv == "both"
        else [d.strip() for d in directions_csv.split(",") if d.strip()]
    )
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    if not models:
        raise ValidationError("at least one model is required")
    endpoints = [
        LlmEndpoint(
            base_url=args.base_url,
            model=model,
            auth_env=args.auth_env,
            timeout=args.timeout,
            max_retries=args.max_retries,
        )
        for model in models
    ]
    alignments = None
    if set(methods) & {"human_ect", "ezswitch", "word_replacement"}:
        tokenized = _tokenized(records)
        alignments = _load_alignment_links(args, records, tokenized)
    params = DecodeParams(
        temperature=args.temperature, max_tokens=args.max_tokens, seed=args.seed
    )
    cache = PromptCache(args.cache_dir) if args.cache_dir else None
    results = run_matrix(
        records,
        methods,
        endpoints,
        directions,
        alignments,
        params,
        pair=pair,
        cache=cache,
        parallelism=args.parallelism,
        constraint_side=args.constraint_side,
    )
    count = write_records(results, args.output)
    failures = sum(1 for r in results if r.error)
    print(f"generated {count} records ({failures} flagged failures) -> {args.output}")
    _raise_if_endpoint_down(results)
    return {"generations": args.output}


def cmd_judge(args) -> dict[str, str]:
    if not args.base_url or not args.model:
        raise ValidationError("--base-url and --model are required (flag or config)")
    pair = _pair_from_args(args)
    records = load_corpus(args.pairs, pair)
    generations = load_generations(args.generations)
    endpoint = LlmEndpoint(
        base_url=args.base_url,
        model=args.model,
        auth_env=args.auth_env,
        timeout=args.timeout,
        max_retries=args.max_retries,
    )
    cache = PromptCache(args.cache_dir) if args.cache_dir else None
    scores = judge_batch(
        generations,
        endpoint,
        {rec.id: rec for rec in records},
        params=DecodeParams(temperature=0.0, max_tokens=args.max_tokens),
        cache=cache,
        parallelism=args.parallelism,
    )
    count = write_records(scores, args.output)
    print(f"judged {count} generations -> {args.output}")
    attempted = [s for s in scores if s.error or s.raw_response]
    if attempted and all(s.error and "TransportError" in s.error for s in attempted):
        raise TransportError(
            f"every judge call failed; first error: {attempted[0].error}"
        )
    return {"judge_scores": args.output}


def _build_score_table(args) -> ScoreTable:
    generations = load_generations(args.generations)
    rows: list[dict[str, Any]] = [
        {
            "generation_id": g.id,
            "method": g.method,
            "model": g.model,
            "direction": g.direction,
        }
        for g in generations
    ]
    index = {g.id: row for g, row in zip(generations, rows)}

    if args.ratings:
        sums: dict[str, list[float]] = {}
        for r in load_ratings(args.ratings):
            acc, flu, n = sums.setdefault(r.generation_id, [0.0, 0.0, 0.0])
            sums[r.generation_id] = [acc + r.accuracy, flu + r.fluency, n + 1]
        for gen_id, (acc, flu, n) in sums.items():
            if gen_id in index:
                index[gen_id]["human_accuracy"] = acc / n
                index[gen_id]["human_fluency"] = flu / n
    if args.judge_scores:
        for score in load_judge_scores(args.judge_scores):
            if score.generation_id in index:
                index[score.generation_id]["gpt4o_a"] = float(score.accuracy)
                index[score.generation_id]["gpt4o_f"] = float(score.fluency)
    if args.scores:
        for line_no, obj in iter_jsonl(args.scores):
            gen_id = str(obj.get("generation_id", ""))
            if gen_id not in index:
                continue
            for key, value in obj.items():
                if key != "generation_id" and isinstance(value, (int, float)):
                    index[gen_id][key] = float(value)
    for row in rows:
        avg = comet_avg(row.get("comet_l1"), row.get("comet_l2"))
        if avg is not None:
            row["comet_avg"] = avg

    if args.pairs:
        pair = _pair_from_args(args)
        corpus = {rec.id: rec for rec in load_corpus(args.pairs, pair)}
        for gen in generations:
            rec = corpus.get(gen.input_id)
            if rec is None or gen.error or not gen.text_cs.strip():
                continue
            tp = TokenizedPair(tuple(tokenize(rec.text_l1)), tuple(tokenize(rec.text_l2)))
            try:
                index[gen.id]["i_index"] = i_index(tag_token_languages(gen.text_cs, tp, pair))
            except UndefinedMetricError:
                pass
    if args.references:
        refs_by_input: dict[str, list[list[str]]] = {}
        for line_no, obj in iter_jsonl(args.references):
            texts = obj.get("references", [])
            if not isinstance(texts, list) or not texts:
                raise ValidationError(f"{args.references}:{line_no}: empty reference list")
            refs_by_input[str(obj.get("id", ""))] = [tokenize(str(t)) for t in texts]
        for gen in generations:
            refs = refs_by_input.get(gen.input_id)
            if refs is None or gen.error or not gen.text_cs.strip():
                continue
            index[gen.id]["bleu"] = sentence_bleu(tokenize(gen.text_cs), refs)
    return ScoreTable.from_rows(rows)


def cmd_metrics(args) -> dict[str, str]:
    table = _build_score_table(args)
    write_records(table.to_rows(), args.output)
    report = aggregate_means(table, group_by=tuple(args.group_by.split(",")))
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            for row in report:
                fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    _print_aggregate(report)
    print(f"score table ({len(table.ids)} rows) -> {args.output}")
    outputs = {"table": args.output}
    if args.report:
        outputs["report"] = args.report
    return outputs


def _print_aggregate(report: list[dict[str, Any]]) -> None:
    if not report:
        print("no groups to report")
        return
    group_keys = [k for k in report[0] if k not in ("means", "counts", "n")]
    columns = sorted({c for row in report for c in row["means"]})
    header = group_keys + ["n"] + columns
    print("  ".join(f"{h:>14}" for h in header))
    for row in report:
        cells = [str(row[k]) for k in group_keys] + [str(row["n"])]
        for col in columns:
            value = row["means"].get(col)
            cells.append("-" if value is None else f"{value:.3f}")
        print("  ".join(f"{c:>14}" for c in cells))


def cmd_correlate(args) -> dict[str, str]:
    rows = [obj for _, obj in iter_jsonl(args.table)]
    table = ScoreTable.from_rows(rows)
    targets = tuple(t.strip() for t in args.targets.split(",") if t.strip())
    matrix = correlate_table(table, targets=targets)
    with open(args.output, "w", encoding="utf-8") as fh:
        for name, cells in matrix:
            fh.write(json.dumps({"column": name, **cells}, ensure_ascii=False) + "\n")
    print("  ".join(f"{h:>24}" for h in ("metric",) + targets))
    for name, cells in matrix:
        row = [name] + [
            "-" if cells[t] is None else f"{cells[t]:.3f}" for t in targets
        ]
        print("  ".join(f"{c:>24}" for c in row))
    return {"correlations": args.output}


def cmd_prefs(args) -> dict[str, str]:
    ratings = load_ratings(args.ratings)
    generations = load_generations(args.generations)
    pairs = build_pairs(
        ratings, generations, dimension=args.dimension, threshold=args.threshold
    )
    write_records(pairs, args.output)
    stats = pref_stats(pairs)
    label = args.language or "all"
    print(f"{'language':>12}  {'total':>8}  {'easy':>8}  {'hard':>8}")
    print(f"{label:>12}  {stats.total:>8}  {stats.easy:>8}  {stats.hard:>8}")
    return {"pairs": args.output}


def cmd_anova(args) -> dict[str, str]:
    rows = [obj for _, obj in iter_jsonl(args.table)]
    table = ScoreTable.from_rows(rows)
    if args.factor not in table.meta:
        raise ValidationError(f"factor {args.factor!r} not present in the table")
    columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    results = []
    for column in columns:
        if column not in table.columns:
            raise ValidationError(f"column {column!r} not present in the table")
        groups: dict[str, list[float]] = {}
        for level, value in zip(table.meta[args.factor], table.columns[column]):
            if value is not None:
                groups.setdefault(level, []).append(value)
        result = anova_oneway(list(groups.values()), factor=args.factor)
        results.append(
            {
                "factor": args.factor,
                "column": column,
                "F": result.F,
                "p": result.p,
                "df_between": result.df_between,
                "df_within": result.df_within,
            }
        )
    with open(args.output, "w", encoding="utf-8") as fh:
        for row in results:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    print(f"{'factor':>12}  {'column':>16}  {'F':>10}  {'p':>12}")
    for row in results:
        print(
            f"{row['factor']:>12}  {row['column']:>16}  {row['F']:>10.2f}  {row['p']:>12.3g}"
        )
    return {"anova": args.output}


def _rating_matrices(ratings: Sequence[RatingRecord]) -> dict[str, list[list[float | None]]]:
    items = sorted({r.generation_id for r in ratings})
    evaluators = sorted({r.evaluator_id for r in ratings})
    item_idx = {g: k for k, g in enumerate(items)}
    eval_idx = {e: k for k, e in enumerate(evaluators)}
    out: dict[str, list[list[float | None]]] = {}
    for dimension in ("accuracy", "fluency"):
        matrix: list[list[float | None]] = [[None] * len(items) for _ in evaluators]
        for r in ratings:
            matrix[eval_idx[r.evaluator_id]][item_idx[r.generation_id]] = float(
                getattr(r, dimension)
            )
        out[dimension] = matrix
    return out


def cmd_agreement(args) -> dict[str, str]:
    ratings = load_ratings(args.ratings)
    report = {}
    for dimension, matrix in _rating_matrices(ratings).items():
        result = krippendorff_alpha(matrix, level="ordinal", dimension=dimension)
        report[dimension] = result.alpha
    Path(args.output).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    for dimension, alpha in report.items():
        print(f"{dimension:>10}: alpha = {alpha:.4f}")
    return {"agreement": args.output}


def cmd_serve(args) -> dict[str, str]:
    from .annosrv import AnnotationStore, run_server

    pair = _pair_from_args(args)
    records = load_corpus(args.pairs, pair)
    generations = load_generations(args.generations)
    if args.evaluators.startswith("@"):
        evaluators = [
            line.strip()
            for line in Path(args.evaluators[1:]).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    else:
        evaluators = [e.strip() for e in args.evaluators.split(",") if e.strip()]
    store = AnnotationStore(
        generations,
        {rec.id: rec for rec in records},
        evaluators,
        n_required=args.n_required,
        lease_seconds=args.lease_seconds,
        journal_path=args.journal,
    )
    outputs = {"journal": args.journal} if args.journal else {}
    manifest_path = _write_manifest(args, outputs)
    print(f"manifest -> {manifest_path}")
    print(f"serving {len(generations)} generations on {args.host}:{args.port}")
    run_server(store, host=args.host, port=args.port)
    return {}


# ---------------------------------------------------------------- parser


def _add_common(p: _Parser, *, pair_flags: bool = True) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags win")
    p.add_argument("--manifest", help="run manifest path (default: <output>.manifest.json)")
    if pair_flags:
        p.add_argument("--l1", default="en", help="L1 language code")
        p.add_argument("--l2", default="hi", help="L2 language code")
        p.add_argument("--l1-name", dest="l1_name", help="L1 display name for prompts")
        p.add_argument("--l2-name", dest="l2_name", help="L2 display name for prompts")


def build_parser() -> _Parser:
    parser = _Parser(prog="cswitch", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate and normalize a parallel corpus")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("align", help="ingest Pharaoh alignments or train the built-in aligner")
    _add_common(p)
    p.add_argument("--pairs", required=True)
    p.add_argument("--pharaoh", help="raw Pharaoh file, one line per sentence pair")
    p.add_argument("--iterations", type=int, default=5, help="EM iterations for the built-in aligner")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("switch-points", help="compute valid switching points per pair")
    _add_common(p)
    p.add_argument("--pairs", required=True)
    p.add_argument("--pharaoh", help="raw Pharaoh file, one line per sentence pair")
    p.add_argument("--alignments", help="alignment JSONL from the align subcommand")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_switch_points)

    p = sub.add_parser("generate", help="batch code-switched generation")
    _add_common(p)
    p.add_argument("--pairs", required=True)
    p.add_argument("--methods")
    p.add_argument("--models", help="comma-separated model names")
    p.add_argument("--directions", help="'both' (default) or comma-separated")
    p.add_argument("--base-url", dest="base_url")
    p.add_argument("--auth-env", dest="auth_env", default="CSWITCH_API_TOKEN")
    p.add_argument("--pharaoh", help="raw Pharaoh file, one line per sentence pair")
    p.add_argument("--alignments", help="alignment JSONL from the align subcommand")
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--max-tokens", dest="max_tokens", type=int, default=256)
    p.add_argument("--seed", type=int)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-retries", dest="max_retries", type=int, default=3)
    p.add_argument("--parallelism", type=int, default=4)
    p.add_argument("--constraint-side", dest="constraint_side", default="l2_only",
                   choices=("l2_only", "both"))
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("judge", help="LLM-as-judge scoring of generations")
    _add_common(p)
    p.add_argument("--pairs", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--base-url", dest="base_url")
    p.add_argument("--model")
    p.add_argument("--auth-env", dest="auth_env", default="CSWITCH_API_TOKEN")
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--max-tokens", dest="max_tokens", type=int, default=64)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--max-retries", dest="max_retries", type=int, default=3)
    p.add_argument("--parallelism", type=int, default=4)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("metrics", help="assemble the score table and aggregate means")
    _add_common(p)
    p.add_argument("--generations", required=True)
    p.add_argument("--ratings")
    p.add_argument("--judge-scores", dest="judge_scores")
    p.add_argument("--scores", help="extra score columns keyed by generation_id")
    p.add_argument("--references", help="code-switched references per input id; enables BLEU")
    p.add_argument("--pairs", help="corpus file; enables the per-sentence I-index column")
    p.add_argument("--group-by", dest="group_by", default="method,model,direction")
    p.add_argument("--report", help="aggregate report JSONL path")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("correlate", help="tau-b of metric columns against human targets")
    _add_common(p, pair_flags=False)
    p.add_argument("--table", required=True, help="score table JSONL from the metrics subcommand")
    p.add_argument("--targets", default="human_accuracy,human_fluency")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("prefs", help="build the pairwise preference dataset")
    _add_common(p, pair_flags=False)
    p.add_argument("--ratings", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--dimension", default="combined", choices=("combined", "accuracy", "fluency"))
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--language", help="label for the stats report")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_prefs)

    p = sub.add_parser("anova", help="one-way ANOVA of a score column by a factor")
    _add_common(p, pair_flags=False)
    p.add_argument("--table", required=True)
    p.add_argument("--factor", default="method", choices=("method", "model", "direction"))
    p.add_argument("--columns", default="human_accuracy,human_fluency")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_anova)

    p = sub.add_parser("agreement", help="Krippendorff's alpha from a ratings file")
    _add_common(p, pair_flags=False)
    p.add_argument("--ratings", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    _add_common(p)
    p.add_argument("--pairs", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--evaluators", required=True, help="comma-separated ids, or @file")
    p.add_argument("--journal", help="append-only rating journal path")
    p.add_argument("--n-required", dest="n_required", type=int, default=3)
    p.add_argument("--lease-seconds", dest="lease_seconds", type=float, default=1800.0)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8787)
    p.set_defaults(func=cmd_serve)

    return parser


def _apply_config(args: argparse.Namespace) -> None:
    """Fill unset (None) options from the config file; explicit flags win."""
    if not getattr(args, "config", None):
        return
    try:
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
    section = config.get(args.command, config) if isinstance(config, dict) else {}
    if not isinstance(section, dict):
        raise ValidationError("config must be a JSON object")
    for key, value in section.items():
        dest = key.replace("-", "_")
        if hasattr(args, dest) and getattr(args, dest) is None:
            setattr(args, dest, value)


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _apply_config(args)
        outputs = args.func(args)
        if args.command != "serve":
            manifest_path = _write_manifest(args, outputs)
            print(f"manifest -> {manifest_path}")
        return 0
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 2
    except CswitchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()

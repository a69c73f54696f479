"""Acceptance suite: one test per release criterion.

Each test prints a PASS/FAIL line (run with ``pytest -s`` to see them all),
pins its tolerance inline, and uses an oracle independent of the code path
it checks.
"""

import json
import math
import random
import time
from contextlib import contextmanager

import pytest

from cswitch.alignment import TokenizedPair, train_ibm1, log_likelihood, align_ibm1
from cswitch.cli import dispatch
from cswitch.corpus import LanguagePair, ParallelRecord, load_generations
from cswitch.ect import ConstraintWords, crossing_oracle, valid_switching_points
from cswitch.errors import UndefinedMetricError
from cswitch.genpipe import (
    DecodeParams,
    LlmEndpoint,
    PromptCache,
    build_baseline_prompt,
    build_ect_prompt,
    build_translate_prompt,
    run_matrix,
)
from cswitch.judge import build_judge_prompt, judge_batch
from cswitch.metrics import (
    LANG_L1,
    LANG_L2,
    LANG_OTHER,
    ScoreTable,
    TokenLangSeq,
    aggregate_means,
    anova_oneway,
    comet_avg,
    correlate_table,
    f_survival,
    i_index,
    kendall_tau_b,
    krippendorff_alpha,
)
from cswitch.mockllm import MockLLMServer
from cswitch.prefs import build_pairs, pref_stats
from tests.test_metrics import brute_force_tau_b, oracle_alpha

PAIR = LanguagePair("en", "hi", "English", "Hindi")


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"FAIL: {name}")
        raise
    print(f"PASS: {name}")


def test_ect_oracle_equivalence():
    with criterion("ECT oracle equivalence (1000 random alignments, n <= 12)"):
        started = time.monotonic()
        rng = random.Random(20240901)
        for _ in range(1000):
            n = rng.randint(0, 12)
            links = [(rng.randrange(12), rng.randrange(12)) for _ in range(n)]
            assert (
                valid_switching_points(links).valid_links
                == crossing_oracle(links).valid_links
            )
        # monotone alignments are entirely valid
        for n in range(1, 13):
            monotone = [(k, k) for k in range(n)]
            assert valid_switching_points(monotone).valid_links == monotone
        # fully reversed alignments of length >= 2 are entirely invalid
        for n in range(2, 13):
            reversed_links = [(k, n - 1 - k) for k in range(n)]
            assert valid_switching_points(reversed_links).valid_links == []
        assert time.monotonic() - started < 5.0


def test_generation_matrix_cardinality_and_cache(tmp_path):
    with criterion("matrix cardinality 150x3x3x2 = 2700 with silent warm cache"):
        started = time.monotonic()
        corpus = [
            ParallelRecord(
                id=f"s{k}",
                text_l1=f"english sample sentence number {k} .",
                text_l2=f"yah angrezi namoona vaaky sankhya {k} hai .",
            )
            for k in range(150)
        ]
        alignments = {rec.id: [(0, 0), (1, 1), (2, 3), (3, 4), (4, 5)] for rec in corpus}
        methods = ["baseline", "human_ect", "ezswitch"]
        cache = PromptCache(tmp_path / "cache")
        with MockLLMServer() as server:
            endpoints = [
                LlmEndpoint(base_url=server.base_url, model=m, retry_backoff=0.01)
                for m in ("aya23", "llama3", "llama3.1")
            ]
            records = run_matrix(
                corpus, methods, endpoints, ["l1_to_cs", "l2_to_cs"],
                alignments, DecodeParams(), pair=PAIR, cache=cache, parallelism=8,
            )
            assert len(records) == 2700
            assert sum(1 for r in records if r.error) == 0
            cold_calls = server.request_count
            assert cold_calls > 0
            rerun = run_matrix(
                corpus, methods, endpoints, ["l1_to_cs", "l2_to_cs"],
                alignments, DecodeParams(), pair=PAIR, cache=cache, parallelism=8,
            )
            assert server.request_count == cold_calls  # zero endpoint calls on rerun
            assert [r.to_json_dict() for r in rerun] == [r.to_json_dict() for r in records]
        # persisted batch round-trips at full size
        out = tmp_path / "generations.jsonl"
        from cswitch.corpus import write_records

        assert write_records(records, out) == 2700
        assert len(load_generations(out)) == 2700
        assert time.monotonic() - started < 60.0


GOLDEN_PROMPTS = {
    "translate": "Translate the following English sentence to Hindi:\nThis is a sentence.",
    "baseline": (
        "You are a Bilingual English-Hindi speaker, you will help translate these "
        "English sentences into a code-mixed sentence with Romanized Hindi and English\n"
        "This is a sentence."
    ),
    "ect": (
        "You are a Bilingual English-Hindi speaker, you will help translate these "
        "English sentences into a code-mixed sentence with Romanized Hindi and English "
        "with specific keywords that should to appear.\n"
        "This is a sentence.\n"
        "Words wanted: yah, hai"
    ),
    "judge": (
        "You are provided with triplets of sentences. The first two sentence in "
        "each triplet is the original monolingual sentences. The second sentence "
        "is a generated code-switched sentence. Your task is to evaluate the "
        "generated sentence based on two criteria: Accuracy and Fluency. You "
        "will score each criterion on a scale from 1 to 3, where 1 is the "
        "lowest and 3 is the highest. When evaluating the generated sentences, "
        "focus on the content and meaning. Ignore any extra formatting, "
        "alignment artifacts, or additional explanatory text. Judge the "
        "sentence to determine its accuracy and fluency.\n"
        "original_l1: This is a sentence.\n"
        "original_l2: यह एक वाक्य है\n"
        "generated: This ek sentence hai\n"
        'Answer with exactly {"accuracy": n, "fluency": n} where each n is 1, 2, or 3.'
    ),
}


def test_prompt_fidelity_golden_snapshots():
    with criterion("prompt fidelity: four golden templates, byte-identical"):
        for _ in range(3):  # identical across repeated renders
            assert (
                build_translate_prompt(PAIR, "This is a sentence.")
                == GOLDEN_PROMPTS["translate"]
            )
            assert (
                build_baseline_prompt(PAIR, "This is a sentence.")
                == GOLDEN_PROMPTS["baseline"]
            )
            assert (
                build_ect_prompt(
                    PAIR, "This is a sentence.", "l1_to_cs", ConstraintWords(["yah", "hai"])
                )
                == GOLDEN_PROMPTS["ect"]
            )
            assert (
                build_judge_prompt(
                    "This is a sentence.", "यह एक वाक्य है", "This ek sentence hai"
                )
                == GOLDEN_PROMPTS["judge"]
            )


def test_kendall_tau_b_against_brute_force():
    with criterion("kendall tau-b: brute-force match to 1e-12, diagonal 1.000"):
        rng = random.Random(31337)
        checked = 0
        while checked < 100:
            n = rng.randint(2, 200)
            x = [rng.randint(1, 5) for _ in range(n)]
            y = [rng.randint(1, 5) for _ in range(n)]
            try:
                fast = kendall_tau_b(x, y)
            except UndefinedMetricError:
                continue
            assert abs(fast - brute_force_tau_b(x, y)) <= 1e-12
            checked += 1
        # self-correlation is exactly 1.000, ties included
        for x in ([1, 2, 2, 3, 1], [4.0, 4.0, 2.0, 9.0], list(range(50))):
            assert kendall_tau_b(x, x) == 1.0
        table = ScoreTable.from_rows(
            [
                {"generation_id": f"g{k}", "human_accuracy": float(1 + k % 3),
                 "human_fluency": float(1 + (k + 1) % 3)}
                for k in range(30)
            ]
        )
        rows = dict(correlate_table(table))
        assert rows["human_accuracy"]["human_accuracy"] == 1.0


def test_krippendorff_alpha_criteria():
    with criterion("krippendorff alpha: exact 1.0, oracle 1e-9, random ~ 0"):
        perfect = [[1, 2, 3, 2, 1]] * 3
        assert krippendorff_alpha(perfect).alpha == 1.0
        rng = random.Random(8080)
        checked = 0
        while checked < 50:
            raters = rng.randint(2, 5)
            items = rng.randint(4, 20)
            rows = [
                [rng.choice([None, 1, 2, 3]) for _ in range(items)] for _ in range(raters)
            ]
            pairable = sum(
                1 for c in range(items) if sum(r[c] is not None for r in rows) >= 2
            )
            if pairable < 2:
                continue
            got = krippendorff_alpha(rows, level="ordinal").alpha
            assert abs(got - oracle_alpha(rows, "ordinal")) <= 1e-9
            checked += 1
        noise = [[rng.randint(1, 3) for _ in range(10_000)] for _ in range(3)]
        assert abs(krippendorff_alpha(noise).alpha) < 0.05


def test_anova_criteria():
    with criterion("anova: hand oracle F=3.0, monotone p, identical groups"):
        result = anova_oneway([[1, 2, 3], [2, 3, 4], [3, 4, 5]])
        assert abs(result.F - 3.0) <= 1e-9
        p_values = [f_survival(f, result.df_between, result.df_within)
                    for f in (0.5, 1.0, 3.0, 7.0, 20.0)]
        assert all(a > b for a, b in zip(p_values, p_values[1:]))
        identical = anova_oneway([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])
        assert identical.F == 0.0 and identical.p == 1.0


def test_i_index_criteria():
    with criterion("i-index: 0 monolingual, 1 alternating, 0.5 mixed, bounded"):
        def seq(tags):
            return TokenLangSeq(tokens=[f"t{k}" for k in range(len(tags))], tags=tags)

        assert i_index(seq([LANG_L1] * 6)) == 0.0
        assert i_index(seq([LANG_L1, LANG_L2] * 3)) == 1.0
        mixed = [LANG_L1, LANG_L1, LANG_L2, LANG_OTHER, LANG_L2, LANG_L1]
        assert i_index(seq(mixed)) == 0.5
        rng = random.Random(64)
        for _ in range(300):
            tags = [rng.choice([LANG_L1, LANG_L2, LANG_OTHER]) for _ in range(rng.randint(2, 25))]
            if sum(t != LANG_OTHER for t in tags) < 2:
                continue
            assert 0.0 <= i_index(seq(tags)) <= 1.0


def test_comet_avg_and_bit_exact_ingestion(tmp_path):
    with criterion("comet_avg exact mean; ingested means reproduced bit-exactly"):
        assert comet_avg(0.4, 0.6) == (0.4 + 0.6) / 2
        assert comet_avg(0.512, 0.512) == 0.512
        rng = random.Random(1001)
        rows = []
        for k in range(60):
            rows.append(
                {
                    "generation_id": f"g{k}",
                    "method": ("baseline", "human_ect", "ezswitch")[k % 3],
                    "model": "aya23",
                    "direction": "l1_to_cs",
                    "comet_l1": rng.random(),
                    "comet_l2": rng.random(),
                }
            )
        table = ScoreTable.from_rows(rows)
        table.add_column(
            "comet_avg",
            [comet_avg(a, b) for a, b in zip(table.columns["comet_l1"], table.columns["comet_l2"])],
        )
        report = aggregate_means(table, group_by=("method",))
        for group in report:
            members = [
                (r["comet_l1"] + r["comet_l2"]) / 2
                for r in rows
                if r["method"] == group["method"]
            ]
            expected = sum(members) / len(members)
            assert group["means"]["comet_avg"] == expected  # bit-exact


def test_preference_builder_criteria():
    with criterion("preferences: 153 pairs, partition identity, threshold monotone"):
        from cswitch.corpus import GenerationRecord, RatingRecord

        generations = [
            GenerationRecord(
                id=f"g{k}", input_id="s0", method="ezswitch", model="m",
                direction="l1_to_cs", text_cs=f"output {k}", constraint_words=["w"],
            )
            for k in range(18)
        ]
        ratings = []
        for k, gen in enumerate(generations):
            values = [1] * (17 - k) + [3] * k
            for r, value in enumerate(values):
                ratings.append(
                    RatingRecord(
                        generation_id=gen.id, evaluator_id=f"e{r}",
                        accuracy=value, fluency=value,
                    )
                )
        pairs = build_pairs(ratings, generations, threshold=0.5)
        assert len(pairs) == 153
        rng = random.Random(515)
        easy_counts = []
        for threshold in sorted(rng.uniform(0.0, 2.2) for _ in range(20)):
            bucketed = build_pairs(ratings, generations, threshold=threshold)
            stats = pref_stats(bucketed)
            assert stats.easy + stats.hard == stats.total
            easy_counts.append(stats.easy)
        assert all(a >= b for a, b in zip(easy_counts, easy_counts[1:]))


def test_ibm1_em_criteria():
    with criterion("IBM-1 EM: monotone LL over 10 iters, diagonal copy-corpus, hand oracle"):
        rng = random.Random(777)
        vocab = [f"w{k}" for k in range(40)]
        corpus = []
        for _ in range(100):
            n = rng.randint(2, 8)
            l1 = [rng.choice(vocab) for _ in range(n)]
            l2 = [rng.choice(vocab) for _ in range(n)]
            corpus.append(TokenizedPair(tuple(l1), tuple(l2)))
        lls = [log_likelihood(train_ibm1(corpus, k), corpus) for k in range(11)]
        for before, after in zip(lls, lls[1:]):
            assert after >= before - 1e-9

        copy_sentences = [[w] for w in vocab[:10]]
        for _ in range(25):
            copy_sentences.append(rng.sample(vocab[:10], rng.randint(3, 6)))
        copy_corpus = [TokenizedPair(tuple(s), tuple(s)) for s in copy_sentences]
        model = train_ibm1(copy_corpus, 5)
        for word, row in model.table.items():
            assert max(row, key=row.get) == word
        sentence = TokenizedPair(("w0", "w3", "w7"), ("w0", "w3", "w7"))
        assert align_ibm1(model, sentence).links == [(0, 0), (1, 1), (2, 2)]

        # two-pair corpus, two EM updates, hand-derived closed form
        tiny = [TokenizedPair(("a", "b"), ("x", "y")), TokenizedPair(("a",), ("x",))]
        trained = train_ibm1(tiny, 2)
        assert abs(trained.prob("a", "x") - 24 / 29) <= 1e-9
        assert abs(trained.prob("b", "y") - 0.625) <= 1e-9


def test_end_to_end_smoke(tmp_path):
    with criterion("end-to-end smoke: ingest..prefs via CLI under 30 s"):
        started = time.monotonic()
        raw = tmp_path / "raw.jsonl"
        with open(raw, "w", encoding="utf-8") as fh:
            for k in range(10):
                fh.write(
                    json.dumps(
                        {
                            "id": f"s{k}",
                            "text_l1": f"this is toy sentence number {k}",
                            "text_l2": f"yah khilona vaaky sankhya {k} hai",
                        }
                    )
                    + "\n"
                )
        corpus = tmp_path / "corpus.jsonl"
        aligned = tmp_path / "aligned.jsonl"
        points = tmp_path / "points.jsonl"
        gen = tmp_path / "gen.jsonl"
        judged = tmp_path / "judged.jsonl"
        table = tmp_path / "table.jsonl"
        pairs_out = tmp_path / "pairs.jsonl"

        assert dispatch(["ingest", "--input", str(raw), "--output", str(corpus)]) == 0
        assert dispatch(
            ["align", "--pairs", str(corpus), "--iterations", "3", "--output", str(aligned)]
        ) == 0
        assert dispatch(
            ["switch-points", "--pairs", str(corpus), "--alignments", str(aligned),
             "--output", str(points)]
        ) == 0
        with MockLLMServer() as server:
            assert dispatch(
                [
                    "generate",
                    "--pairs", str(corpus),
                    "--alignments", str(aligned),
                    "--methods", "baseline,human_ect,ezswitch",
                    "--models", "aya23,llama3",
                    "--directions", "both",
                    "--base-url", server.base_url,
                    "--cache-dir", str(tmp_path / "cache"),
                    "--output", str(gen),
                ]
            ) == 0
            assert dispatch(
                [
                    "judge",
                    "--pairs", str(corpus),
                    "--generations", str(gen),
                    "--base-url", server.base_url,
                    "--model", "judge-model",
                    "--output", str(judged),
                ]
            ) == 0

        generations = load_generations(gen)
        assert len(generations) == 10 * 3 * 2 * 2

        # ratings injected by file import: three simulated evaluators
        ratings = tmp_path / "ratings.jsonl"
        rng = random.Random(5)
        with open(ratings, "w", encoding="utf-8") as fh:
            for record in generations:
                for evaluator in ("e1", "e2", "e3"):
                    fh.write(
                        json.dumps(
                            {
                                "generation_id": record.id,
                                "evaluator_id": evaluator,
                                "accuracy": rng.randint(1, 3),
                                "fluency": rng.randint(1, 3),
                                "timestamp": "2024-01-01T00:00:00+00:00",
                            }
                        )
                        + "\n"
                    )
        assert dispatch(
            [
                "metrics",
                "--generations", str(gen),
                "--ratings", str(ratings),
                "--judge-scores", str(judged),
                "--pairs", str(corpus),
                "--output", str(table),
            ]
        ) == 0
        assert dispatch(
            [
                "prefs",
                "--ratings", str(ratings),
                "--generations", str(gen),
                "--threshold", "0.5",
                "--output", str(pairs_out),
            ]
        ) == 0

        manifest = json.loads((tmp_path / "pairs.jsonl.manifest.json").read_text())
        assert manifest["command"] == "prefs"
        assert manifest["manifest_digest"]
        assert manifest["inputs"]
        assert (tmp_path / "table.jsonl.manifest.json").exists()
        assert time.monotonic() - started < 30.0


def test_annotation_loop_via_http_api():
    """Ratings are injectable through the HTTP API alone (no UI required)."""
    with criterion("annotation loop: 3 evaluators x 5 generations over HTTP"):
        from fastapi.testclient import TestClient

        from cswitch.annosrv import AnnotationStore, create_app
        from cswitch.corpus import GenerationRecord

        originals = {
            f"s{k}": ParallelRecord(
                id=f"s{k}", text_l1=f"english {k}", text_l2=f"hindi {k}"
            )
            for k in range(5)
        }
        generations = [
            GenerationRecord(
                id=f"g{k}", input_id=f"s{k}", method="baseline", model="m",
                direction="l1_to_cs", text_cs=f"mixed {k}",
            )
            for k in range(5)
        ]
        store = AnnotationStore(generations, originals, ("e1", "e2", "e3", "e4"))
        client = TestClient(create_app(store))
        for evaluator in ("e1", "e2", "e3"):
            for _ in range(5):
                task = client.get("/task", params={"evaluator": evaluator}).json()["task"]
                assert task is not None
                assert (
                    client.post(
                        "/rating",
                        json={
                            "task_id": task["task_id"],
                            "evaluator_id": evaluator,
                            "accuracy": 1 + int(task["generation_id"][1]) % 3,
                            "fluency": 1 + int(task["generation_id"][1]) % 3,
                        },
                    ).status_code
                    == 200
                )
        export = client.get("/export").json()
        assert len(export) == 15
        # a fourth rating attempt on a saturated generation conflicts
        assert client.get("/task", params={"evaluator": "e4"}).json()["task"] is None
        assert (
            client.post(
                "/rating",
                json={"task_id": "task-1", "evaluator_id": "e4", "accuracy": 2, "fluency": 2},
            ).status_code
            == 409
        )
        # the export feeds the agreement statistic without transformation
        report = client.get("/agreement").json()
        assert report["accuracy"]["alpha"] == 1.0
        assert report["fluency"]["alpha"] == 1.0

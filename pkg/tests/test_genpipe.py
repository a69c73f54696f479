import json

import pytest

from cswitch.corpus import LanguagePair, ParallelRecord
from cswitch.ect import ConstraintWords
from cswitch.errors import TransportError, ValidationError
from cswitch.genpipe import (
    DecodeParams,
    LlmEndpoint,
    PromptCache,
    build_baseline_prompt,
    build_ect_prompt,
    build_translate_prompt,
    chat_complete,
    prompt_digest,
    run_matrix,
    word_replacement,
)
from cswitch.alignment import TokenizedPair
from cswitch.mockllm import MockLLMServer

PAIR = LanguagePair("en", "hi", "English", "Hindi")

GOLDEN_TRANSLATE = "Translate the following English sentence to Hindi:\nThis is a sentence."

GOLDEN_BASELINE = (
    "You are a Bilingual English-Hindi speaker, you will help translate these "
    "English sentences into a code-mixed sentence with Romanized Hindi and English\n"
    "This is a sentence."
)

GOLDEN_ECT = (
    "You are a Bilingual English-Hindi speaker, you will help translate these "
    "English sentences into a code-mixed sentence with Romanized Hindi and English "
    "with specific keywords that should to appear.\n"
    "This is a sentence.\n"
    "Words wanted: yah, hai"
)


# ----------------------------------------------------------------- prompts

def test_translate_prompt_golden():
    assert build_translate_prompt(PAIR, "This is a sentence.") == GOLDEN_TRANSLATE


def test_translate_prompt_empty_input_is_error():
    with pytest.raises(ValidationError):
        build_translate_prompt(PAIR, "   ")


def test_translate_prompt_direction_swaps_names():
    prompt = build_translate_prompt(PAIR, "यह एक वाक्य है", direction="l2_to_cs")
    assert prompt.startswith("Translate the following Hindi sentence to English:")


def test_baseline_prompt_golden():
    assert build_baseline_prompt(PAIR, "This is a sentence.") == GOLDEN_BASELINE


def test_baseline_prompt_contains_romanization_clause():
    prompt = build_baseline_prompt(PAIR, "kuch bhi", direction="l2_to_cs")
    assert "code-mixed sentence with Romanized" in prompt
    assert "Bilingual Hindi-English speaker" in prompt


def test_baseline_prompt_input_exactly_once():
    prompt = build_baseline_prompt(PAIR, "This is a sentence.")
    assert prompt.count("This is a sentence.") == 1


def test_baseline_prompt_has_no_words_wanted():
    assert "Words wanted:" not in build_baseline_prompt(PAIR, "x y z")


def test_ect_prompt_golden():
    words = ConstraintWords(["yah", "hai"])
    assert build_ect_prompt(PAIR, "This is a sentence.", "l1_to_cs", words) == GOLDEN_ECT


def test_ect_prompt_empty_words_renders():
    prompt = build_ect_prompt(PAIR, "This is a sentence.", "l1_to_cs", ConstraintWords([]))
    assert prompt.endswith("Words wanted: ")


def test_ect_prompt_preserves_word_order():
    prompt = build_ect_prompt(
        PAIR, "input", "l1_to_cs", ConstraintWords(["zeta", "alpha", "mid"])
    )
    assert prompt.endswith("Words wanted: zeta, alpha, mid")


def test_prompt_determinism():
    for _ in range(3):
        assert build_translate_prompt(PAIR, "This is a sentence.") == GOLDEN_TRANSLATE
        assert build_baseline_prompt(PAIR, "This is a sentence.") == GOLDEN_BASELINE
        assert (
            build_ect_prompt(PAIR, "This is a sentence.", "l1_to_cs", ConstraintWords(["yah", "hai"]))
            == GOLDEN_ECT
        )


def test_exemplar_inserted_when_provided():
    prompt = build_baseline_prompt(PAIR, "input text", exemplar="This hai ek example")
    assert "\nExample: This hai ek example\n" in prompt
    assert build_baseline_prompt(PAIR, "input text") == prompt.replace(
        "\nExample: This hai ek example", ""
    )


# ----------------------------------------------------------- chat_complete

def test_chat_complete_echo_mock():
    with MockLLMServer(mode="echo") as server:
        endpoint = LlmEndpoint(base_url=server.base_url, model="m", retry_backoff=0.01)
        assert chat_complete(endpoint, "echo this back", DecodeParams()) == "echo this back"


def test_chat_complete_retries_transient_500():
    with MockLLMServer(fail_statuses=[500, 500]) as server:
        endpoint = LlmEndpoint(
            base_url=server.base_url, model="m", max_retries=3, retry_backoff=0.01
        )
        text = chat_complete(endpoint, "prompt", DecodeParams())
        assert text
        assert server.request_count == 3


def test_chat_complete_retries_exhausted_carries_status():
    with MockLLMServer(fail_statuses=[503] * 10) as server:
        endpoint = LlmEndpoint(
            base_url=server.base_url, model="m", max_retries=2, retry_backoff=0.01
        )
        with pytest.raises(TransportError) as exc:
            chat_complete(endpoint, "prompt", DecodeParams())
        assert exc.value.status == 503
        assert server.request_count == 3


def test_chat_complete_non_transient_fails_fast():
    with MockLLMServer(fail_statuses=[403]) as server:
        endpoint = LlmEndpoint(
            base_url=server.base_url, model="m", max_retries=5, retry_backoff=0.01
        )
        with pytest.raises(TransportError) as exc:
            chat_complete(endpoint, "prompt", DecodeParams())
        assert exc.value.status == 403
        assert server.request_count == 1


def test_chat_complete_unreachable_endpoint():
    endpoint = LlmEndpoint(
        base_url="http://127.0.0.1:1", model="m", max_retries=1, retry_backoff=0.01, timeout=0.5
    )
    with pytest.raises(TransportError):
        chat_complete(endpoint, "prompt", DecodeParams())


# -------------------------------------------------------------- run_matrix

def _records(n):
    return [
        ParallelRecord(
            id=f"s{k}",
            text_l1=f"this is sample sentence {k} .",
            text_l2=f"yah namoona vaaky {k} hai .",
        )
        for k in range(n)
    ]


def _diagonal_alignments(records):
    return {r.id: [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4)] for r in records}


def test_single_cell_matrix():
    records = _records(1)
    with MockLLMServer() as server:
        endpoint = LlmEndpoint(base_url=server.base_url, model="m", retry_backoff=0.01)
        out = run_matrix(records, ["baseline"], [endpoint], ["l1_to_cs"], pair=PAIR)
    assert len(out) == 1
    assert out[0].method == "baseline"
    assert out[0].constraint_words == []
    assert out[0].prompt_hash


def test_matrix_cardinality_with_failures(tmp_path):
    records = _records(4)
    alignments = _diagonal_alignments(records)
    del alignments["s2"]  # forces per-record failures for constraint methods
    with MockLLMServer() as server:
        endpoints = [
            LlmEndpoint(base_url=server.base_url, model=m, retry_backoff=0.01)
            for m in ("aya23", "llama3")
        ]
        out = run_matrix(
            records,
            ["baseline", "ezswitch", "human_ect"],
            endpoints,
            ["l1_to_cs", "l2_to_cs"],
            alignments,
            pair=PAIR,
        )
    assert len(out) == 4 * 3 * 2 * 2
    failed = [r for r in out if r.error]
    assert len(failed) == 2 * 2 * 2  # s2 x 2 ect methods x 2 models x 2 directions
    assert all(r.input_id == "s2" for r in failed)
    assert all(r.text_cs == "" for r in failed)


def test_matrix_warm_cache_is_silent_and_identical(tmp_path):
    records = _records(3)
    alignments = _diagonal_alignments(records)
    cache = PromptCache(tmp_path / "cache")
    with MockLLMServer() as server:
        endpoints = [LlmEndpoint(base_url=server.base_url, model="m", retry_backoff=0.01)]
        first = run_matrix(
            records, ["baseline", "ezswitch"], endpoints, ["l1_to_cs", "l2_to_cs"],
            alignments, pair=PAIR, cache=cache,
        )
        cold_calls = server.request_count
        assert cold_calls > 0
        second = run_matrix(
            records, ["baseline", "ezswitch"], endpoints, ["l1_to_cs", "l2_to_cs"],
            alignments, pair=PAIR, cache=cache,
        )
        assert server.request_count == cold_calls
    assert [r.to_json_dict() for r in first] == [r.to_json_dict() for r in second]


def test_matrix_records_in_input_major_order():
    records = _records(2)
    with MockLLMServer() as server:
        endpoint = LlmEndpoint(base_url=server.base_url, model="m", retry_backoff=0.01)
        out = run_matrix(
            records, ["baseline"], [endpoint], ["l1_to_cs", "l2_to_cs"],
            pair=PAIR, parallelism=8,
        )
    assert [r.id for r in out] == [
        "s0:baseline:m:l1_to_cs",
        "s0:baseline:m:l2_to_cs",
        "s1:baseline:m:l1_to_cs",
        "s1:baseline:m:l2_to_cs",
    ]


def test_matrix_empty_constraint_list_sets_warning():
    records = _records(1)
    alignments = {"s0": [(0, 1), (1, 0)]}  # fully crossing: no valid points
    with MockLLMServer() as server:
        endpoint = LlmEndpoint(base_url=server.base_url, model="m", retry_backoff=0.01)
        out = run_matrix(
            records, ["ezswitch"], [endpoint], ["l1_to_cs"], alignments, pair=PAIR
        )
    assert out[0].warning is not None
    assert out[0].constraint_words == []
    assert out[0].error is None


def test_matrix_per_method_alignment_tables():
    records = _records(1)
    nested = {
        "human_ect": {"s0": [(0, 0)]},
        "ezswitch": {"s0": [(1, 1)]},
    }
    with MockLLMServer() as server:
        endpoint = LlmEndpoint(base_url=server.base_url, model="m", retry_backoff=0.01)
        out = run_matrix(
            records, ["human_ect", "ezswitch"], [endpoint], ["l1_to_cs"], nested, pair=PAIR
        )
    by_method = {r.method: r for r in out}
    assert by_method["human_ect"].constraint_words == ["yah"]
    assert by_method["ezswitch"].constraint_words == ["namoona"]


def test_cache_hit_requires_digest_match(tmp_path):
    cache = PromptCache(tmp_path)
    params = DecodeParams()
    cache.put("m", "prompt text", params, "stored response")
    assert cache.get("m", "prompt text", params) == "stored response"
    # corrupt the stored prompt: entry no longer re-hashes to its key
    entry_path = next(tmp_path.glob("*.json"))
    entry = json.loads(entry_path.read_text())
    entry["prompt"] = "tampered"
    entry_path.write_text(json.dumps(entry))
    assert cache.get("m", "prompt text", params) is None


def test_cache_key_sensitive_to_params():
    a = PromptCache.key("m", "p", DecodeParams(temperature=0.0))
    b = PromptCache.key("m", "p", DecodeParams(temperature=0.7))
    assert a != b


# -------------------------------------------------------- word replacement

def test_word_replacement_substitutes_valid_points():
    tp = TokenizedPair(("the", "cat", "sat"), ("billi", "baithi", "thi"))
    text, used = word_replacement(tp, [(0, 0), (1, 2), (2, 1)])
    # (1,2) and (2,1) cross; only (0,0) is a valid switching point
    assert text == "billi cat sat"
    assert used == ["billi"]


def test_word_replacement_no_llm_in_matrix():
    records = _records(2)
    alignments = _diagonal_alignments(records)
    with MockLLMServer() as server:
        endpoint = LlmEndpoint(base_url=server.base_url, model="m", retry_backoff=0.01)
        out = run_matrix(
            records, ["word_replacement"], [endpoint], ["l1_to_cs"], alignments, pair=PAIR
        )
        assert server.request_count == 0
    assert len(out) == 2
    assert out[0].text_cs == "yah namoona vaaky 0 hai ."
    assert out[0].prompt_hash == ""


def test_unknown_method_rejected():
    with pytest.raises(ValidationError):
        run_matrix(_records(1), ["surprise"], [LlmEndpoint("http://x", "m")], ["l1_to_cs"], pair=PAIR)


def test_prompt_digest_is_sha256():
    digest = prompt_digest("abc")
    assert len(digest) == 64
    assert digest == prompt_digest("abc")

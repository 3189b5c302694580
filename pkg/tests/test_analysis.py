import pytest
from hypothesis import given, strategies as st

from ragmt.analysis import (
    AnalysisResult,
    BackendError,
    NmccType,
    RiskCategory,
    ScriptedStub,
    analyze_sentence,
    classify_nmcc,
    format_risks,
    parse_a1_response,
    parse_a2_response,
    predict_risks,
    render_a1_prompt,
    render_a2_prompt,
)


class TestParseA1:
    def test_inner_in_prose(self):
        assert parse_a1_response("This is an inner relation because…") is NmccType.INNER

    def test_bare_outer(self):
        assert parse_a1_response("outer") is NmccType.OUTER

    def test_both_is_unknown(self):
        assert parse_a1_response("it is both inner and outer") is NmccType.UNKNOWN

    def test_neither_is_unknown(self):
        assert parse_a1_response("no idea") is NmccType.UNKNOWN
        assert parse_a1_response("") is NmccType.UNKNOWN

    def test_cjk_labels(self):
        assert parse_a1_response("これは内の関係です") is NmccType.INNER
        assert parse_a1_response("外関係と判断する") is NmccType.OUTER
        assert parse_a1_response("内の関係とも外の関係とも言える") is NmccType.UNKNOWN

    def test_word_boundaries(self):
        # "winner"/"scouter" must not count as inner/outer tokens
        assert parse_a1_response("the winner is a scouter") is NmccType.UNKNOWN

    @given(st.text(max_size=200))
    def test_total_on_any_unicode(self, text):
        assert parse_a1_response(text) in (NmccType.INNER, NmccType.OUTER, NmccType.UNKNOWN)


class TestParseA2:
    def test_parenthesized_letters(self):
        assert parse_a2_response("(B) and (D)") == {
            RiskCategory.NMCC_HANDLING,
            RiskCategory.STYLE_REGISTER,
        }

    def test_single_letter(self):
        assert parse_a2_response("A") == {RiskCategory.LEXICAL_CHOICE}

    def test_no_risks(self):
        assert parse_a2_response("no risks") == frozenset()

    def test_lowercase_article_not_a_letter(self):
        assert parse_a2_response("this is a problem") == frozenset()

    def test_category_names(self):
        assert parse_a2_response("word order and lexical choice trouble") == {
            RiskCategory.WORD_ORDER,
            RiskCategory.LEXICAL_CHOICE,
        }
        assert parse_a2_response("style/register mismatch") == {RiskCategory.STYLE_REGISTER}

    def test_out_of_range_letters(self):
        assert parse_a2_response("E and F") == frozenset()

    @given(st.text(max_size=200))
    def test_total_and_closed(self, text):
        cats = parse_a2_response(text)
        assert cats <= set(RiskCategory)


class TestRiskCategory:
    def test_exactly_four(self):
        assert len(RiskCategory) == 4

    def test_from_tag_variants(self):
        assert RiskCategory.from_tag("b") is RiskCategory.NMCC_HANDLING
        assert RiskCategory.from_tag("WORD_ORDER") is RiskCategory.WORD_ORDER
        assert RiskCategory.from_tag("style/register") is RiskCategory.STYLE_REGISTER
        with pytest.raises(ValueError):
            RiskCategory.from_tag("Z")

    def test_format_risks(self):
        assert format_risks(frozenset()) == "none"
        assert (
            format_risks({RiskCategory.WORD_ORDER, RiskCategory.LEXICAL_CHOICE})
            == "lexical choice, word order"
        )


class TestPromptTemplates:
    def test_a1_prompt_embeds_sentence_and_suffix(self):
        prompt = render_a1_prompt("さんまを焼く男")
        assert prompt.startswith("You are a Japanese grammar expert")
        assert "Sentence: さんまを焼く男" in prompt
        assert 'ANSWER: INNER" or "ANSWER: OUTER' in prompt

    def test_a2_prompt_lists_all_categories(self):
        prompt = render_a2_prompt("雨が降る日")
        assert prompt.startswith("Analyze the possible error types")
        for marker in ("(A) Lexical choice", "(B) NMCC handling", "(C) Word-order", "(D) Style/register"):
            assert marker in prompt
        assert "Sentence: 雨が降る日" in prompt


class TestClassify:
    def test_stub_outer(self):
        backend = ScriptedStub(a1_default="OUTER")
        label, raw = classify_nmcc("さんまを焼く匂い", backend)
        assert label is NmccType.OUTER
        assert raw == "OUTER"

    def test_per_sentence_script(self):
        backend = ScriptedStub(
            a1_script={
                "さんまを焼く男": "ANSWER: INNER",
                "さんまを焼く匂い": "ANSWER: OUTER",
            }
        )
        assert classify_nmcc("さんまを焼く男", backend)[0] is NmccType.INNER
        assert classify_nmcc("さんまを焼く匂い", backend)[0] is NmccType.OUTER

    def test_answer_line_wins_over_prose(self):
        backend = ScriptedStub(
            a1_default="It could be inner or outer at first glance.\nANSWER: INNER"
        )
        assert classify_nmcc("本を読む学生", backend)[0] is NmccType.INNER

    def test_unparseable_settles_on_unknown(self):
        backend = ScriptedStub(a1_default="inner and outer, who knows")
        label, raw = classify_nmcc("本を読む学生", backend, max_parse_retries=2)
        assert label is NmccType.UNKNOWN
        assert raw == "inner and outer, who knows"

    def test_empty_sentence_rejected(self):
        with pytest.raises(ValueError):
            classify_nmcc("", ScriptedStub())

    def test_deterministic(self):
        backend = ScriptedStub()
        assert classify_nmcc("雨が降る日", backend) == classify_nmcc("雨が降る日", backend)


class TestPredict:
    def test_stub_letters(self):
        backend = ScriptedStub(a2_default="A, C")
        cats, raw = predict_risks("雨が降る日", backend)
        assert cats == {RiskCategory.LEXICAL_CHOICE, RiskCategory.WORD_ORDER}
        assert raw == "A, C"

    def test_stub_single(self):
        backend = ScriptedStub(a2_default="B")
        assert predict_risks("雨が降る日", backend)[0] == {RiskCategory.NMCC_HANDLING}

    def test_unparseable_yields_empty(self):
        backend = ScriptedStub(a2_default="E and F")
        cats, raw = predict_risks("雨が降る日", backend, max_parse_retries=1)
        assert cats == frozenset()
        assert raw == "E and F"

    def test_explicit_none_is_a_successful_parse(self):
        backend = ScriptedStub(a2_default="ANSWER: NONE")
        assert predict_risks("雨が降る日", backend)[0] == frozenset()


class TestAnalyzeSentence:
    def test_bundles_raw_responses(self):
        backend = ScriptedStub(a1_default="ANSWER: OUTER", a2_default="ANSWER: B, D")
        result = analyze_sentence("さんまを焼く匂い", backend)
        assert result.a1 is NmccType.OUTER
        assert result.a2 == {RiskCategory.NMCC_HANDLING, RiskCategory.STYLE_REGISTER}
        assert "OUTER" in result.raw_a1_response
        assert result.backend_id == "scripted-stub"
        assert not result.a1_parse_failed and not result.a2_parse_failed

    def test_labels_rederivable_from_raw(self):
        backend = ScriptedStub(a1_default="ANSWER: INNER", a2_default="ANSWER: A")
        result = analyze_sentence("本を読む学生", backend)
        assert parse_a1_response(result.raw_a1_response) is result.a1
        assert parse_a2_response(result.raw_a2_response) == result.a2

    def test_parse_failures_flagged(self):
        backend = ScriptedStub(a1_default="???", a2_default="E and F")
        result = analyze_sentence("本を読む学生", backend, max_parse_retries=0)
        assert result.a1 is NmccType.UNKNOWN and result.a1_parse_failed
        assert result.a2 == frozenset() and result.a2_parse_failed


class TestTransportFailure:
    def test_backend_error_carries_attempts(self):
        class FlakyBackend:
            backend_id = "flaky"

            def complete(self, prompt):
                raise BackendError("boom", attempts=["attempt 1: boom"])

        with pytest.raises(BackendError) as err:
            classify_nmcc("雨が降る日", FlakyBackend())
        assert err.value.attempts

import json

import pytest

from ragmt.corpus import (
    Corpus,
    CorpusError,
    CorpusRole,
    check_disjoint,
    dedup_and_clean,
    load_pairs,
    normalize_text,
    save_pairs,
    subset,
)

from .conftest import make_pair


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


RECORDS = [
    {"id": "p1", "source_ja": "さんまを焼く男", "target_zh": "烤秋刀鱼的男人"},
    {"id": "p2", "source_ja": "彼が書いた手紙", "target_zh": "他写的信",
     "meta": {"genre": "novel", "work": "w1", "has_nmcc": True, "error_tags": ["B"]}},
    {"id": "p3", "source_ja": "雨が降る日", "target_zh": "下雨的日子"},
]


class TestLoad:
    def test_jsonl_preserves_order(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, RECORDS)
        corpus = load_pairs(path)
        assert corpus.ids() == ["p1", "p2", "p3"]
        assert corpus.pairs[1].meta.genre == "novel"

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [RECORDS[0], {"id": "p2", "source_ja": "x"}])
        with pytest.raises(CorpusError, match=r"line 2: missing field 'target_zh'"):
            load_pairs(path)

    def test_duplicate_id_names_both_lines(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [RECORDS[0], RECORDS[1], {**RECORDS[2], "id": "p1"}])
        with pytest.raises(CorpusError, match=r"duplicate id 'p1' at lines 1 and 3"):
            load_pairs(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "p1"\n', encoding="utf-8")
        with pytest.raises(CorpusError, match="line 1"):
            load_pairs(path)

    def test_tsv(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("p1\tさんま\t秋刀鱼\np2\t手紙\t信\n", encoding="utf-8")
        corpus = load_pairs(path)
        assert corpus.ids() == ["p1", "p2"]
        assert corpus.pairs[0].meta.has_nmcc

    def test_tsv_wrong_columns(self, tmp_path):
        path = tmp_path / "c.tsv"
        path.write_text("p1\tonly-one-field\n", encoding="utf-8")
        with pytest.raises(CorpusError, match="line 1"):
            load_pairs(path)

    def test_normalization_applied(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "p1", "source_ja": "  さんま  を　焼く ", "target_zh": "烤"}])
        corpus = load_pairs(path)
        assert corpus.pairs[0].source_ja == "さんま を 焼く"

    def test_empty_after_normalization_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [{"id": "p1", "source_ja": "   ", "target_zh": "烤"}])
        with pytest.raises(CorpusError, match="empty"):
            load_pairs(path)

    def test_roundtrip_save_load(self, tmp_path, tiny_kb):
        path = tmp_path / "out.jsonl"
        save_pairs(tiny_kb, path)
        again = load_pairs(path)
        assert again.pairs == tiny_kb.pairs


class TestDedup:
    def test_whitespace_variant_removed(self):
        a = make_pair("a", "さんまを焼く男", "烤秋刀鱼的男人")
        b = make_pair("b", "彼が書いた手紙", "他写的信")
        a2 = make_pair("a2", " さんまを焼く男　", " 烤秋刀鱼的男人 ")
        cleaned, removed = dedup_and_clean(Corpus(pairs=(a, b, a2)))
        assert cleaned.ids() == ["a", "b"]
        assert removed == ["a2"]

    def test_no_duplicates_identity(self, tiny_kb):
        cleaned, removed = dedup_and_clean(tiny_kb)
        assert cleaned.pairs == tiny_kb.pairs
        assert removed == []

    def test_empty_corpus(self):
        cleaned, removed = dedup_and_clean(Corpus(pairs=()))
        assert len(cleaned) == 0 and removed == []

    def test_idempotent(self, tiny_kb):
        once, _ = dedup_and_clean(tiny_kb)
        twice, removed = dedup_and_clean(once)
        assert twice.pairs == once.pairs and removed == []


class TestDisjoint:
    def test_planted_exact_copy(self, tiny_test, tiny_kb):
        kb = Corpus(pairs=tiny_kb.pairs + (make_pair("kbX", "魚を焼く女", "烤鱼的女人"),))
        report = check_disjoint(tiny_test, kb)
        assert ("t1", "kbX") in report.exact_matches
        assert not report.is_clean()

    def test_disjoint_corpora_clean(self, tiny_test, tiny_kb):
        assert check_disjoint(tiny_test, tiny_kb).is_clean()

    def test_inserted_space_is_near_match(self, tiny_test, tiny_kb):
        kb = Corpus(pairs=tiny_kb.pairs + (make_pair("kbY", "魚を焼 く女", "烤鱼的女人"),))
        report = check_disjoint(tiny_test, kb)
        assert ("t1", "kbY", "whitespace-insensitive match") in report.near_matches
        assert report.exact_matches == ()

    def test_punctuation_variant_is_near_match(self, tiny_test, tiny_kb):
        kb = Corpus(pairs=tiny_kb.pairs + (make_pair("kbZ", "魚を焼く、女。", "烤鱼的女人"),))
        report = check_disjoint(tiny_test, kb)
        reasons = [m[2] for m in report.near_matches if m[0] == "t1"]
        assert reasons == ["whitespace/punctuation-insensitive match"]

    def test_self_check_reports_every_pair_exact(self, tiny_kb):
        report = check_disjoint(tiny_kb, tiny_kb)
        assert {(a, b) for a, b in report.exact_matches} == {(p, p) for p in tiny_kb.ids()}


class TestSubset:
    def test_size_zero(self, tiny_kb):
        sub = subset(tiny_kb, 0, seed=7)
        assert len(sub) == 0

    def test_nested_prefixes(self, tiny_kb):
        small = subset(tiny_kb, 2, seed=7)
        large = subset(tiny_kb, 4, seed=7)
        assert large.pairs[:2] == small.pairs

    def test_nested_across_paper_sizes(self):
        pairs = tuple(make_pair(f"p{i}", f"文{i}です", f"句{i}") for i in range(2000))
        kb = Corpus(pairs=pairs)
        sizes = [0, 100, 200, 500, 1000, 2000]
        subs = [subset(kb, s, seed=13) for s in sizes]
        for smaller, larger in zip(subs, subs[1:]):
            assert larger.pairs[: len(smaller)] == smaller.pairs

    def test_oversize_rejected(self, tiny_kb):
        with pytest.raises(CorpusError):
            subset(tiny_kb, 6, seed=7)

    def test_deterministic(self, tiny_kb):
        assert subset(tiny_kb, 3, seed=11).pairs == subset(tiny_kb, 3, seed=11).pairs

    def test_seed_changes_order(self):
        pairs = tuple(make_pair(f"p{i}", f"文{i}です", f"句{i}") for i in range(50))
        kb = Corpus(pairs=pairs)
        assert subset(kb, 50, seed=1).ids() != subset(kb, 50, seed=2).ids()


def test_normalize_text_nfc():
    # decomposed katakana GA (カ + combining dakuten) composes under NFC
    assert normalize_text("ガ") == "ガ"

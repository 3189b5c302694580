import json

import pytest

from ragmt.analysis import NmccType
from ragmt.generation import (
    CopyStub,
    FixedStub,
    GenerationError,
    RunLog,
    TranslationRecord,
    translate,
)
from ragmt.promptgen import render_prompt

from .test_promptgen import hits_for


@pytest.fixture
def one_hit_prompt(tiny_kb):
    return render_prompt("魚を焼く女", NmccType.INNER, frozenset(), hits_for(tiny_kb, [1]), tiny_kb)


@pytest.fixture
def zero_hit_prompt(tiny_kb):
    return render_prompt("魚を焼く女", NmccType.INNER, frozenset(), [], tiny_kb)


class TestStubs:
    def test_copy_stub_returns_first_example_target(self, one_hit_prompt):
        record = translate(one_hit_prompt, CopyStub())
        assert record.output_zh == "烤秋刀鱼的男人"

    def test_copy_stub_no_examples(self, zero_hit_prompt):
        record = translate(zero_hit_prompt, CopyStub())
        assert record.output_zh == "无参考"

    def test_copy_stub_picks_rank_one_of_many(self, tiny_kb):
        prompt = render_prompt(
            "魚を焼く女", NmccType.INNER, frozenset(), hits_for(tiny_kb, [2, 3]), tiny_kb
        )
        assert translate(prompt, CopyStub()).output_zh == "烤秋刀鱼的气味"

    def test_fixed_stub(self, one_hit_prompt, zero_hit_prompt):
        backend = FixedStub(text="你好")
        assert translate(one_hit_prompt, backend).output_zh == "你好"
        assert translate(zero_hit_prompt, backend).output_zh == "你好"

    def test_copy_stub_pure_function_of_prompt(self, one_hit_prompt):
        a = translate(one_hit_prompt, CopyStub()).output_zh
        b = translate(one_hit_prompt, CopyStub()).output_zh
        assert a == b


class TestRetries:
    def test_transport_failures_retried_then_raise(self, zero_hit_prompt):
        calls = []

        class Flaky:
            kind = "flaky"
            model_id = "flaky"

            def generate(self, prompt_text):
                calls.append(1)
                raise ConnectionError("nope")

            def descriptor(self):
                return {"kind": self.kind, "model_id": self.model_id, "params": {}}

        with pytest.raises(GenerationError) as err:
            translate(zero_hit_prompt, Flaky(), max_retries=3)
        assert len(calls) == 3
        assert len(err.value.attempts) == 3

    def test_recovery_after_failure(self, zero_hit_prompt):
        state = {"n": 0}

        class Flaky:
            kind = "flaky"
            model_id = "flaky"

            def generate(self, prompt_text):
                state["n"] += 1
                if state["n"] < 3:
                    raise ConnectionError("nope")
                return "好"

            def descriptor(self):
                return {"kind": self.kind, "model_id": self.model_id, "params": {}}

        record = translate(zero_hit_prompt, Flaky(), max_retries=3)
        assert record.output_zh == "好"
        assert record.attempt_count == 3

    def test_empty_output_exhausts_retries(self, zero_hit_prompt):
        with pytest.raises(GenerationError, match="failed after"):
            translate(zero_hit_prompt, FixedStub(text="   "), max_retries=2)

    def test_output_trimmed(self, zero_hit_prompt):
        assert translate(zero_hit_prompt, FixedStub(text=" 你好\n")).output_zh == "你好"


class TestRunLog:
    def test_append_and_lookup(self, tmp_path, zero_hit_prompt):
        log = RunLog(tmp_path / "runlog.jsonl")
        record = translate(zero_hit_prompt, CopyStub(), test_id="t1")
        log.append(record, config_hash="abc", size=100)
        assert log.lookup("abc", 100, "t1") is not None
        assert log.lookup("abc", 200, "t1") is None
        assert log.lookup("zzz", 100, "t1") is None

    def test_prompt_recoverable_from_log(self, tmp_path, one_hit_prompt):
        path = tmp_path / "runlog.jsonl"
        record = translate(one_hit_prompt, CopyStub(), test_id="t1")
        RunLog(path).append(record, config_hash="abc", size=0)
        reloaded = RunLog(path)
        stored = reloaded.lookup("abc", 0, "t1")
        rebuilt = TranslationRecord.from_dict(stored)
        assert rebuilt.prompt.rendered == one_hit_prompt.rendered
        assert rebuilt.output_zh == record.output_zh

    def test_log_is_append_only_jsonl(self, tmp_path, zero_hit_prompt):
        path = tmp_path / "runlog.jsonl"
        log = RunLog(path)
        for i in range(3):
            record = translate(zero_hit_prompt, CopyStub(), test_id=f"t{i}")
            log.append(record, config_hash="abc", size=0)
        lines = path.read_text(encoding="utf-8").strip().splitlines()
        assert len(lines) == 3
        assert all(json.loads(line)["config_hash"] == "abc" for line in lines)

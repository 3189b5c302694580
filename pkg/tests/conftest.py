import pytest

from ragmt.analysis import ScriptedStub
from ragmt.corpus import Corpus, CorpusRole, PairMeta, SentencePair


def make_pair(pid, jp, zh, **meta):
    return SentencePair(id=pid, source_ja=jp, target_zh=zh, meta=PairMeta(**meta))


@pytest.fixture
def tiny_kb():
    pairs = (
        make_pair("kb1", "さんまを焼く男", "烤秋刀鱼的男人"),
        make_pair("kb2", "さんまを焼く匂い", "烤秋刀鱼的气味"),
        make_pair("kb3", "彼が書いた手紙", "他写的信"),
        make_pair("kb4", "雨が降る日", "下雨的日子"),
        make_pair("kb5", "本を読む学生", "读书的学生"),
    )
    return Corpus(pairs=pairs, role=CorpusRole.KNOWLEDGE_BASE)


@pytest.fixture
def tiny_test():
    pairs = (
        make_pair("t1", "魚を焼く女", "烤鱼的女人"),
        make_pair("t2", "子供が遊ぶ公園", "孩子们玩耍的公园"),
    )
    return Corpus(pairs=pairs, role=CorpusRole.TEST_SET)


@pytest.fixture
def stub_backend():
    return ScriptedStub()

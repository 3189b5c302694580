"""Synthetic corpora for hermetic end-to-end runs.

The generator builds a test set and a knowledge base with a known retrieval
structure: every test sentence has exactly one planted near-duplicate KB pair
(one character substituted, so the contamination gate still passes) whose
embedding is strictly closer than any other KB entry, and whose target equals
the test reference. All other targets share only a fixed three-character
prefix with the references, so with the copy-stub generator every wrong
retrieval scores the same and the condition mean depends only on how many
near-duplicates the knowledge-base prefix covers. That makes mean BLEU a
deterministic, non-decreasing function of knowledge-base size.
"""

from __future__ import annotations

import random

import numpy as np

from ragmt.corpus import Corpus, CorpusRole, PairMeta, SentencePair, check_disjoint
from ragmt.generation import NO_REFERENCE_OUTPUT
from ragmt.retrieval import MockEncoder

_HIRAGANA = [chr(c) for c in range(0x3042, 0x3094)]
_KATAKANA = [chr(c) for c in range(0x30A2, 0x30F4)]
# Target character pools; disjoint from each other and from the
# no-reference marker so unrelated outputs share only the common prefix.
_REF_POOL = [chr(0x4E00 + i) for i in range(450)]
_FILLER_POOL = [chr(0x5000 + i) for i in range(400)]
_TARGET_PREFIX = NO_REFERENCE_OUTPUT  # three characters
_REF_TAIL = 9


def _rand_string(rng: random.Random, pool: list[str], length: int) -> str:
    return "".join(rng.choice(pool) for _ in range(length))


def _near_duplicate(rng: random.Random, text: str, pool: list[str]) -> str:
    """Substitute one character so the pair evades exact and
    whitespace/punctuation-insensitive equality but stays embedding-close."""
    pos = rng.randrange(len(text))
    replacement = rng.choice([c for c in pool if c != text[pos]])
    return text[:pos] + replacement + text[pos + 1 :]


def make_synthetic_corpora(
    n_test: int = 50,
    n_kb: int = 2000,
    seed: int = 97,
    encoder_dim: int = 64,
    encoder_seed: int = 0,
    verify: bool = True,
) -> tuple[Corpus, Corpus]:
    """Build (test set, knowledge base) with the planted-duplicate structure.

    With verify=True the construction properties are checked outright: the
    corpora pass the contamination gate and each test sentence's planted
    duplicate is its strict nearest neighbor under the mock encoder.
    """
    if n_kb < n_test:
        raise ValueError("knowledge base must hold one near-duplicate per test sentence")
    if n_test * _REF_TAIL > len(_REF_POOL):
        raise ValueError("reference pool too small for disjoint per-sentence tails")
    rng = random.Random(seed)

    test_pairs = []
    dup_pairs = []
    for i in range(n_test):
        source = _rand_string(rng, _HIRAGANA, rng.randint(12, 16))
        tail = _REF_POOL[i * _REF_TAIL : (i + 1) * _REF_TAIL]
        target = _TARGET_PREFIX + "".join(tail)
        test_pairs.append(
            SentencePair(
                id=f"t{i:03d}",
                source_ja=source,
                target_zh=target,
                meta=PairMeta(genre="synthetic", work="testset"),
            )
        )
        dup_pairs.append(
            SentencePair(
                id=f"d{i:03d}",
                source_ja=_near_duplicate(rng, source, _HIRAGANA),
                target_zh=target,
                meta=PairMeta(genre="synthetic", work="planted-duplicate"),
            )
        )

    filler_pairs = []
    for j in range(n_kb - n_test):
        source = _rand_string(rng, _KATAKANA, rng.randint(12, 16))
        tail = rng.sample(_FILLER_POOL, _REF_TAIL)
        filler_pairs.append(
            SentencePair(
                id=f"f{j:04d}",
                source_ja=source,
                target_zh=_TARGET_PREFIX + "".join(tail),
                meta=PairMeta(genre="synthetic", work="filler"),
            )
        )

    test = Corpus(pairs=tuple(test_pairs), role=CorpusRole.TEST_SET)
    kb = Corpus(pairs=tuple(dup_pairs + filler_pairs), role=CorpusRole.KNOWLEDGE_BASE)

    if verify:
        gate = check_disjoint(test, kb)
        if not gate.is_clean():
            raise RuntimeError(f"synthetic corpora failed the contamination gate: {gate}")
        encoder = MockEncoder(dim=encoder_dim, seed=encoder_seed)
        kb_matrix = np.stack([encoder.encode(p.source_ja) for p in kb.pairs])
        for i, pair in enumerate(test.pairs):
            q = encoder.encode(pair.source_ja)
            distances = np.linalg.norm(kb_matrix - q, axis=1)
            nearest = int(np.argmin(distances))
            if kb.pairs[nearest].id != f"d{i:03d}":
                raise RuntimeError(
                    f"planted duplicate for {pair.id} is not the nearest neighbor "
                    f"(got {kb.pairs[nearest].id})"
                )
            others = np.delete(distances, nearest)
            if not distances[nearest] < others.min():
                raise RuntimeError(f"no strict margin for {pair.id}")
    return test, kb

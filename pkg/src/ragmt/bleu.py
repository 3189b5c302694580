"""Character-level sentence BLEU and knowledge-base-size gain arithmetic.

Scoring protocol: Chinese is tokenized at the character level (whitespace
dropped, case preserved), each sentence is scored with 1-4-gram modified
precisions and a brevity penalty on the 0-100 scale, and per-size results are
macro-averaged over the test set.

Sentence-level scoring needs a smoothing rule for orders with zero matches.
The rule pinned here: the numerator of any order n >= 2 with zero clipped
matches is replaced by epsilon (default 0.1) before dividing by the
denominator max(len(hyp) - n + 1, 1); a zero unigram numerator yields score 0
outright. The epsilon in force is recorded in every score so reports remain
comparable only within one setting.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from statistics import fmean
from typing import Sequence

from ragmt.corpus import normalize_text

MAX_ORDER = 4
DEFAULT_EPSILON = 0.1


def tokenize_chars(text: str) -> list[str]:
    """One token per non-whitespace Unicode character, NFC-normalized, cased."""
    normalized = normalize_text(text)
    return [ch for ch in normalized if not ch.isspace()]


@dataclass(frozen=True)
class BleuScore:
    score: float
    precisions: tuple[float, float, float, float]
    bp: float
    hyp_len: int
    ref_len: int
    smoothing_applied: bool
    epsilon: float = DEFAULT_EPSILON

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "precisions": list(self.precisions),
            "bp": self.bp,
            "hyp_len": self.hyp_len,
            "ref_len": self.ref_len,
            "smoothing_applied": self.smoothing_applied,
            "epsilon": self.epsilon,
        }


@dataclass(frozen=True)
class GainRow:
    """One row of the size-sweep summary table. Gains are None on the
    size-0 baseline row."""

    size: int
    mean_bleu: float
    abs_gain: float | None = None
    rel_gain_pct: float | None = None

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "mean_bleu": self.mean_bleu,
            "abs_gain": self.abs_gain,
            "rel_gain_pct": self.rel_gain_pct,
        }


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def sentence_bleu(
    hyp: Sequence[str],
    ref: Sequence[str],
    epsilon: float = DEFAULT_EPSILON,
) -> BleuScore:
    """Score one hypothesis against one reference (token sequences).

    Modified n-gram precisions are clipped against reference counts; the
    brevity penalty is exp(1 - r/c) for hypotheses shorter than the
    reference, 1 otherwise.
    """
    if not ref:
        raise ValueError("reference must be non-empty")
    c, r = len(hyp), len(ref)

    precisions: list[float] = []
    smoothed = False
    for n in range(1, MAX_ORDER + 1):
        denom = max(c - n + 1, 1)
        hyp_counts = _ngram_counts(hyp, n)
        ref_counts = _ngram_counts(ref, n)
        matches = sum(min(count, ref_counts[g]) for g, count in hyp_counts.items())
        if matches == 0:
            if n == 1:
                precisions.append(0.0)
            else:
                precisions.append(epsilon / denom)
                smoothed = True
        else:
            precisions.append(matches / denom)

    # c == 0 would make 1 - r/c undefined; the unigram precision is 0 there
    # anyway, so the penalty only needs to stay finite and in (0, 1].
    if c >= r:
        bp = 1.0
    else:
        bp = math.exp(1.0 - r / max(c, 1))

    if precisions[0] == 0.0:
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(fmean(math.log(p) for p in precisions))

    return BleuScore(
        score=score,
        precisions=(precisions[0], precisions[1], precisions[2], precisions[3]),
        bp=bp,
        hyp_len=c,
        ref_len=r,
        smoothing_applied=smoothed,
        epsilon=epsilon,
    )


def score_texts(hyp_text: str, ref_text: str, epsilon: float = DEFAULT_EPSILON) -> BleuScore:
    """Convenience wrapper: character-tokenize both sides, then score."""
    return sentence_bleu(tokenize_chars(hyp_text), tokenize_chars(ref_text), epsilon)


def macro_average(scores: Sequence[float]) -> float:
    """Arithmetic mean of per-sentence scores."""
    if not scores:
        raise ValueError("cannot average an empty score list")
    return fmean(scores)


def gains(mean: float, baseline_mean: float) -> tuple[float, float]:
    """Absolute and relative (%) gain of a condition mean over the size-0
    baseline mean."""
    if baseline_mean <= 0:
        raise ValueError(f"baseline mean must be positive, got {baseline_mean}")
    abs_gain = mean - baseline_mean
    return abs_gain, abs_gain / baseline_mean * 100.0


def gain_rows(sizes: Sequence[int], means: Sequence[float]) -> list[GainRow]:
    """Build the summary rows for a sweep, baseline (size 0) first."""
    if len(sizes) != len(means):
        raise ValueError("sizes and means must align")
    if not sizes or sizes[0] != 0:
        raise ValueError("the first row must be the size-0 baseline")
    rows = [GainRow(size=sizes[0], mean_bleu=means[0])]
    for size, mean in zip(sizes[1:], means[1:]):
        abs_gain, rel_pct = gains(mean, means[0])
        rows.append(GainRow(size=size, mean_bleu=mean, abs_gain=abs_gain, rel_gain_pct=rel_pct))
    return rows

"""Corpus-level BLEU-4, ROUGE-4 and NIST-4, single reference per segment.

All three scorers take parallel lists of token sequences. BLEU and
ROUGE return values in [0, 1] (conventionally displayed x100); NIST is
an information sum and is reported as-is.

Definitions implemented:

BLEU-4: pooled modified n-gram precision for n=1..4 (match counts
clipped per segment by the reference count), geometric mean, times the
brevity penalty exp(1 - r/c) when c <= r. Any zero pooled precision
zeroes the score; there is no smoothing. An order with no hypothesis
n-grams at all counts as zero precision.

ROUGE-4: pooled clipped 4-gram recall. References shorter than four
tokens contribute nothing to the denominator; if no reference reaches
four tokens the score is undefined and raises.

NIST-4: sum over n=1..4 of (information-weighted clipped matches) /
(hypothesis n-gram count), times the NIST brevity penalty
exp(beta * ln^2(min(1, c/r))) with beta = ln(0.5)/ln^2(2/3).
Information weights come from the reference side of the corpus:
info(w1..wn) = log2(count(w1..wn-1) / count(w1..wn)), with the order-1
prefix count taken to be the total reference token count.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _check_corpus(hypotheses, references):
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise ValueError("empty corpus")


def bleu4(hypotheses: list[list[str]], references: list[list[str]]) -> float:
    _check_corpus(hypotheses, references)
    matched = [0] * 5        # index by n
    total = [0] * 5
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, 5):
            hyp_counts = _ngrams(hyp, n)
            ref_counts = _ngrams(ref, n)
            matched[n] += sum(min(c, ref_counts[g]) for g, c in hyp_counts.items())
            total[n] += max(0, len(hyp) - n + 1)
    if hyp_len == 0:
        return 0.0
    precisions = [matched[n] / total[n] if total[n] else 0.0 for n in range(1, 5)]
    if any(p == 0.0 for p in precisions):
        return 0.0
    log_mean = sum(math.log(p) for p in precisions) / 4.0
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return bp * math.exp(log_mean)


def rouge4(hypotheses: list[list[str]], references: list[list[str]]) -> float:
    _check_corpus(hypotheses, references)
    matched = 0
    total = 0
    for hyp, ref in zip(hypotheses, references):
        ref_counts = _ngrams(ref, 4)
        total += sum(ref_counts.values())
        hyp_counts = _ngrams(hyp, 4)
        matched += sum(min(c, hyp_counts[g]) for g, c in ref_counts.items())
    if total == 0:
        raise ValueError("no reference reaches four tokens; ROUGE-4 undefined")
    return matched / total


_NIST_BETA = math.log(0.5) / math.log(2.0 / 3.0) ** 2


def nist4(hypotheses: list[list[str]], references: list[list[str]]) -> float:
    _check_corpus(hypotheses, references)
    # reference-side n-gram statistics drive the information weights
    ref_counts: list[Counter] = [Counter() for _ in range(5)]
    total_ref_tokens = 0
    for ref in references:
        total_ref_tokens += len(ref)
        for n in range(1, 5):
            ref_counts[n].update(_ngrams(ref, n))

    def info(gram: tuple) -> float:
        n = len(gram)
        denom = ref_counts[n][gram]
        numer = total_ref_tokens if n == 1 else ref_counts[n - 1][gram[:-1]]
        if denom == 0 or numer == 0:
            return 0.0
        return math.log2(numer / denom)

    weighted = [0.0] * 5
    total = [0] * 5
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, 5):
            seg_ref = _ngrams(ref, n)
            for g, c in _ngrams(hyp, n).items():
                m = min(c, seg_ref[g])
                if m:
                    weighted[n] += m * info(g)
            total[n] += max(0, len(hyp) - n + 1)
    if hyp_len == 0:
        return 0.0
    score = sum(weighted[n] / total[n] for n in range(1, 5) if total[n])
    ratio = min(1.0, hyp_len / ref_len) if ref_len else 1.0
    bp = math.exp(_NIST_BETA * math.log(ratio) ** 2)
    return bp * score


@dataclass
class EvalReport:
    """The three scores plus the corpus sizes they were computed over."""

    bleu4: float
    rouge4: float
    nist4: float
    segments: int
    hyp_tokens: int
    ref_tokens: int

    def __str__(self) -> str:
        return (f"BLEU-4 {100 * self.bleu4:.2f} | ROUGE-4 {100 * self.rouge4:.2f} | "
                f"NIST-4 {self.nist4:.2f} ({self.segments} segments)")


def evaluate_corpus(hypotheses: list[list[str]], references: list[list[str]]) -> EvalReport:
    return EvalReport(
        bleu4=bleu4(hypotheses, references),
        rouge4=rouge4(hypotheses, references),
        nist4=nist4(hypotheses, references),
        segments=len(hypotheses),
        hyp_tokens=sum(len(h) for h in hypotheses),
        ref_tokens=sum(len(r) for r in references),
    )


def read_token_lines(path) -> list[list[str]]:
    """One whitespace-tokenized sentence per line."""
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh.read().splitlines()]

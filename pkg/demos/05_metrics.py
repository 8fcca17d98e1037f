"""The three corpus metrics, cross-checked against hand counts.

bleu4, rouge4, and nist4 are corpus-level: n-gram statistics pool over
all segments before the final ratio. This script works one small fixture
per metric by hand, then shows the boundary behaviour (identical and
disjoint corpora) and the combined report helper.
"""

import math

from tabletext.metrics import bleu4, evaluate_corpus, nist4, rouge4

hyp = [["the", "cat", "sat", "on", "the", "mat"]]
ref = [["the", "cat", "sat", "on", "a", "mat"]]

# BLEU-4: modified n-gram precisions with a brevity penalty (here the
# lengths match, so no penalty). Counted by hand:
# 1-grams: hyp has the*2 cat sat on mat; ref caps 'the' at 1 -> 5/6.
# 2-grams: of the-cat cat-sat sat-on on-the the-mat only the first
#          three appear in the reference -> 3/5.
# 3-grams: the-cat-sat and cat-sat-on match -> 2/4.
# 4-grams: the-cat-sat-on matches -> 1/3.
expected = (5 / 6 * 3 / 5 * 2 / 4 * 1 / 3) ** 0.25
got = bleu4(hyp, ref)
print("== BLEU-4 on one segment")
print(f"  hand count: {expected:.12f}")
print(f"  bleu4():    {got:.12f}   (match: {abs(got - expected) < 1e-12})")

# ROUGE-4 is 4-gram recall against the reference.
hyp_r = [["a", "b", "c", "d", "e"]]
ref_r = [["a", "b", "c", "d", "x"]]
# ref 4-grams: abcd, bcdx; hyp contains abcd only -> 1/2.
print("\n== ROUGE-4 recall")
print(f"  hand count: {1 / 2:.12f}")
print(f"  rouge4():   {rouge4(hyp_r, ref_r):.12f}")

# NIST-4 weights each matched n-gram by its information in the
# reference corpus: log2(count of the (n-1)-gram prefix / count of the
# n-gram), with total token count as the 1-gram "prefix". On the
# identical pair below: 1-grams give (2*1 + 2 + 2)/4, 2-grams give
# (1 + 0 + 1)/3, and orders 3 and 4 carry zero information.
hyp_n = [["a", "b", "a", "c"]]
ref_n = [["a", "b", "a", "c"]]
expected_n = 6 / 4 + 2 / 3
print("\n== NIST-4 on identical segments (no brevity penalty)")
print(f"  hand count: {expected_n:.12f}")
print(f"  nist4():    {nist4(hyp_n, ref_n):.12f}")

print("\n== boundary behaviour")
same = [["x", "y", "z", "w", "v"]]
print(f"  identical corpora: BLEU {bleu4(same, same)}, "
      f"ROUGE {rouge4(same, same)}")
disj_h = [["a", "b", "c", "d"]]
disj_r = [["p", "q", "r", "s"]]
print(f"  disjoint corpora:  BLEU {bleu4(disj_h, disj_r)}, "
      f"ROUGE {rouge4(disj_h, disj_r)}")

# Corpus pooling: statistics are summed over segments, not averaged,
# so one segment's 4-gram matches can carry another that has none.
hyps = [["the", "cat", "sat"], ["a", "dog", "ran", "far", "away", "today"]]
refs = [["the", "cat", "sat"], ["a", "dog", "ran", "far", "away", "fast"]]
print("\n== pooled report over two segments")
print(f"  {evaluate_corpus(hyps, refs)}")

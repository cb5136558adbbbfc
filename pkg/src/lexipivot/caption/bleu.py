"""Corpus-level BLEU-4 with brevity penalty and clipped counts, no smoothing."""

from __future__ import annotations

import math
from collections import Counter

from ..errors import InputError


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidates, references) -> float:
    """Corpus BLEU in [0, 100].

    `candidates` is a list of token sequences; `references[i]` is the list
    of reference token sequences for candidate i. Precision counts are
    clipped against the per-reference maximum; any empty n-gram precision
    up to n=4 yields a score of 0 (smoothing is off).
    """
    candidates = list(candidates)
    references = list(references)
    if not candidates or len(candidates) != len(references):
        raise InputError("need equal, non-empty candidate and reference lists")
    if any(not refs for refs in references):
        raise InputError("every candidate needs at least one reference")

    matched = [0] * 4
    total = [0] * 4
    cand_len = 0
    ref_len = 0
    for cand, refs in zip(candidates, references):
        cand = list(cand)
        refs = [list(r) for r in refs]
        cand_len += len(cand)
        # closest reference length; ties go to the shorter reference
        ref_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for n in range(1, 5):
            counts = _ngrams(cand, n)
            if not counts:
                continue
            max_ref = Counter()
            for r in refs:
                for gram, c in _ngrams(r, n).items():
                    if c > max_ref[gram]:
                        max_ref[gram] = c
            total[n - 1] += sum(counts.values())
            matched[n - 1] += sum(min(c, max_ref[gram]) for gram, c in counts.items())

    if cand_len == 0 or any(t == 0 for t in total) or any(m == 0 for m in matched):
        return 0.0
    log_precision = sum(math.log(m / t) for m, t in zip(matched, total)) / 4.0
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return 100.0 * brevity * math.exp(log_precision)

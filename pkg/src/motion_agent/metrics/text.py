"""Corpus-level captioning metrics: BLEU-n, ROUGE-L, CIDEr.

BLEU and ROUGE-L are reported on the 0-100 percent scale; CIDEr on its usual
0-10 scale. Tokenization matches the corpus caption normalization. BERT-style
scoring is exposed as a protocol only; it needs a pretrained encoder that this
package does not ship.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Protocol

from ..data.synth import normalize_caption
from ..errors import ValidationError


class BertScorer(Protocol):
    """Pluggable interface for embedding-based caption scoring."""

    def score(self, candidates: list[str], references: list[list[str]]) -> float: ...


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _check(candidates, references):
    if len(candidates) != len(references):
        raise ValidationError("need one reference list per candidate")
    for c in candidates:
        if not c.strip():
            raise ValidationError("empty candidate caption")
    for refs in references:
        if not refs:
            raise ValidationError("every candidate needs at least one reference")


def bleu(candidates: list[str], references: list[list[str]], n: int = 4) -> float:
    """Corpus BLEU-n with brevity penalty and multi-reference clipping, in percent."""
    _check(candidates, references)
    clipped = [0] * n
    totals = [0] * n
    cand_len = 0
    ref_len = 0
    for cand, refs in zip(candidates, references):
        ct = normalize_caption(cand)
        rts = [normalize_caption(r) for r in refs]
        cand_len += len(ct)
        ref_len += min((abs(len(r) - len(ct)), len(r)) for r in rts)[1]   # closest ref length
        for k in range(1, n + 1):
            cg = _ngrams(ct, k)
            max_ref = Counter()
            for rt in rts:
                rg = _ngrams(rt, k)
                for g, cnt in rg.items():
                    max_ref[g] = max(max_ref[g], cnt)
            totals[k - 1] += sum(cg.values())
            clipped[k - 1] += sum(min(cnt, max_ref[g]) for g, cnt in cg.items())
    if any(t == 0 for t in totals) or any(c == 0 for c in clipped):
        return 0.0
    log_prec = sum(math.log(c / t) for c, t in zip(clipped, totals)) / n
    bp = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / max(cand_len, 1))
    return 100.0 * bp * math.exp(log_prec)


def _lcs_len(a: list[str], b: list[str]) -> int:
    dp = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, start=1):
            cur = dp[j]
            dp[j] = prev + 1 if x == y else max(dp[j], dp[j - 1])
            prev = cur
    return dp[len(b)]


def rouge_l(candidates: list[str], references: list[list[str]], beta: float = 1.2) -> float:
    """Mean per-sentence ROUGE-L F-measure (best reference), in percent."""
    _check(candidates, references)
    scores = []
    for cand, refs in zip(candidates, references):
        ct = normalize_caption(cand)
        best = 0.0
        for ref in refs:
            rt = normalize_caption(ref)
            lcs = _lcs_len(ct, rt)
            if lcs == 0:
                continue
            prec = lcs / len(ct)
            rec = lcs / len(rt)
            best = max(best, (1 + beta**2) * prec * rec / (rec + beta**2 * prec))
        scores.append(best)
    return 100.0 * sum(scores) / len(scores)


def cider(candidates: list[str], references: list[list[str]], max_n: int = 4) -> float:
    """TF-IDF n-gram consensus (n = 1..max_n averaged), scaled by 10.

    Document frequencies come from the reference corpus; per-n cosine similarity
    is averaged over each candidate's references.
    """
    _check(candidates, references)
    m = len(candidates)
    doc_freq = [Counter() for _ in range(max_n)]
    for refs in references:
        seen = [set() for _ in range(max_n)]
        for ref in refs:
            rt = normalize_caption(ref)
            for k in range(1, max_n + 1):
                seen[k - 1].update(_ngrams(rt, k).keys())
        for k in range(max_n):
            for g in seen[k]:
                doc_freq[k][g] += 1

    def tfidf(tokens: list[str], k: int) -> dict:
        counts = _ngrams(tokens, k + 1)
        total = sum(counts.values())
        vec = {}
        for g, cnt in counts.items():
            df = max(doc_freq[k][g], 1)
            vec[g] = (cnt / total) * math.log(m / df) if total else 0.0
        return vec

    def cosine(u: dict, v: dict) -> float:
        nu = math.sqrt(sum(x * x for x in u.values()))
        nv = math.sqrt(sum(x * x for x in v.values()))
        if nu == 0 or nv == 0:
            return 0.0
        dot = sum(u[g] * v.get(g, 0.0) for g in u)
        return dot / (nu * nv)

    score = 0.0
    for cand, refs in zip(candidates, references):
        ct = normalize_caption(cand)
        per_n = []
        for k in range(max_n):
            cv = tfidf(ct, k)
            sims = [cosine(cv, tfidf(normalize_caption(r), k)) for r in refs]
            per_n.append(sum(sims) / len(sims))
        score += sum(per_n) / max_n
    return 10.0 * score / m

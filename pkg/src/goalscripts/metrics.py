"""Evaluation suite: accuracy, rank correlation, recall@k, NDCG@k, and
edit-based human-evaluation ratios.

Matching between predicted and reference steps is exact text equality
(after the corpus layer's NFC + trim normalization); no fuzzy credit.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

from .pipeline import ConstructedScript
from .task import TaskInstance


class MetricError(ValueError):
    pass


def _comb2(n: int) -> int:
    return n * (n - 1) // 2


def accuracy(predicted: list[str], gold: list[str], l: int) -> float:
    """Fraction of the l predicted steps that appear in the reference.

    Duplicate reference texts are matched as a multiset.
    """
    if len(predicted) != l or l < 1:
        raise MetricError(f"|predicted|={len(predicted)} must equal l={l} >= 1")
    remaining = Counter(gold)
    hits = 0
    for step in predicted:
        if remaining[step] > 0:
            remaining[step] -= 1
            hits += 1
    return hits / l


def ordered_intersection(a: list[str], b: list[str]) -> list[str]:
    """Elements appearing in both lists (multiset), in the order of `a`."""
    available = Counter(b)
    out = []
    for x in a:
        if available[x] > 0:
            available[x] -= 1
            out.append(x)
    return out


def _concordance(order_a: list[str], order_b: list[str]) -> tuple[int, int]:
    """Concordant/discordant pair counts between two orderings of one multiset.

    Duplicate texts are aligned occurrence-by-occurrence; pairs of equal
    texts are neither concordant nor discordant.
    """
    pos_b: dict[str, list[int]] = {}
    for i, x in enumerate(order_b):
        pos_b.setdefault(x, []).append(i)
    taken: dict[str, int] = {}
    ranks = []
    for x in order_a:
        k = taken.get(x, 0)
        ranks.append(pos_b[x][k])
        taken[x] = k + 1
    nc = nd = 0
    for i in range(len(ranks)):
        for j in range(i + 1, len(ranks)):
            if order_a[i] == order_a[j]:
                continue
            if ranks[i] < ranks[j]:
                nc += 1
            elif ranks[i] > ranks[j]:
                nd += 1
    return nc, nd


def script_tau(predicted: list[str], gold: list[str], l: int,
               overlap_denominator: bool = False) -> float:
    """Rank correlation between the overlap of prediction and reference.

    The overlap is taken in each list's own order; the denominator is
    C(l,2) by default, or C(m,2) over the m overlapping steps when
    overlap_denominator is set.
    """
    if len(predicted) != l:
        raise MetricError(f"|predicted|={len(predicted)} must equal l={l}")
    if l < 2:
        raise MetricError("tau undefined for l < 2")
    inter_pred = ordered_intersection(predicted, gold)
    inter_gold = ordered_intersection(gold, predicted)
    nc, nd = _concordance(inter_pred, inter_gold)
    if overlap_denominator:
        m = len(inter_pred)
        if m < 2:
            raise MetricError("tau undefined for overlap < 2")
        denom = _comb2(m)
    else:
        denom = _comb2(l)
    return (nc - nd) / denom


def recall_at_k(ranked: list[str], gold: list[str], k: int) -> float:
    """Hits in the top k divided by k (the denominator is k, not |gold|).

    Rankings shorter than k are scored over their full length.
    """
    if k < 1:
        raise MetricError(f"k must be >= 1, got {k}")
    effective_k = min(k, len(ranked))
    if effective_k == 0:
        raise MetricError("empty ranking")
    remaining = Counter(gold)
    hits = 0
    for step in ranked[:effective_k]:
        if remaining[step] > 0:
            remaining[step] -= 1
            hits += 1
    return hits / effective_k


def ndcg_at_k(ranked: list[str], gold: list[str], k: int, l: int) -> float:
    """Binary-relevance NDCG: gain 1 for steps present in the reference.

    Each reference occurrence can be claimed at most once, so repeated
    texts in the ranking never push the score past 1. The ideal ranking
    places all l relevant items first, so the normalizer sums
    1/log2(i+1) for i up to min(l, k).
    """
    if not gold:
        raise MetricError("empty reference")
    if k < 1 or l < 1:
        raise MetricError("k and l must be >= 1")
    remaining = Counter(gold)
    dcg = 0.0
    for i, step in enumerate(ranked[:k]):
        if remaining[step] > 0:
            remaining[step] -= 1
            dcg += 1.0 / math.log2(i + 2)
    idcg = sum(1.0 / math.log2(i + 2) for i in range(min(l, k)))
    return dcg / idcg


def ordering_tau(model_order: list[str], gold: list[str]) -> float:
    """Rank correlation between a model's ordering of the reference steps
    and the reference order; the input must be a permutation of the gold."""
    if Counter(model_order) != Counter(gold):
        raise MetricError("model ordering is not a permutation of the reference")
    l = len(gold)
    if l < 2:
        raise MetricError("tau undefined for fewer than 2 steps")
    nc, nd = _concordance(model_order, gold)
    return (nc - nd) / _comb2(l)


def perplexity_aggregate(log_likelihood: float, token_count: int) -> float:
    if token_count < 1:
        raise MetricError(f"token count must be >= 1, got {token_count}")
    return math.exp(-log_likelihood / token_count)


def edit_metrics(generated: ConstructedScript, edited_steps: list[str],
                 gold_steps: list[str]) -> dict:
    """Correctness/completeness/orderliness ratios from a human-edited script.

    Edits may only delete or move steps, so the edited script must be a
    sub-multiset of the generated one. Orderliness compares the overlap
    orders with a C(m,2) denominator and is reported as None when fewer
    than 2 steps overlap.
    """
    gen_counts = Counter(generated.steps)
    if Counter(edited_steps) - gen_counts:
        raise MetricError("edited script contains steps absent from the generated one")
    if not generated.steps:
        raise MetricError("generated script is empty")
    if not gold_steps:
        raise MetricError("reference script is empty")

    correctness = len(edited_steps) / len(generated.steps)
    completeness = len(edited_steps) / len(gold_steps)

    inter_edit = ordered_intersection(edited_steps, list(generated.steps))
    inter_gen = ordered_intersection(list(generated.steps), edited_steps)
    m = len(inter_edit)
    if m < 2:
        orderliness = None
    else:
        nc, nd = _concordance(inter_edit, inter_gen)
        orderliness = (nc - nd) / _comb2(m)
    return {
        "correctness": correctness,
        "completeness": completeness,
        "orderliness": orderliness,
    }


@dataclass
class MetricReport:
    per_script: list[dict]
    aggregates: dict[str, float]
    skipped: dict[str, int] = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "per_script": self.per_script,
            "aggregates": self.aggregates,
            "skipped": self.skipped,
        }

    def to_table(self) -> str:
        """Plain-text table of the aggregate numbers."""
        columns = [
            ("Recall@25", "recall@25"),
            ("Recall@50", "recall@50"),
            ("NDCG@25", "ndcg@25"),
            ("NDCG@50", "ndcg@50"),
            ("Ordering tau", "ordering_tau"),
            ("Accuracy", "accuracy"),
            ("Kendall's tau", "tau"),
        ]
        rows = []
        header = []
        values = []
        for label, key in columns:
            if key in self.aggregates:
                header.append(label)
                values.append(f"{self.aggregates[key]:.3f}")
        width = max((len(h) for h in header), default=8)
        rows.append("  ".join(h.rjust(width) for h in header))
        rows.append("  ".join(v.rjust(width) for v in values))
        return "\n".join(rows)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values)


def evaluate_run(
    tasks: list[TaskInstance],
    constructed: list[ConstructedScript],
    ks: tuple[int, ...] = (25, 50),
    rankings: list[list[str]] | None = None,
    model_orderings: list[list[str]] | None = None,
) -> MetricReport:
    """Score a run: per-script metrics and their arithmetic means.

    Rank-based metrics need the full relevance rankings; ordering-module
    evaluation needs the model's orderings of the gold steps. Both are
    optional. Tau is computed only for ordered tasks; scripts where a
    metric is undefined are skipped and counted.
    """
    if not tasks:
        raise MetricError("no tasks to evaluate")
    if len(tasks) != len(constructed):
        raise MetricError(
            f"{len(tasks)} tasks but {len(constructed)} constructed scripts"
        )
    if rankings is not None and len(rankings) != len(tasks):
        raise MetricError("rankings misaligned with tasks")
    if model_orderings is not None and len(model_orderings) != len(tasks):
        raise MetricError("model orderings misaligned with tasks")

    per_script: list[dict] = []
    collected: dict[str, list[float]] = {}
    skipped: dict[str, int] = {}

    def record(row: dict, key: str, value):
        if value is None:
            skipped[key] = skipped.get(key, 0) + 1
            return
        row[key] = value
        collected.setdefault(key, []).append(value)

    for i, (task, script) in enumerate(zip(tasks, constructed)):
        if task.goal != script.goal:
            raise MetricError(f"task/script goal mismatch at index {i}")
        row: dict = {"goal": task.goal}
        pred = list(script.steps)
        gold = list(task.gold)

        if script.mode == "top-l":
            record(row, "accuracy", accuracy(pred, gold, task.length))
        else:
            record(row, "accuracy",
                   accuracy(pred, gold, len(pred)) if pred else None)

        if task.ordered:
            tau = (
                script_tau(pred, gold, len(pred)) if len(pred) >= 2 else None
            )
            record(row, "tau", tau)

        if rankings is not None:
            ranked = rankings[i]
            for k in ks:
                if len(ranked) < k:
                    skipped[f"truncated@{k}"] = skipped.get(f"truncated@{k}", 0) + 1
                record(row, f"recall@{k}", recall_at_k(ranked, gold, k))
                record(row, f"ndcg@{k}", ndcg_at_k(ranked, gold, k, task.length))

        if model_orderings is not None and task.ordered:
            mo = model_orderings[i]
            record(row, "ordering_tau",
                   ordering_tau(mo, gold) if len(gold) >= 2 else None)

        per_script.append(row)

    aggregates = {key: _mean(vals) for key, vals in collected.items()}
    return MetricReport(per_script=per_script, aggregates=aggregates, skipped=skipped)


def save_report(report: MetricReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_record(), f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")

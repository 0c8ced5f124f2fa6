"""Retrieve-then-order script construction and training-data emission.

Construction retrieves candidates ranked by goal-step relevance, keeps the
top l (or everything above a confidence threshold), then orders the kept
steps by pairwise win counts.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass

from .corpus import Corpus
from .scorers import PairOrderer, RelevanceScorer
from .task import TaskInstance

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.95
DEFAULT_PREFILTER_K = 200


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class RankedCandidate:
    text: str
    score: float
    index: int  # position in the original candidate list


@dataclass(frozen=True)
class ConstructedScript:
    goal: str
    steps: tuple[str, ...]
    confidences: tuple[float, ...]
    mode: str  # "top-l" | "threshold"

    def __post_init__(self):
        if len(self.steps) != len(self.confidences):
            raise PipelineError("steps and confidences must be parallel")

    def to_record(self) -> dict:
        return {
            "goal": self.goal,
            "mode": self.mode,
            "steps": [
                {"text": t, "confidence": c}
                for t, c in zip(self.steps, self.confidences)
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ConstructedScript":
        return cls(
            goal=rec["goal"],
            steps=tuple(s["text"] for s in rec["steps"]),
            confidences=tuple(float(s["confidence"]) for s in rec["steps"]),
            mode=rec["mode"],
        )


@dataclass(frozen=True)
class TrainingPair:
    goal: str
    texts: tuple[str, ...]
    label: str  # positive | negative | a-first | b-first

    def to_record(self) -> dict:
        if len(self.texts) == 1:
            return {"goal": self.goal, "step": self.texts[0], "label": self.label}
        return {
            "goal": self.goal,
            "step_a": self.texts[0],
            "step_b": self.texts[1],
            "label": self.label,
        }


def retrieve_steps(
    task: TaskInstance, scorer: RelevanceScorer, prefilter_k: int | None = None
) -> list[RankedCandidate]:
    """Score every candidate and sort decreasingly; ties keep pool order.

    With prefilter_k set, a caller-supplied lexical scorer should be used to
    shrink the pool first; here the cap is applied to this scorer's own
    ranking (used by construct's pre-filter hook).
    """
    scored = []
    if hasattr(scorer, "score_relevance_batch"):
        texts = [c.text for c in task.candidates]
        values = scorer.score_relevance_batch(task.goal, texts)
        scored = [
            RankedCandidate(text=t, score=v, index=i)
            for i, (t, v) in enumerate(zip(texts, values))
        ]
    else:
        for i, cand in enumerate(task.candidates):
            scored.append(
                RankedCandidate(
                    text=cand.text,
                    score=scorer.score_relevance(task.goal, cand.text),
                    index=i,
                )
            )
    scored.sort(key=lambda r: (-r.score, r.index))
    if prefilter_k is not None:
        scored = scored[:prefilter_k]
    return scored


def take_top_l(ranked: list[RankedCandidate], l: int) -> list[RankedCandidate]:
    if l < 1:
        raise PipelineError(f"l must be >= 1, got {l}")
    if len(ranked) < l:
        raise PipelineError(f"candidate pool of {len(ranked)} smaller than l={l}")
    return ranked[:l]


def take_above_threshold(
    ranked: list[RankedCandidate], threshold: float = DEFAULT_THRESHOLD
) -> list[RankedCandidate]:
    if not 0.0 <= threshold <= 1.0:
        raise PipelineError(f"threshold must be in [0,1], got {threshold}")
    return [r for r in ranked if r.score > threshold]


def order_steps(
    goal: str, steps: list[RankedCandidate], orderer: PairOrderer
) -> list[RankedCandidate]:
    """Sort steps by pairwise win counts; ties fall back to retrieval rank.

    Each unordered pair is queried once. A verdict above 0.5 is a win for
    the earlier argument, below 0.5 for the other, exactly 0.5 gives each
    side half a win.
    """
    if not steps:
        return []
    wins = [0.0] * len(steps)
    for i in range(len(steps)):
        for j in range(i + 1, len(steps)):
            verdict = orderer.compare_order(goal, steps[i].text, steps[j].text)
            if verdict > 0.5:
                wins[i] += 1.0
            elif verdict < 0.5:
                wins[j] += 1.0
            else:
                wins[i] += 0.5
                wins[j] += 0.5
    order = sorted(range(len(steps)), key=lambda i: (-wins[i], i))
    return [steps[i] for i in order]


def construct(
    task: TaskInstance,
    relevance_scorer: RelevanceScorer,
    orderer: PairOrderer | None,
    mode: str = "top-l",
    threshold: float = DEFAULT_THRESHOLD,
    prefilter: RelevanceScorer | None = None,
    prefilter_k: int = DEFAULT_PREFILTER_K,
) -> ConstructedScript:
    """Run the full retrieve-then-order construction for one task.

    Ordering runs only when the task is ordered; unordered tasks keep
    retrieval rank order. The optional lexical pre-filter keeps the top
    prefilter_k candidates before the main relevance scorer sees them.
    """
    if mode not in ("top-l", "threshold"):
        raise PipelineError(f"unknown mode {mode!r}")

    work_task = task
    if prefilter is not None:
        kept = retrieve_steps(task, prefilter, prefilter_k=prefilter_k)
        keep_idx = sorted(r.index for r in kept)
        work_task = TaskInstance(
            goal=task.goal,
            length=task.length,
            candidates=tuple(task.candidates[i] for i in keep_idx),
            gold=task.gold,
            ordered=task.ordered,
            language=task.language,
            category=task.category,
        )

    ranked = retrieve_steps(work_task, relevance_scorer)
    if mode == "top-l":
        kept = take_top_l(ranked, task.length)
    else:
        kept = take_above_threshold(ranked, threshold)

    if task.ordered and len(kept) > 1:
        if orderer is None:
            raise PipelineError("ordered task requires an orderer")
        final = order_steps(task.goal, kept, orderer)
    else:
        final = kept

    return ConstructedScript(
        goal=task.goal,
        steps=tuple(r.text for r in final),
        confidences=tuple(r.score for r in final),
        mode=mode,
    )


def emit_inference_training_data(train_corpus: Corpus, seed: int):
    """Yield goal-step pairs: each gold step as positive, plus up to 50
    same-category steps from other scripts as negatives (seeded sampling)."""
    rng = random.Random(seed)
    scripts = train_corpus.train_scripts
    by_category: dict[str, list] = {}
    for s in scripts:
        by_category.setdefault(s.category, []).append(s)

    for script in scripts:
        for step in script.steps:
            yield TrainingPair(goal=script.goal, texts=(step,), label="positive")
        own_texts = set(script.steps)
        pool = [
            step
            for other in by_category.get(script.category, [])
            if other.id != script.id
            for step in other.steps
            if step not in own_texts
        ]
        n = min(50, len(pool))
        if n < 50:
            logger.info(
                "script %s: only %d negatives available in category %r",
                script.id, n, script.category,
            )
        for step in (rng.sample(pool, n) if n else []):
            yield TrainingPair(goal=script.goal, texts=(step,), label="negative")


def emit_ordering_training_data(train_corpus: Corpus, seed: int):
    """Yield every step pair of each ordered script, in a seeded-random
    orientation, labeled with which side comes first."""
    rng = random.Random(seed)
    for script in train_corpus.train_scripts:
        if not script.ordered:
            continue
        steps = script.steps
        for i in range(len(steps)):
            for j in range(i + 1, len(steps)):
                if rng.random() < 0.5:
                    yield TrainingPair(
                        goal=script.goal, texts=(steps[i], steps[j]), label="a-first"
                    )
                else:
                    yield TrainingPair(
                        goal=script.goal, texts=(steps[j], steps[i]), label="b-first"
                    )


def save_training_pairs(pairs, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for pair in pairs:
            f.write(json.dumps(pair.to_record(), ensure_ascii=False, sort_keys=True))
            f.write("\n")


def save_constructed(scripts: list[ConstructedScript], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for script in scripts:
            f.write(json.dumps(script.to_record(), ensure_ascii=False, sort_keys=True))
            f.write("\n")


def load_constructed(path: str) -> list[ConstructedScript]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                out.append(ConstructedScript.from_record(json.loads(line)))
    return out

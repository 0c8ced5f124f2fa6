"""Task instance construction: same-category candidate pools and ESD conversion."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .corpus import Corpus, Script, normalize_text

logger = logging.getLogger(__name__)


class TaskError(ValueError):
    pass


@dataclass(frozen=True)
class CandidateStep:
    text: str
    source_id: str
    category: str = ""


@dataclass(frozen=True)
class TaskInstance:
    """A retrieval-setting problem: pick and order l steps from the pool."""

    goal: str
    length: int
    candidates: tuple[CandidateStep, ...]
    gold: tuple[str, ...]
    ordered: bool
    language: str = ""
    category: str = ""

    def __post_init__(self):
        if self.length != len(self.gold) or self.length < 1:
            raise TaskError(f"length {self.length} != |gold| {len(self.gold)}")
        pool_texts = {c.text for c in self.candidates}
        missing = [g for g in self.gold if g not in pool_texts]
        if missing:
            raise TaskError(f"gold steps missing from candidate pool: {missing[:3]}")

    def to_record(self) -> dict:
        return {
            "goal": self.goal,
            "l": self.length,
            "ordered": self.ordered,
            "language": self.language,
            "category": self.category,
            "gold": list(self.gold),
            "candidates": [
                {"text": c.text, "source_id": c.source_id, "category": c.category}
                for c in self.candidates
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "TaskInstance":
        return cls(
            goal=rec["goal"],
            length=int(rec["l"]),
            candidates=tuple(
                CandidateStep(c["text"], c["source_id"], c.get("category", ""))
                for c in rec["candidates"]
            ),
            gold=tuple(rec["gold"]),
            ordered=bool(rec["ordered"]),
            language=rec.get("language", ""),
            category=rec.get("category", ""),
        )


@dataclass(frozen=True)
class EsdScenario:
    """A scenario with crowd-written event sequence descriptions."""

    name: str
    esds: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.esds:
            raise TaskError(f"scenario {self.name!r} has no ESDs")


def _dedupe(candidates: list[CandidateStep]) -> tuple[CandidateStep, ...]:
    seen = set()
    out = []
    for c in candidates:
        key = (c.text, c.source_id)
        if key in seen:
            continue
        seen.add(key)
        out.append(c)
    return tuple(out)


def build_retrieval_task(script: Script, test_corpus: Corpus) -> TaskInstance:
    """Build a task whose pool is all steps of same-category test-split scripts.

    An empty category pools over all test scripts (non-wikiHow sources).
    """
    if test_corpus.split.get(script.id) != "test":
        raise TaskError(f"script {script.id} is not in the test split")

    test_scripts = test_corpus.test_scripts
    if script.category:
        pool_scripts = [s for s in test_scripts if s.category == script.category]
    else:
        logger.warning(
            "script %s has empty category; pooling over all test scripts", script.id
        )
        pool_scripts = test_scripts

    candidates = [
        CandidateStep(text=step, source_id=s.id, category=s.category)
        for s in pool_scripts
        for step in s.steps
    ]
    return TaskInstance(
        goal=script.goal,
        length=len(script.steps),
        candidates=_dedupe(candidates),
        gold=script.steps,
        ordered=script.ordered,
        language=script.language,
        category=script.category,
    )


def build_all_retrieval_tasks(test_corpus: Corpus) -> list[TaskInstance]:
    return [build_retrieval_task(s, test_corpus) for s in test_corpus.test_scripts]


def representative_esd(scenario: EsdScenario) -> tuple[str, ...]:
    """The ESD with the most steps; ties go to the first in input order."""
    best = scenario.esds[0]
    for esd in scenario.esds[1:]:
        if len(esd) > len(best):
            best = esd
    return best


def convert_esd(
    scenario: EsdScenario,
    all_scenarios: list[EsdScenario],
    pool: str = "representatives-only",
) -> TaskInstance:
    """Convert one scenario into a retrieval task.

    The gold script is the scenario's longest ESD. The candidate pool spans
    either every scenario's representative ESD (default) or every ESD.
    """
    if pool not in ("representatives-only", "all-esds"):
        raise TaskError(f"unknown pool mode {pool!r}")
    gold = representative_esd(scenario)

    candidates: list[CandidateStep] = []
    for other in all_scenarios:
        if pool == "representatives-only":
            esds = [representative_esd(other)]
        else:
            esds = list(other.esds)
        for esd in esds:
            for step in esd:
                candidates.append(CandidateStep(text=step, source_id=other.name))

    return TaskInstance(
        goal=scenario.name,
        length=len(gold),
        candidates=_dedupe(candidates),
        gold=gold,
        ordered=True,
    )


def load_esd_scenarios(path: str) -> list[EsdScenario]:
    """Read line-delimited {scenario, esd} records, grouping ESDs by scenario."""
    grouped: dict[str, list[tuple[str, ...]]] = {}
    order: list[str] = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            name = normalize_text(str(rec["scenario"]))
            esd = tuple(str(s) for s in rec["esd"])
            if name not in grouped:
                grouped[name] = []
                order.append(name)
            grouped[name].append(esd)
    return [EsdScenario(name=n, esds=tuple(grouped[n])) for n in order]


def save_tasks(tasks: list[TaskInstance], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for task in tasks:
            f.write(json.dumps(task.to_record(), ensure_ascii=False, sort_keys=True))
            f.write("\n")


def load_tasks(path: str) -> list[TaskInstance]:
    tasks = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                tasks.append(TaskInstance.from_record(json.loads(line)))
    return tasks

"""Event-template instantiation and narrative script construction.

Extracted event instances (trigger + arguments) are rendered into step
texts by filling an ontology template, then a candidate pool of those
texts feeds threshold-based retrieval and pairwise ordering.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .pipeline import (
    ConstructedScript,
    DEFAULT_THRESHOLD,
    order_steps,
    retrieve_steps,
    take_above_threshold,
)
from .task import CandidateStep


class OntologyError(ValueError):
    pass


@dataclass(frozen=True)
class EventInstance:
    event_type: str
    trigger: str
    arguments: dict[str, str] = field(default_factory=dict)
    doc_id: str = ""


@dataclass(frozen=True)
class RoleSlot:
    name: str
    slot: str  # e.g. "arg1"
    placeholder: str


@dataclass(frozen=True)
class OntologyTemplate:
    event_type: str
    template: str  # text with <arg1>-style slot markers
    roles: tuple[RoleSlot, ...]

    def __post_init__(self):
        slots = set(re.findall(r"<(\w+)>", self.template))
        covered = {r.slot for r in self.roles}
        missing = slots - covered
        if missing:
            raise OntologyError(
                f"{self.event_type}: slots without roles: {sorted(missing)}"
            )
        for role in self.roles:
            if not role.placeholder:
                raise OntologyError(f"{self.event_type}: empty placeholder for {role.name}")


class Ontology:
    def __init__(self, templates: list[OntologyTemplate]):
        self.templates = {t.event_type: t for t in templates}

    def __contains__(self, event_type: str) -> bool:
        return event_type in self.templates

    def get(self, event_type: str) -> OntologyTemplate:
        if event_type not in self.templates:
            raise OntologyError(f"unknown event type {event_type!r}")
        return self.templates[event_type]


def load_ontology(path: str) -> Ontology:
    templates = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            templates.append(
                OntologyTemplate(
                    event_type=rec["event_type"],
                    template=rec["template"],
                    roles=tuple(
                        RoleSlot(r["name"], r["slot"], r["placeholder"])
                        for r in rec["roles"]
                    ),
                )
            )
    return Ontology(templates)


def load_events(path: str) -> list[EventInstance]:
    events = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            events.append(
                EventInstance(
                    event_type=rec["event_type"],
                    trigger=rec.get("trigger", ""),
                    arguments=dict(rec.get("arguments", {})),
                    doc_id=rec.get("doc_id", ""),
                )
            )
    return events


def instantiate_template(event: EventInstance, ontology: Ontology) -> str:
    """Render an event into step text: extracted arguments fill their slots,
    absent ones fall back to the role's placeholder; the result is
    sentence-cased."""
    template = ontology.get(event.event_type)
    text = template.template
    for role in template.roles:
        value = event.arguments.get(role.name) or role.placeholder
        text = text.replace(f"<{role.slot}>", value)
    text = " ".join(text.split())
    if re.search(r"<\w+>", text):
        raise OntologyError(f"unfilled slot remains in {text!r}")
    return text[:1].upper() + text[1:]


def build_event_pool(events: list[EventInstance], ontology: Ontology) -> list[CandidateStep]:
    """One candidate per event instance, annotated with its event type;
    exact duplicates collapse."""
    seen = set()
    pool = []
    for event in events:
        text = instantiate_template(event, ontology)
        key = (text, event.doc_id)
        if key in seen:
            continue
        seen.add(key)
        pool.append(
            CandidateStep(text=text, source_id=event.doc_id, category=event.event_type)
        )
    return pool


def construct_narrative(
    goal: str,
    pool: list[CandidateStep],
    relevance_scorer,
    orderer,
    threshold: float = DEFAULT_THRESHOLD,
) -> tuple[ConstructedScript, list[str]]:
    """Threshold retrieval over an event pool, then win-count ordering.

    Returns the constructed script and the parallel list of event types.
    An empty above-threshold set is a valid (empty) outcome.
    """
    # no gold reference exists here; reuse the retrieval machinery directly
    task_like = _PoolView(goal=goal, candidates=tuple(pool))
    ranked = retrieve_steps(task_like, relevance_scorer)
    kept = take_above_threshold(ranked, threshold)
    final = order_steps(goal, kept, orderer) if len(kept) > 1 else kept
    script = ConstructedScript(
        goal=goal,
        steps=tuple(r.text for r in final),
        confidences=tuple(r.score for r in final),
        mode="threshold",
    )
    event_types = [pool[r.index].category for r in final]
    return script, event_types


@dataclass(frozen=True)
class _PoolView:
    """Minimal goal + candidates view accepted by retrieve_steps."""

    goal: str
    candidates: tuple[CandidateStep, ...]

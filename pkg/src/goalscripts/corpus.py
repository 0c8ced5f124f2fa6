"""Multilingual how-to script corpora: parsing, label projection, splits."""

from __future__ import annotations

import hashlib
import json
import logging
import random
import unicodedata
from dataclasses import dataclass, field, replace

logger = logging.getLogger(__name__)

_HOW_TO_PREFIX = "how to "


class MalformedRecordError(ValueError):
    """Raised when an article record is missing or corrupting a required field."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


class CorpusError(ValueError):
    pass


def normalize_text(text: str) -> str:
    """NFC-normalize and trim, so text comparison is byte-stable across sources."""
    return unicodedata.normalize("NFC", text).strip()


@dataclass(frozen=True)
class Script:
    """One goal with its ordered (or unordered) list of steps."""

    id: str
    language: str
    goal: str
    category: str
    ordered: bool
    sections: tuple[tuple[str, tuple[str, ...]], ...]
    steps: tuple[str, ...]

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "language": self.language,
            "title": self.goal,
            "category": self.category,
            "ordered": self.ordered,
            "sections": [
                {"section": header, "steps": list(steps)}
                for header, steps in self.sections
            ],
        }


@dataclass(frozen=True)
class CrossLanguageLink:
    source_id: str
    english_id: str


@dataclass
class Corpus:
    language: str
    scripts: list[Script]
    split: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        ids = [s.id for s in self.scripts]
        if len(ids) != len(set(ids)):
            raise CorpusError(f"duplicate script ids in {self.language} corpus")

    def by_id(self, script_id: str) -> Script:
        for s in self.scripts:
            if s.id == script_id:
                return s
        raise KeyError(script_id)

    def subset(self, split_name: str) -> list[Script]:
        return [s for s in self.scripts if self.split.get(s.id) == split_name]

    @property
    def train_scripts(self) -> list[Script]:
        return self.subset("train")

    @property
    def test_scripts(self) -> list[Script]:
        return self.subset("test")


def derive_script_id(language: str, title: str) -> str:
    digest = hashlib.sha1(f"{language}\x00{title}".encode("utf-8")).hexdigest()
    return digest[:16]


def parse_article(record: dict, language: str = "en") -> Script:
    """Parse one article record into a Script.

    The goal is the title with a leading case-insensitive "How to " removed;
    sections are flattened into steps preserving order.
    """
    title = record.get("title")
    if not title or not normalize_text(str(title)):
        raise MalformedRecordError("title", "missing or empty")
    title = normalize_text(str(title))

    goal = title
    if goal.lower().startswith(_HOW_TO_PREFIX):
        goal = goal[len(_HOW_TO_PREFIX):].strip()
    if not goal:
        raise MalformedRecordError("title", "empty after prefix removal")

    raw_sections = record.get("sections")
    if raw_sections is None:
        raise MalformedRecordError("sections", "missing")

    sections: list[tuple[str, tuple[str, ...]]] = []
    steps: list[str] = []
    for raw in raw_sections:
        header = normalize_text(str(raw.get("section", "")))
        kept: list[str] = []
        for raw_step in raw.get("steps", []):
            text = normalize_text(str(raw_step))
            if not text:
                continue
            if text == goal:
                logger.warning("dropping step identical to goal %r", goal)
                continue
            kept.append(text)
        sections.append((header, tuple(kept)))
        steps.extend(kept)

    if not steps:
        raise MalformedRecordError("sections", "no non-empty steps")

    lang = record.get("language", language)
    script_id = record.get("id") or derive_script_id(lang, title)
    return Script(
        id=str(script_id),
        language=lang,
        goal=goal,
        category=normalize_text(str(record.get("category", ""))),
        ordered=bool(record.get("ordered", False)),
        sections=tuple(sections),
        steps=tuple(steps),
    )


def load_corpus(path: str, language: str = "en") -> Corpus:
    """Load a corpus from line-delimited records or a whole-file JSON array.

    Parse failures are collected and reported with line numbers.
    """
    with open(path, encoding="utf-8") as f:
        content = f.read()
    stripped = content.lstrip()
    if not stripped:
        raise CorpusError(f"{path}: empty corpus file")

    records: list[tuple[int, dict]] = []
    errors: list[str] = []
    if stripped.startswith("["):
        for i, rec in enumerate(json.loads(content), start=1):
            records.append((i, rec))
    else:
        for lineno, line in enumerate(content.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append((lineno, json.loads(line)))
            except json.JSONDecodeError as e:
                errors.append(f"line {lineno}: invalid JSON ({e.msg})")

    scripts: list[Script] = []
    for lineno, rec in records:
        try:
            scripts.append(parse_article(rec, language=language))
        except MalformedRecordError as e:
            errors.append(f"line {lineno}: {e}")

    if errors:
        raise CorpusError(f"{path}: " + "; ".join(errors))
    return Corpus(language=language, scripts=scripts)


def save_corpus(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for script in corpus.scripts:
            f.write(json.dumps(script.to_record(), ensure_ascii=False, sort_keys=True))
            f.write("\n")


def load_links(path: str) -> list[CrossLanguageLink]:
    links = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            links.append(CrossLanguageLink(str(rec["source_id"]), str(rec["english_id"])))
    return links


def project_ordered_labels(
    corpora: dict[str, Corpus], links: list[CrossLanguageLink]
) -> dict[str, Corpus]:
    """Copy orderedness labels from English scripts onto linked scripts.

    Unlinked (or dangling-link) non-English scripts default to unordered.
    English labels are never changed.
    """
    english = corpora.get("en")
    english_ordered: dict[str, bool] = (
        {s.id: s.ordered for s in english.scripts} if english else {}
    )
    link_map = {}
    for link in links:
        if link.source_id in link_map and link_map[link.source_id] != link.english_id:
            raise CorpusError(f"source id {link.source_id} linked to multiple English ids")
        link_map[link.source_id] = link.english_id

    result: dict[str, Corpus] = {}
    for lang, corpus in corpora.items():
        if lang == "en":
            result[lang] = corpus
            continue
        updated = []
        for script in corpus.scripts:
            english_id = link_map.get(script.id)
            if english_id is None:
                updated.append(replace(script, ordered=False))
            elif english_id in english_ordered:
                updated.append(replace(script, ordered=english_ordered[english_id]))
            else:
                logger.warning(
                    "link for %s points to missing English id %s; defaulting to unordered",
                    script.id, english_id,
                )
                updated.append(replace(script, ordered=False))
        result[lang] = Corpus(language=lang, scripts=updated, split=dict(corpus.split))
    return result


def split_corpus(corpus: Corpus, seed: int) -> Corpus:
    """Hold out round(10%) of scripts as the test split via a seeded shuffle."""
    n = len(corpus.scripts)
    if n < 10:
        raise CorpusError(f"need at least 10 scripts to split, got {n}")
    n_test = round(0.1 * n)
    ids = [s.id for s in corpus.scripts]
    rng = random.Random(seed)
    rng.shuffle(ids)
    split = {sid: ("test" if i < n_test else "train") for i, sid in enumerate(ids)}
    return Corpus(language=corpus.language, scripts=list(corpus.scripts), split=split)


def save_split_manifest(corpus: Corpus, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for script in corpus.scripts:
            rec = {"id": script.id, "split": corpus.split[script.id]}
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def load_split_manifest(corpus: Corpus, path: str) -> Corpus:
    split = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            split[str(rec["id"])] = str(rec["split"])
    return Corpus(language=corpus.language, scripts=list(corpus.scripts), split=split)


def corpus_stats(corpus: Corpus) -> dict:
    """Script counts and per-script section/step averages."""
    n = len(corpus.scripts)
    if n == 0:
        return {
            "num_scripts": 0,
            "num_ordered": 0,
            "avg_sections_per_script": 0.0,
            "avg_steps_per_script": 0.0,
            "empty": True,
        }
    return {
        "num_scripts": n,
        "num_ordered": sum(1 for s in corpus.scripts if s.ordered),
        "avg_sections_per_script": sum(len(s.sections) for s in corpus.scripts) / n,
        "avg_steps_per_script": sum(len(s.steps) for s in corpus.scripts) / n,
        "empty": False,
    }

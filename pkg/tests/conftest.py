import random

import pytest

from goalscripts.corpus import Corpus, Script, split_corpus
from goalscripts.task import CandidateStep, TaskInstance


FIGURE_RECORD = {
    "title": "How to Eat at a Sit Down Restaurant",
    "category": "FOOD AND ENTERTAINING",
    "ordered": True,
    "sections": [
        {
            "section": "Ordering Out",
            "steps": [
                "Order drinks first.",
                "Ask about daily specials.",
                "Look over the menu and place your food order.",
            ],
        },
        {
            "section": "Paying",
            "steps": ["Ask for the check.", "Leave a tip."],
        },
    ],
}


@pytest.fixture
def figure_record():
    return dict(FIGURE_RECORD)


def make_script(i: int, category: str = "COOKING", n_steps: int = 5,
                ordered: bool = True, language: str = "en") -> Script:
    steps = tuple(f"step {i}-{j} of goal {i}" for j in range(n_steps))
    return Script(
        id=f"s{i}",
        language=language,
        goal=f"Do Task {i}",
        category=category,
        ordered=ordered,
        sections=(("Main", steps),),
        steps=steps,
    )


def make_corpus(n: int = 20, seed: int = 0, **kwargs) -> Corpus:
    corpus = Corpus(language=kwargs.pop("language", "en"),
                    scripts=[make_script(i, **kwargs) for i in range(n)])
    return split_corpus(corpus, seed)


def make_synthetic_task(rng: random.Random, pool_size: int = 20, l: int = 5,
                        ordered: bool = True) -> TaskInstance:
    gold = tuple(f"gold step {i} ({rng.random():.6f})" for i in range(l))
    distractors = [
        f"distractor {i} ({rng.random():.6f})" for i in range(pool_size - l)
    ]
    texts = list(gold) + distractors
    rng.shuffle(texts)
    candidates = tuple(
        CandidateStep(text=t, source_id=f"src{i}") for i, t in enumerate(texts)
    )
    return TaskInstance(
        goal=f"synthetic goal {rng.random():.6f}",
        length=l,
        candidates=candidates,
        gold=gold,
        ordered=ordered,
    )


@pytest.fixture
def small_corpus():
    return make_corpus(n=20)

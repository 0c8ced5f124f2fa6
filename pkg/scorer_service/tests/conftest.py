import json
import random

import pytest

from scorer_service.data import Vocab
from scorer_service.model import PairClassifier, ServiceConfig

TOPICS = [
    "cake", "garden", "bicycle", "guitar", "resume",
    "aquarium", "campfire", "mosaic", "kite", "sourdough",
]

OBJECTS = ["surface", "frame", "mixture", "layout", "edges", "corners"]


def write_inference_fixture(path, n_per_topic=20, seed=0):
    """Linearly separable goal-step pairs: positives repeat the goal topic."""
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8") as f:
        for topic in TOPICS:
            goal = f"prepare the {topic}"
            for _ in range(n_per_topic):
                obj = rng.choice(OBJECTS)
                f.write(json.dumps({
                    "goal": goal,
                    "step": f"Work the {topic} {obj} carefully.",
                    "label": "positive",
                }) + "\n")
                other = rng.choice([t for t in TOPICS if t != topic])
                f.write(json.dumps({
                    "goal": goal,
                    "step": f"Work the {other} {obj} carefully.",
                    "label": "negative",
                }) + "\n")


def write_ordering_fixture(path, n_per_topic=20, seed=0):
    """Separable step pairs: 'start' steps always precede 'finish' steps."""
    rng = random.Random(seed)
    with open(path, "w", encoding="utf-8") as f:
        for topic in TOPICS:
            goal = f"prepare the {topic}"
            for _ in range(n_per_topic):
                obj = rng.choice(OBJECTS)
                early = f"Start on the {topic} {obj}."
                late = f"Finish the {topic} {obj}."
                if rng.random() < 0.5:
                    rec = {"goal": goal, "step_a": early, "step_b": late,
                           "label": "a-first"}
                else:
                    rec = {"goal": goal, "step_a": late, "step_b": early,
                           "label": "b-first"}
                f.write(json.dumps(rec) + "\n")


@pytest.fixture(scope="session")
def fixture_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("pairs")
    inference = root / "inference.jsonl"
    ordering = root / "ordering.jsonl"
    write_inference_fixture(inference)
    write_ordering_fixture(ordering)
    return str(inference), str(ordering)


@pytest.fixture(scope="session")
def untrained_model():
    """A randomly initialized model: enough for protocol-level tests."""
    texts = [f"prepare the {t}" for t in TOPICS]
    texts += [f"work the {t} {o}" for t in TOPICS for o in OBJECTS]
    vocab = Vocab.build(texts)
    import torch
    torch.manual_seed(0)
    return PairClassifier(vocab, ServiceConfig())

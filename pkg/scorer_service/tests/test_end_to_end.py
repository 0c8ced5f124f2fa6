"""Train a model, serve it, and drive the construction pipeline against it."""

import itertools
import random

import pytest

from goalscripts import (
    Corpus,
    MetricReport,
    RemoteScorer,
    Script,
    build_retrieval_task,
    construct,
    emit_inference_training_data,
    emit_ordering_training_data,
    evaluate_run,
    retrieve_steps,
    save_training_pairs,
)
from scorer_service.model import ServiceConfig
from scorer_service.server import ScorerServer
from scorer_service.train import train

TOPICS = ["cake", "garden", "bicycle", "guitar", "resume",
          "aquarium", "campfire", "mosaic", "kite", "sourdough"]
ACTIONS = ["Start on", "Measure", "Assemble", "Finish"]


def _script(i, topic, language="en"):
    steps = tuple(f"{action} the {topic} piece {i}." for action in ACTIONS)
    return Script(
        id=f"s{i:03d}", language=language, goal=f"prepare the {topic} {i}",
        category="HOBBIES", ordered=True, sections=(("", steps),), steps=steps)


@pytest.fixture(scope="module")
def corpus():
    scripts = [_script(i, topic)
               for i, topic in enumerate(itertools.islice(
                   itertools.cycle(TOPICS), 30))]
    split = {s.id: ("test" if i < 5 else "train")
             for i, s in enumerate(scripts)}
    return Corpus(language="en", scripts=scripts, split=split)


@pytest.fixture(scope="module")
def served_model(corpus, tmp_path_factory):
    root = tmp_path_factory.mktemp("e2e")
    inference_path = str(root / "inference.jsonl")
    ordering_path = str(root / "ordering.jsonl")
    save_training_pairs(emit_inference_training_data(corpus, seed=0), inference_path)
    save_training_pairs(emit_ordering_training_data(corpus, seed=0), ordering_path)
    model, _ = train(inference_path, ordering_path, ServiceConfig(),
                     epochs=5, seed=0)
    server = ScorerServer(model).start()
    yield server
    server.stop()


def test_pipeline_against_live_service(corpus, served_model):
    scorer = RemoteScorer(served_model.endpoint, language="en")
    tasks = [build_retrieval_task(s, corpus) for s in corpus.test_scripts]
    assert len(tasks) == 5

    constructed = []
    rankings = []
    for task in tasks:
        constructed.append(construct(task, scorer, scorer))
        rankings.append([r.text for r in retrieve_steps(task, scorer)])

    report = evaluate_run(tasks, constructed, rankings=rankings)
    assert isinstance(report, MetricReport)
    assert len(report.per_script) == 5
    for key in ("accuracy", "tau", "recall@25", "ndcg@25"):
        assert key in report.aggregates
        assert -1.0 <= report.aggregates[key] <= 1.0
    for row in report.per_script:
        assert 0.0 <= row["accuracy"] <= 1.0
    for script, task in zip(constructed, tasks):
        assert len(script.steps) == task.length == 4


def test_remote_scorer_sees_antisymmetric_verdicts(served_model):
    scorer = RemoteScorer(served_model.endpoint, language="en")
    rng = random.Random(3)
    for _ in range(20):
        topic = rng.choice(TOPICS)
        goal = f"prepare the {topic} 0"
        a = f"{rng.choice(ACTIONS)} the {topic} piece 0."
        b = f"{rng.choice(ACTIONS)} the {topic} piece 1."
        forward = scorer.compare_order(goal, a, b)
        backward = scorer.compare_order(goal, b, a)
        assert abs(forward + backward - 1.0) <= 1e-4

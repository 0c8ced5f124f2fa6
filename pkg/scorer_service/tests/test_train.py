"""Training: held-out accuracy on separable data, multitask scheduling."""

import time

import pytest

from scorer_service.data import load_inference_pairs, load_ordering_pairs
from scorer_service.model import ServiceConfig
from scorer_service.train import pair_accuracy, train


@pytest.fixture(scope="module")
def trained(fixture_files):
    inference_path, ordering_path = fixture_files
    start = time.monotonic()
    model, metrics = train(inference_path, ordering_path, ServiceConfig(),
                           epochs=10, seed=0)
    elapsed = time.monotonic() - start
    return model, metrics, elapsed


def test_separable_fixture_reaches_high_accuracy(trained):
    _, metrics, elapsed = trained
    assert metrics["inference_dev_accuracy"] > 0.9
    assert metrics["ordering_dev_accuracy"] > 0.9
    assert elapsed < 600


def test_multitask_schedule_alternates(trained):
    _, metrics, _ = trained
    schedule = metrics["schedule"]
    tasks = set(schedule)
    assert tasks == {"inference", "ordering"}
    # While both tasks still have batches left, no task runs twice in a row.
    # The smaller task contributes ceil(180 / 32) = 6 batches per epoch, so
    # the first 12 entries of every epoch must alternate strictly.
    head = schedule[:12]
    for prev, cur in zip(head, head[1:]):
        assert prev != cur


def test_trained_model_generalizes_to_fresh_pairs(trained, tmp_path):
    from conftest import write_inference_fixture, write_ordering_fixture

    model, _, _ = trained
    write_inference_fixture(tmp_path / "inf.jsonl", n_per_topic=5, seed=99)
    write_ordering_fixture(tmp_path / "ord.jsonl", n_per_topic=5, seed=99)
    assert pair_accuracy(model, "inference",
                         load_inference_pairs(str(tmp_path / "inf.jsonl"))) > 0.9
    assert pair_accuracy(model, "ordering",
                         load_ordering_pairs(str(tmp_path / "ord.jsonl"))) > 0.9


def test_trained_model_keeps_antisymmetry(trained):
    model, _, _ = trained
    goals = ["prepare the cake"] * 2
    a = ["Start on the cake frame.", "Finish the cake frame."]
    b = ["Finish the cake frame.", "Start on the cake frame."]
    forward = model.score_ordering(goals, a, b)
    backward = model.score_ordering(goals, b, a)
    for f, bk in zip(forward, backward):
        assert abs(f + bk - 1.0) <= 1e-4


def test_separate_encoders_train(fixture_files):
    inference_path, ordering_path = fixture_files
    config = ServiceConfig(shared_encoder=False)
    model, metrics = train(inference_path, ordering_path, config, epochs=1, seed=0)
    enc = model.encoders
    assert enc["inference"] is not enc["ordering"]
    assert 0.0 <= metrics["inference_dev_accuracy"] <= 1.0


def test_single_head_training(fixture_files):
    inference_path, _ = fixture_files
    config = ServiceConfig(heads=("inference",))
    _, metrics = train(inference_path, None, config, epochs=1, seed=0)
    assert set(metrics["schedule"]) == {"inference"}
    assert "ordering_dev_accuracy" not in metrics


def test_enabled_head_requires_training_file(fixture_files):
    inference_path, _ = fixture_files
    with pytest.raises(ValueError):
        train(inference_path, None, ServiceConfig(), epochs=1)
    with pytest.raises(ValueError):
        train(None, None, ServiceConfig(heads=("inference",)), epochs=1)

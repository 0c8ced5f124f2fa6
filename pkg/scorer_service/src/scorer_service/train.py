"""Finetuning for the inference and ordering heads.

Multitask mode presents one batch from each task in an alternating
fashion over a shared encoder; single-task mode trains each head's own
encoder independently.
"""

from __future__ import annotations

import logging
import random

import torch
from torch import nn

from .data import (
    Vocab,
    collate,
    load_inference_pairs,
    load_ordering_pairs,
    render_inference,
    render_ordering,
)
from .model import PairClassifier, ServiceConfig

logger = logging.getLogger(__name__)


def _encode_inference(vocab, pairs, max_len):
    encoded = [render_inference(vocab, g, s, max_len) for g, s, _ in pairs]
    labels = [y for _, _, y in pairs]
    return encoded, labels


def _encode_ordering(vocab, pairs, max_len):
    encoded = [render_ordering(vocab, g, a, b, max_len) for g, a, b, _ in pairs]
    labels = [y for _, _, _, y in pairs]
    return encoded, labels


def _batches(encoded, labels, batch_size, rng):
    order = list(range(len(encoded)))
    rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        idx = order[start:start + batch_size]
        yield collate([encoded[i] for i in idx]), torch.tensor(
            [labels[i] for i in idx], dtype=torch.long)


def _split(items, holdout: float, rng):
    order = list(range(len(items)))
    rng.shuffle(order)
    n_dev = max(1, int(len(items) * holdout))
    dev_idx = set(order[:n_dev])
    train = [x for i, x in enumerate(items) if i not in dev_idx]
    dev = [x for i, x in enumerate(items) if i in dev_idx]
    return train, dev


def pair_accuracy(model: PairClassifier, task: str, pairs) -> float:
    if task == "inference":
        scores = model.score_inference([p[0] for p in pairs], [p[1] for p in pairs])
        labels = [p[2] for p in pairs]
    else:
        scores = model.score_ordering([p[0] for p in pairs], [p[1] for p in pairs],
                                      [p[2] for p in pairs])
        labels = [p[3] for p in pairs]
    hits = sum(1 for s, y in zip(scores, labels) if (s > 0.5) == bool(y))
    return hits / len(pairs)


def train(
    inference_path: str | None,
    ordering_path: str | None,
    config: ServiceConfig,
    epochs: int = 10,
    lr: float = 1e-3,
    seed: int = 0,
    holdout: float = 0.1,
) -> tuple[PairClassifier, dict]:
    """Train the enabled heads; returns the model and held-out accuracies.

    With both tasks enabled and a shared encoder, batches alternate
    between tasks within each epoch (the schedule is logged).
    """
    torch.manual_seed(seed)
    rng = random.Random(seed)

    datasets: dict[str, tuple[list, list]] = {}
    texts: list[str] = []
    if "inference" in config.heads:
        if inference_path is None:
            raise ValueError("inference head enabled but no training file given")
        pairs = load_inference_pairs(inference_path)
        datasets["inference"] = _split(pairs, holdout, rng)
        texts.extend(g for g, s, _ in pairs)
        texts.extend(s for g, s, _ in pairs)
    if "ordering" in config.heads:
        if ordering_path is None:
            raise ValueError("ordering head enabled but no training file given")
        pairs = load_ordering_pairs(ordering_path)
        datasets["ordering"] = _split(pairs, holdout, rng)
        texts.extend(g for g, a, b, _ in pairs)
        texts.extend(a for g, a, b, _ in pairs)
        texts.extend(b for g, a, b, _ in pairs)

    vocab = Vocab.build(texts)
    model = PairClassifier(vocab, config)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()

    encoded = {}
    for task, (train_pairs, _) in datasets.items():
        if task == "inference":
            encoded[task] = _encode_inference(vocab, train_pairs, config.max_len)
        else:
            encoded[task] = _encode_ordering(vocab, train_pairs, config.max_len)

    schedule: list[str] = []
    for epoch in range(epochs):
        model.train()
        iterators = {
            task: _batches(enc, labels, config.batch_size, rng)
            for task, (enc, labels) in encoded.items()
        }
        active = list(iterators)
        total_loss = 0.0
        while active:
            for task in list(active):
                batch = next(iterators[task], None)
                if batch is None:
                    active.remove(task)
                    continue
                (ids, segs, mask), labels = batch
                logits = model.logits(task, (ids, segs, mask))
                loss = loss_fn(logits, labels)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                total_loss += loss.item()
                schedule.append(task)
        logger.info("epoch %d: loss %.4f", epoch, total_loss)

    metrics = {"schedule": schedule}
    for task, (_, dev_pairs) in datasets.items():
        acc = pair_accuracy(model, task, dev_pairs)
        metrics[f"{task}_dev_accuracy"] = acc
        logger.info("%s held-out pair accuracy: %.3f", task, acc)
    return model, metrics

"""Training-pair files and text encoding for the scorer service.

Consumes the line-delimited training files emitted by the pipeline:
  {"goal": ..., "step": ..., "label": "positive"|"negative"}
  {"goal": ..., "step_a": ..., "step_b": ..., "label": "a-first"|"b-first"}
"""

from __future__ import annotations

import json
import re

import torch

PAD, UNK, CLS, SEP = 0, 1, 2, 3
SPECIALS = {"[PAD]": PAD, "[UNK]": UNK, "[CLS]": CLS, "[SEP]": SEP}

_WORD_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


class Vocab:
    def __init__(self, token_to_id: dict[str, int]):
        self.token_to_id = token_to_id

    def __len__(self) -> int:
        return len(self.token_to_id)

    def encode(self, text: str) -> list[int]:
        return [self.token_to_id.get(t, UNK) for t in tokenize(text)]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.token_to_id, f, ensure_ascii=False)

    @classmethod
    def load(cls, path: str) -> "Vocab":
        with open(path, encoding="utf-8") as f:
            return cls(json.load(f))

    @classmethod
    def build(cls, texts, max_size: int = 50_000) -> "Vocab":
        counts: dict[str, int] = {}
        for text in texts:
            for token in tokenize(text):
                counts[token] = counts.get(token, 0) + 1
        token_to_id = dict(SPECIALS)
        for token, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])):
            if len(token_to_id) >= max_size:
                break
            token_to_id[token] = len(token_to_id)
        return cls(token_to_id)


def load_inference_pairs(path: str) -> list[tuple[str, str, int]]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            label = 1 if rec["label"] == "positive" else 0
            pairs.append((rec["goal"], rec["step"], label))
    if not pairs:
        raise ValueError(f"{path}: no training pairs")
    return pairs


def load_ordering_pairs(path: str) -> list[tuple[str, str, str, int]]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            label = 1 if rec["label"] == "a-first" else 0
            pairs.append((rec["goal"], rec["step_a"], rec["step_b"], label))
    if not pairs:
        raise ValueError(f"{path}: no training pairs")
    return pairs


def render_inference(vocab: Vocab, goal: str, step: str, max_len: int) -> tuple[list[int], list[int]]:
    ids = [CLS] + vocab.encode(goal) + [SEP] + vocab.encode(step) + [SEP]
    segs = [0] * (2 + len(vocab.encode(goal))) + [1] * (1 + len(vocab.encode(step)))
    return ids[:max_len], segs[:max_len]


def render_ordering(vocab: Vocab, goal: str, a: str, b: str, max_len: int) -> tuple[list[int], list[int]]:
    g, ea, eb = vocab.encode(goal), vocab.encode(a), vocab.encode(b)
    ids = [CLS] + g + [SEP] + ea + [SEP] + eb + [SEP]
    segs = [0] * (2 + len(g)) + [1] * (1 + len(ea)) + [2] * (1 + len(eb))
    return ids[:max_len], segs[:max_len]


def collate(encoded: list[tuple[list[int], list[int]]]):
    """Pad a batch of (ids, segments) to a common length."""
    width = max(len(ids) for ids, _ in encoded)
    batch_ids = torch.full((len(encoded), width), PAD, dtype=torch.long)
    batch_segs = torch.zeros((len(encoded), width), dtype=torch.long)
    mask = torch.zeros((len(encoded), width), dtype=torch.bool)
    for i, (ids, segs) in enumerate(encoded):
        batch_ids[i, :len(ids)] = torch.tensor(ids, dtype=torch.long)
        batch_segs[i, :len(segs)] = torch.tensor(segs, dtype=torch.long)
        mask[i, :len(ids)] = True
    return batch_ids, batch_segs, mask

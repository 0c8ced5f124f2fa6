"""Encoder with task heads for goal-step inference and step ordering.

The two classifiers share the encoder (multitask configuration) or use
separate encoders when trained independently. The default encoder is a
small transformer trained from scratch; a pretrained multilingual
encoder identifier can be supplied instead when model downloads are
available in the deployment environment.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import torch
from torch import nn

from .data import Vocab, collate, render_inference, render_ordering


@dataclass
class ServiceConfig:
    model: str = "tiny"
    heads: tuple[str, ...] = ("inference", "ordering")
    shared_encoder: bool = True
    language: str = "en"
    batch_size: int = 32
    listen: str = "127.0.0.1:8756"
    max_len: int = 64
    hidden: int = 64
    layers: int = 2
    attention_heads: int = 4
    separator: str = "[SEP]"  # rendering separator between goal and steps
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.heads:
            raise ValueError("at least one task head must be enabled")


class TinyEncoder(nn.Module):
    """Small transformer encoder over a word-level vocabulary."""

    def __init__(self, vocab_size: int, config: ServiceConfig):
        super().__init__()
        d = config.hidden
        self.token_emb = nn.Embedding(vocab_size, d, padding_idx=0)
        self.segment_emb = nn.Embedding(3, d)
        self.position_emb = nn.Embedding(config.max_len, d)
        layer = nn.TransformerEncoderLayer(
            d_model=d, nhead=config.attention_heads, dim_feedforward=4 * d,
            dropout=0.1, batch_first=True)
        self.encoder = nn.TransformerEncoder(layer, num_layers=config.layers)
        self.norm = nn.LayerNorm(d)

    def forward(self, ids, segments, mask):
        positions = torch.arange(ids.size(1), device=ids.device).unsqueeze(0)
        x = self.token_emb(ids) + self.segment_emb(segments) + self.position_emb(positions)
        x = self.norm(x)
        x = self.encoder(x, src_key_padding_mask=~mask)
        return x[:, 0]  # [CLS] position


class PairClassifier(nn.Module):
    """Shared (or per-task) encoder plus one binary head per task."""

    def __init__(self, vocab: Vocab, config: ServiceConfig):
        super().__init__()
        self.config = config
        vocab_size = len(vocab)
        if config.shared_encoder:
            encoder = TinyEncoder(vocab_size, config)
            self.encoders = nn.ModuleDict({h: encoder for h in config.heads})
        else:
            self.encoders = nn.ModuleDict(
                {h: TinyEncoder(vocab_size, config) for h in config.heads})
        self.heads = nn.ModuleDict(
            {h: nn.Linear(config.hidden, 2) for h in config.heads})
        self.vocab = vocab

    def logits(self, task: str, encoded):
        ids, segments, mask = encoded
        pooled = self.encoders[task](ids, segments, mask)
        return self.heads[task](pooled)

    @torch.no_grad()
    def score_inference(self, goals: list[str], steps: list[str]) -> list[float]:
        self.eval()
        if "inference" not in self.heads:
            raise ValueError("inference head not enabled")
        encoded = collate([
            render_inference(self.vocab, g, s, self.config.max_len)
            for g, s in zip(goals, steps)
        ])
        probs = torch.softmax(self.logits("inference", encoded), dim=-1)
        return probs[:, 1].tolist()

    @torch.no_grad()
    def score_ordering(self, goals: list[str], firsts: list[str],
                       seconds: list[str]) -> list[float]:
        """Probability that each `first` precedes its `second`, antisymmetric:
        the model scores the lexicographically canonical orientation once."""
        self.eval()
        if "ordering" not in self.heads:
            raise ValueError("ordering head not enabled")
        rendered = []
        flipped = []
        for g, a, b in zip(goals, firsts, seconds):
            if a <= b:
                rendered.append(render_ordering(self.vocab, g, a, b, self.config.max_len))
                flipped.append(False)
            else:
                rendered.append(render_ordering(self.vocab, g, b, a, self.config.max_len))
                flipped.append(True)
        probs = torch.softmax(self.logits("ordering", collate(rendered)), dim=-1)
        scores = probs[:, 1].tolist()
        return [
            0.5 if a == b else (1.0 - s if flip else s)
            for s, flip, a, b in zip(scores, flipped, firsts, seconds)
        ]


def save_model(model: PairClassifier, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    torch.save(model.state_dict(), os.path.join(out_dir, "weights.pt"))
    model.vocab.save(os.path.join(out_dir, "vocab.json"))
    cfg = model.config
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as f:
        json.dump({
            "model": cfg.model, "heads": list(cfg.heads),
            "shared_encoder": cfg.shared_encoder, "language": cfg.language,
            "batch_size": cfg.batch_size, "listen": cfg.listen,
            "max_len": cfg.max_len, "hidden": cfg.hidden,
            "layers": cfg.layers, "attention_heads": cfg.attention_heads,
            "separator": cfg.separator,
        }, f)


def load_model(model_dir: str) -> PairClassifier:
    with open(os.path.join(model_dir, "config.json"), encoding="utf-8") as f:
        raw = json.load(f)
    raw["heads"] = tuple(raw["heads"])
    config = ServiceConfig(**raw)
    vocab = Vocab.load(os.path.join(model_dir, "vocab.json"))
    model = PairClassifier(vocab, config)
    state = torch.load(os.path.join(model_dir, "weights.pt"),
                       map_location="cpu", weights_only=True)
    model.load_state_dict(state)
    model.eval()
    return model

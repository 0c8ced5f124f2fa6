"""Scorer contracts and built-ins: goal-step relevance and pairwise ordering.

Two scorer roles exist. A relevance scorer gives the confidence that a
candidate text is a step toward a goal. A pair orderer gives the probability
that step A happens before step B under a goal; every implementation keeps
verdict(a, b) + verdict(b, a) = 1 by scoring one canonical orientation and
deriving the other.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import re
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"\w+", re.UNICODE)

ENDPOINT_ENV_VAR = "GOALSCRIPTS_SCORER_ENDPOINT"


class ScorerError(RuntimeError):
    pass


class ScorerTransportError(ScorerError):
    """The remote scorer could not be reached."""


class ScorerProtocolError(ScorerError):
    """The remote scorer answered with something that is not a valid response."""


def tokenize(text: str) -> list[str]:
    """Lowercased unicode word tokens; no stemming, multilingual-safe."""
    return _WORD_RE.findall(text.lower())


def _check_unit(value: float, what: str) -> float:
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise ScorerError(f"{what} out of [0,1]: {value!r}")
    return value


class RelevanceScorer:
    def score_relevance(self, goal: str, step: str) -> float:
        raise NotImplementedError


class PairOrderer:
    """Base for orderers. Subclasses score only the canonical orientation."""

    def _score_canonical(self, goal: str, first: str, second: str) -> float:
        raise NotImplementedError

    def compare_order(self, goal: str, a: str, b: str) -> float:
        """Probability that a precedes b. Antisymmetric by construction."""
        if a == b:
            return 0.5
        if a <= b:
            return _check_unit(self._score_canonical(goal, a, b), "order verdict")
        return 1.0 - _check_unit(self._score_canonical(goal, b, a), "order verdict")


class OracleRelevanceScorer(RelevanceScorer):
    """Membership oracle: 1.0 for steps in the gold set, else 0.0."""

    def __init__(self, gold_steps):
        self.gold = set(gold_steps)

    def score_relevance(self, goal: str, step: str) -> float:
        return 1.0 if step in self.gold else 0.0


class OracleOrderer(PairOrderer):
    """Gold-order oracle: 1.0 when a appears before b in the reference."""

    def __init__(self, gold_order):
        self.positions = {}
        for i, step in enumerate(gold_order):
            self.positions.setdefault(step, i)

    def _score_canonical(self, goal: str, first: str, second: str) -> float:
        pa = self.positions.get(first)
        pb = self.positions.get(second)
        if pa is None or pb is None or pa == pb:
            return 0.5
        return 1.0 if pa < pb else 0.0


def _hash_unit(seed: int, *parts: str) -> float:
    h = hashlib.blake2b(digest_size=8)
    h.update(str(seed).encode("utf-8"))
    for part in parts:
        h.update(b"\x00")
        h.update(part.encode("utf-8"))
    return int.from_bytes(h.digest(), "big") / float(2 ** 64)


class RandomRelevanceScorer(RelevanceScorer):
    """Uniform pseudo-random scores, deterministic in (seed, goal, step)."""

    def __init__(self, seed: int):
        self.seed = seed

    def score_relevance(self, goal: str, step: str) -> float:
        return _hash_unit(self.seed, "rel", goal, step)


class RandomOrderer(PairOrderer):
    def __init__(self, seed: int):
        self.seed = seed

    def _score_canonical(self, goal: str, first: str, second: str) -> float:
        return _hash_unit(self.seed, "ord", goal, first, second)


class LexicalScorer(RelevanceScorer):
    """Tf-idf cosine similarity between goal and step, one document per script."""

    def __init__(self, idf: dict[str, float]):
        if not idf:
            raise ScorerError("empty vocabulary")
        self.idf = idf

    def _vector(self, text: str) -> dict[str, float]:
        counts = Counter(tokenize(text))
        return {t: tf * self.idf[t] for t, tf in counts.items() if t in self.idf}

    def score_relevance(self, goal: str, step: str) -> float:
        vg = self._vector(goal)
        vs = self._vector(step)
        if not vg or not vs:
            return 0.0
        dot = sum(w * vs[t] for t, w in vg.items() if t in vs)
        ng = math.sqrt(sum(w * w for w in vg.values()))
        ns = math.sqrt(sum(w * w for w in vs.values()))
        cos = dot / (ng * ns)
        # weights are nonnegative, so cosine is already in [0,1]
        return _check_unit(min(cos, 1.0), "lexical relevance")


def build_lexical_scorer(train_corpus, language: str = "") -> LexicalScorer:
    """Fit idf over training scripts; each script (goal + steps) is one document."""
    scripts = train_corpus.train_scripts if train_corpus.split else train_corpus.scripts
    if not scripts:
        raise ScorerError("empty training corpus")
    df: Counter = Counter()
    for script in scripts:
        tokens = set(tokenize(script.goal))
        for step in script.steps:
            tokens.update(tokenize(step))
        df.update(tokens)
    n = len(scripts)
    # smoothed idf stays strictly positive so shared rare terms still count
    idf = {t: math.log((1 + n) / (1 + d)) + 1.0 for t, d in df.items()}
    return LexicalScorer(idf)


class PositionOrderer(PairOrderer):
    """Orders by mean normalized token position learned from ordered scripts.

    Each token's statistic is its average position / (len - 1) across ordered
    training scripts. A step's location estimate averages its tokens' stats,
    with unseen tokens contributing the neutral 0.5. The verdict is a logistic
    of the location difference.
    """

    def __init__(self, mean_positions: dict[str, float], steepness: float = 4.0):
        self.mean_positions = mean_positions
        self.steepness = steepness

    def _location(self, step: str) -> float:
        tokens = tokenize(step)
        if not tokens:
            return 0.5
        total = sum(self.mean_positions.get(t, 0.5) for t in tokens)
        return total / len(tokens)

    def _score_canonical(self, goal: str, first: str, second: str) -> float:
        diff = self._location(second) - self._location(first)
        return 1.0 / (1.0 + math.exp(-self.steepness * diff))


def build_position_orderer(train_corpus, steepness: float = 4.0) -> PositionOrderer:
    scripts = train_corpus.train_scripts if train_corpus.split else train_corpus.scripts
    ordered = [s for s in scripts if s.ordered and len(s.steps) >= 2]
    if not ordered:
        raise ScorerError("no ordered scripts with >= 2 steps in training corpus")
    sums: dict[str, float] = defaultdict(float)
    counts: dict[str, int] = defaultdict(int)
    for script in ordered:
        denom = len(script.steps) - 1
        for i, step in enumerate(script.steps):
            pos = i / denom
            for token in tokenize(step):
                sums[token] += pos
                counts[token] += 1
    means = {t: sums[t] / counts[t] for t in sums}
    return PositionOrderer(means, steepness=steepness)


@dataclass
class ScorerConfig:
    kind: str  # lexical-tfidf | position-stats | random | remote | oracle
    seed: int | None = None
    endpoint: str | None = None
    batch_size: int = 64
    language: str = ""
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "random" and self.seed is None:
            raise ScorerError("random scorer requires a seed")


class RemoteScorer(RelevanceScorer, PairOrderer):
    """Client for a remote scorer speaking the line-JSON request protocol.

    Requests go to an HTTP endpoint as {"requests": [...]} batches; failures
    are retried twice with exponential backoff and then abort the run.
    """

    def __init__(self, endpoint: str, language: str = "", batch_size: int = 64,
                 retries: int = 2, backoff: float = 0.5):
        override = os.environ.get(ENDPOINT_ENV_VAR)
        self.endpoint = override or endpoint
        if not self.endpoint:
            raise ScorerError("no remote scorer endpoint configured")
        self.language = language
        self.batch_size = batch_size
        self.retries = retries
        self.backoff = backoff
        self._next_id = 0

    def _post(self, payload: dict) -> dict:
        import requests

        last_exc = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                resp = requests.post(self.endpoint, json=payload, timeout=60)
                resp.raise_for_status()
                return resp.json()
            except (requests.ConnectionError, requests.Timeout) as e:
                last_exc = e
            except ValueError as e:
                raise ScorerProtocolError(f"non-JSON response: {e}") from e
            except requests.HTTPError as e:
                raise ScorerProtocolError(f"HTTP error from scorer: {e}") from e
        raise ScorerTransportError(f"scorer endpoint unreachable: {last_exc}")

    def _score_batch(self, requests_batch: list[dict]) -> list[float]:
        payload = {"requests": requests_batch}
        body = self._post(payload)
        responses = body.get("responses")
        if not isinstance(responses, list) or len(responses) != len(requests_batch):
            raise ScorerProtocolError("response count does not match request count")
        by_id = {}
        for r in responses:
            try:
                by_id[r["id"]] = float(r["score"])
            except (TypeError, KeyError, ValueError) as e:
                raise ScorerProtocolError(f"malformed response item {r!r}") from e
        scores = []
        for req in requests_batch:
            if req["id"] not in by_id:
                raise ScorerProtocolError(f"missing response for id {req['id']}")
            scores.append(_check_unit(by_id[req["id"]], "remote score"))
        return scores

    def _request_id(self) -> int:
        self._next_id += 1
        return self._next_id

    def score_relevance(self, goal: str, step: str) -> float:
        return self.score_relevance_batch(goal, [step])[0]

    def score_relevance_batch(self, goal: str, steps: list[str]) -> list[float]:
        scores: list[float] = []
        for start in range(0, len(steps), self.batch_size):
            chunk = steps[start:start + self.batch_size]
            reqs = [
                {"id": self._request_id(), "kind": "relevance",
                 "goal": goal, "step": s, "lang": self.language}
                for s in chunk
            ]
            scores.extend(self._score_batch(reqs))
        return scores

    def _score_canonical(self, goal: str, first: str, second: str) -> float:
        req = {"id": self._request_id(), "kind": "order", "goal": goal,
               "step_a": first, "step_b": second, "lang": self.language}
        return self._score_batch([req])[0]


def build_relevance_scorer(config: ScorerConfig, train_corpus=None) -> RelevanceScorer:
    if config.kind == "lexical-tfidf":
        if train_corpus is None:
            raise ScorerError("lexical scorer needs a training corpus")
        return build_lexical_scorer(train_corpus, config.language)
    if config.kind == "random":
        return RandomRelevanceScorer(config.seed)
    if config.kind == "remote":
        return RemoteScorer(config.endpoint or "", config.language, config.batch_size)
    raise ScorerError(f"unknown relevance scorer kind {config.kind!r}")


def build_orderer(config: ScorerConfig, train_corpus=None) -> PairOrderer:
    if config.kind == "position-stats":
        if train_corpus is None:
            raise ScorerError("position orderer needs a training corpus")
        return build_position_orderer(train_corpus)
    if config.kind == "random":
        return RandomOrderer(config.seed)
    if config.kind == "remote":
        return RemoteScorer(config.endpoint or "", config.language, config.batch_size)
    raise ScorerError(f"unknown orderer kind {config.kind!r}")

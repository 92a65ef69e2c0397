"""Next-character scorers.

A scorer is anything with three methods:

* ``initial_state()`` -> state
* ``step(state)`` -> cost vector over ``|A| + 1`` symbols (EOS last)
* ``advance(state, c)`` -> successor state

States are plain hashable values, so hypotheses can share and fork them
freely. The beam search uses one scorer in the role of the sequence decoder
and, optionally, one as external language model.
"""
from __future__ import annotations

import json
import logging
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Protocol, Sequence

import numpy as np

from .core import Alphabet

log = logging.getLogger(__name__)

BOS = -1
NGLM_MAGIC = b"NGLM"
NGLM_VERSION = 1
DEFAULT_ORDER = 6
DEFAULT_INTERPOLATION = 0.4


class Scorer(Protocol):
    def initial_state(self) -> Hashable: ...

    def step(self, state) -> np.ndarray: ...

    def advance(self, state, c: int): ...


class EmptyCorpus(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class UniformScorer:
    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet
        n = alphabet.n_symbols
        self._costs = _readonly(np.full(n, math.log(n)))

    def initial_state(self):
        return None

    def step(self, state) -> np.ndarray:
        return self._costs

    def advance(self, state, c: int):
        return None


def uniform_scorer(alphabet: Alphabet) -> UniformScorer:
    return UniformScorer(alphabet)


class TeacherScorer:
    """Stand-in for a trained sequence decoder that knows one reference.

    While the decoded prefix agrees with the reference, the next reference
    symbol (EOS after the last character) gets ``correct_mass`` and the rest
    is spread uniformly. Once the prefix leaves the reference, every symbol
    is equally likely.
    """

    def __init__(self, alphabet: Alphabet, reference: Sequence[int], correct_mass: float = 0.9):
        if not 0.5 < correct_mass < 1.0:
            raise ValueError("correct_mass must lie in (0.5, 1)")
        self.alphabet = alphabet
        self.reference = tuple(int(c) for c in reference)
        if any(not 0 <= c < alphabet.size for c in self.reference):
            raise ValueError("reference contains non-character indices")
        self.correct_mass = correct_mass
        n = alphabet.n_symbols
        self._uniform = _readonly(np.full(n, math.log(n)))
        self._hit = -math.log(correct_mass)
        self._miss = -math.log((1.0 - correct_mass) / (n - 1))

    def initial_state(self):
        return 0

    def step(self, state) -> np.ndarray:
        # state: position in the reference, or None once off-reference
        if state is None:
            return self._uniform
        target = self.reference[state] if state < len(self.reference) else self.alphabet.eos_id
        costs = np.full(self.alphabet.n_symbols, self._miss)
        costs[target] = self._hit
        return costs

    def advance(self, state, c: int):
        if state is None or state >= len(self.reference) or self.reference[state] != c:
            return None
        return state + 1


def teacher_scorer(alphabet: Alphabet, reference: Sequence[int], correct_mass: float = 0.9) -> TeacherScorer:
    return TeacherScorer(alphabet, reference, correct_mass)


@dataclass
class NgramModel:
    """Character n-gram with Jelinek-Mercer interpolation down to a uniform floor.

    ``counts`` maps a context (tuple of up to ``order - 1`` symbol ids, with
    ``BOS`` padding at the start of a line) to next-symbol counts over
    ``A + EOS``. ``interpolation`` is the weight kept by the next-lower order
    at every level.
    """

    alphabet: Alphabet
    order: int
    counts: dict[tuple[int, ...], np.ndarray]
    interpolation: float = DEFAULT_INTERPOLATION
    skipped_chars: int = 0
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("n-gram order must be >= 1")
        if not 0.0 < self.interpolation < 1.0:
            raise ValueError("interpolation weight must lie in (0, 1)")

    def initial_state(self) -> tuple[int, ...]:
        return (BOS,) * (self.order - 1)

    def advance(self, state: tuple[int, ...], c: int) -> tuple[int, ...]:
        if self.order == 1:
            return ()
        return state[1:] + (int(c),)

    def distribution(self, state: tuple[int, ...]) -> np.ndarray:
        cached = self._cache.get(state)
        if cached is not None:
            return cached
        n = self.alphabet.n_symbols
        p = np.full(n, 1.0 / n)
        w = self.interpolation
        for length in range(self.order):
            ctx = state[len(state) - length:] if length else ()
            counts = self.counts.get(ctx)
            if counts is None:
                continue
            total = counts.sum()
            if total == 0:
                continue
            p = (1.0 - w) * (counts / total) + w * p
        p = _readonly(p)
        self._cache[state] = p
        return p

    def step(self, state) -> np.ndarray:
        return -np.log(self.distribution(state))

    def save(self, path) -> None:
        Path(path).write_bytes(dumps_ngram(self))

    @classmethod
    def load(cls, path) -> "NgramModel":
        return loads_ngram(Path(path).read_bytes())


def ngram_train(
    corpus: Sequence[str], alphabet: Alphabet, order: int = DEFAULT_ORDER, interpolation: float = DEFAULT_INTERPOLATION
) -> NgramModel:
    """Count every (context, next symbol) event, including one EOS per line.

    Characters outside the alphabet are dropped from their line and counted in
    ``skipped_chars``.
    """
    if not corpus:
        raise EmptyCorpus("cannot train on an empty corpus")
    n = alphabet.n_symbols
    counts: dict[tuple[int, ...], np.ndarray] = {}
    skipped = 0
    for line in corpus:
        ids = []
        for ch in line:
            if ch in alphabet:
                ids.append(alphabet.index(ch))
            else:
                skipped += 1
        history = [BOS] * (order - 1) + ids
        events = ids + [alphabet.eos_id]
        for i, sym in enumerate(events):
            ctx_full = history[i : i + order - 1]
            for length in range(order):
                ctx = tuple(ctx_full[len(ctx_full) - length:]) if length else ()
                row = counts.get(ctx)
                if row is None:
                    row = counts[ctx] = np.zeros(n, dtype=np.int64)
                row[sym] += 1
    if skipped:
        log.warning("skipped %d characters not in the alphabet", skipped)
    return NgramModel(alphabet, order, counts, interpolation, skipped)


def _events(scorer, alphabet: Alphabet, texts: Sequence[str]):
    """Yield (cost vector, true symbol) for every position of every text, EOS included."""
    for text in texts:
        ids = [alphabet.index(ch) for ch in text if ch in alphabet]
        state = scorer.initial_state()
        for sym in ids + [alphabet.eos_id]:
            yield scorer.step(state), sym
            if sym != alphabet.eos_id:
                state = scorer.advance(state, sym)


def topk_accuracy(scorer, alphabet: Alphabet, texts: Sequence[str], k: int) -> float:
    """Fraction of positions whose true next symbol is among the ``k`` cheapest.

    Ties in cost are ranked by symbol index.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = total = 0
    for costs, sym in _events(scorer, alphabet, texts):
        top = np.argsort(costs, kind="stable")[:k]
        hits += int(sym in top)
        total += 1
    return hits / total if total else 0.0


def ngram_eval_topk(model: NgramModel, heldout: Sequence[str], k: int) -> float:
    return topk_accuracy(model, model.alphabet, heldout, k)


def perplexity(scorer, alphabet: Alphabet, texts: Sequence[str]) -> float:
    nll = [float(costs[sym]) for costs, sym in _events(scorer, alphabet, texts)]
    if not nll:
        return float("nan")
    return math.exp(math.fsum(nll) / len(nll))


def dumps_ngram(model: NgramModel) -> bytes:
    body = {
        "order": model.order,
        "interpolation": model.interpolation,
        "alphabet": list(model.alphabet.chars),
        "bos": BOS,
        "contexts": [[list(ctx), row.tolist()] for ctx, row in sorted(model.counts.items())],
    }
    payload = json.dumps(body, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    header = NGLM_MAGIC + struct.pack("<HII", NGLM_VERSION, model.order, len(payload))
    return header + payload


def loads_ngram(data: bytes) -> NgramModel:
    if data[:4] != NGLM_MAGIC:
        raise ModelFormatError("not an NGLM file (bad magic)")
    if len(data) < 14:
        raise ModelFormatError("truncated NGLM header")
    version, order, size = struct.unpack("<HII", data[4:14])
    if version != NGLM_VERSION:
        raise ModelFormatError(f"unsupported NGLM version {version}")
    payload = data[14 : 14 + size]
    if len(payload) != size:
        raise ModelFormatError("truncated NGLM payload")
    body = json.loads(payload.decode("utf-8"))
    if body["order"] != order:
        raise ModelFormatError("header/body order mismatch")
    alphabet = Alphabet(tuple(body["alphabet"]))
    counts = {tuple(ctx): np.array(row, dtype=np.int64) for ctx, row in body["contexts"]}
    for row in counts.values():
        if row.shape != (alphabet.n_symbols,):
            raise ModelFormatError("count row does not match alphabet size")
    return NgramModel(alphabet, order, counts, float(body["interpolation"]))

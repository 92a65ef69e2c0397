"""Shared domain types and log-space arithmetic.

Conventions used throughout the package:

* A confidence matrix has ``|A| + 1`` columns; the blank is the last column.
* Scorers emit costs over ``|A| + 1`` symbols; EOS is the last index.
* Everything probabilistic is carried as natural-log values; a *cost* is a
  negated log-probability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

NEG_INF = float("-inf")
INF = float("inf")

ROW_NORM_TOL = 1e-4
ENTRY_MAX_TOL = 1e-6


class UnknownCharacter(ValueError):
    def __init__(self, position: int, char: str):
        super().__init__(f"character {char!r} at position {position} is not in the alphabet")
        self.position = position
        self.char = char


class InvalidMatrix(ValueError):
    pass


def log_sum_exp(values: Iterable[float]) -> float:
    """``log(sum(exp(v)))`` with max shifting. Empty input gives ``-inf``."""
    xs = [float(v) for v in values]
    if not xs:
        return NEG_INF
    top = max(xs)
    if top == NEG_INF:
        return NEG_INF
    if top == INF:
        return INF
    return top + math.log(math.fsum(math.exp(x - top) for x in xs))


@dataclass(frozen=True)
class Alphabet:
    chars: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        chars = tuple(self.chars)
        object.__setattr__(self, "chars", chars)
        for c in chars:
            if len(c) != 1:
                raise ValueError(f"alphabet entries must be single characters, got {c!r}")
            if c in "\n\r":
                raise ValueError("alphabet may not contain line breaks")
        if len(set(chars)) != len(chars):
            raise ValueError("alphabet characters must be unique")
        if not chars:
            raise ValueError("alphabet must not be empty")
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(chars)})

    @classmethod
    def from_text(cls, text: str) -> "Alphabet":
        """Alphabet of the distinct characters of ``text`` in sorted order."""
        return cls(tuple(sorted(set(text))))

    @property
    def size(self) -> int:
        return len(self.chars)

    @property
    def blank_id(self) -> int:
        return len(self.chars)

    @property
    def eos_id(self) -> int:
        return len(self.chars)

    @property
    def n_symbols(self) -> int:
        """Columns of a matrix (``|A|`` + blank) or entries of a cost vector (``|A|`` + EOS)."""
        return len(self.chars) + 1

    def __len__(self) -> int:
        return len(self.chars)

    def __contains__(self, char: str) -> bool:
        return char in self._index

    def index(self, char: str) -> int:
        return self._index[char]

    def char(self, i: int) -> str:
        if not 0 <= i < len(self.chars):
            raise IndexError(f"{i} is not a character index (blank/EOS have no character)")
        return self.chars[i]


def encode_text(alphabet: Alphabet, text: str) -> tuple[int, ...]:
    out = []
    for pos, c in enumerate(text):
        try:
            out.append(alphabet._index[c])
        except KeyError:
            raise UnknownCharacter(pos, c) from None
    return tuple(out)


def decode_text(alphabet: Alphabet, ids: Sequence[int]) -> str:
    return "".join(alphabet.char(int(i)) for i in ids)


@dataclass(frozen=True)
class ConfidenceMatrix:
    """Per-frame log-probabilities, shape ``(T, |A| + 1)``, blank last.

    Rows are validated at construction; the array is made read-only so the
    matrix can be shared between decoders.
    """

    logp: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        logp = np.array(self.logp, dtype=np.float64)
        if logp.ndim != 2:
            raise InvalidMatrix(f"expected a 2-d array, got shape {logp.shape}")
        if logp.shape[0] < 1:
            raise InvalidMatrix("matrix needs at least one frame")
        if logp.shape[1] < 2:
            raise InvalidMatrix("matrix needs at least one character column plus blank")
        if self.validate:
            check_rows(logp)
        logp.setflags(write=False)
        object.__setattr__(self, "logp", logp)

    @classmethod
    def from_probs(cls, probs) -> "ConfidenceMatrix":
        with np.errstate(divide="ignore"):
            return cls(np.log(np.asarray(probs, dtype=np.float64)))

    @property
    def n_frames(self) -> int:
        return self.logp.shape[0]

    @property
    def alphabet_size(self) -> int:
        return self.logp.shape[1] - 1

    @property
    def blank_id(self) -> int:
        return self.logp.shape[1] - 1

    def __eq__(self, other):
        if not isinstance(other, ConfidenceMatrix):
            return NotImplemented
        return self.logp.shape == other.logp.shape and np.array_equal(self.logp, other.logp)

    __hash__ = None


def check_rows(logp: np.ndarray) -> None:
    if np.isnan(logp).any():
        raise InvalidMatrix("matrix contains NaN")
    if (logp > ENTRY_MAX_TOL).any():
        raise InvalidMatrix("log-probabilities must be <= 0")
    with np.errstate(invalid="ignore"):
        top = logp.max(axis=1, keepdims=True)
        norms = top[:, 0] + np.log(np.exp(logp - top).sum(axis=1))
    bad = np.flatnonzero(~(np.abs(norms) <= ROW_NORM_TOL))
    if bad.size:
        t = int(bad[0])
        raise InvalidMatrix(f"row {t} is not normalized (log-sum {norms[t]:.3g})")


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    top = np.max(logits, axis=axis, keepdims=True)
    shifted = logits - top
    with np.errstate(divide="ignore"):
        return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

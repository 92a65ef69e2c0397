"""Character and word error rates."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence


class EmptyReference(ValueError):
    def __init__(self, distance: int):
        super().__init__(f"empty reference with non-empty hypothesis (distance {distance})")
        self.distance = distance


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Unit-cost Levenshtein distance."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def tokenize_words(text: str) -> list[str]:
    return text.split()


def _rate(dist: int, n: int) -> float:
    if n == 0:
        if dist:
            raise EmptyReference(dist)
        return 0.0
    return dist / n


def cer(hyp: str, ref: str) -> float:
    return _rate(edit_distance(hyp, ref), len(ref))


def wer(hyp: str, ref: str) -> float:
    r = tokenize_words(ref)
    return _rate(edit_distance(tokenize_words(hyp), r), len(r))


@dataclass
class LineScore:
    char_distance: int
    char_ref_len: int
    word_distance: int
    word_ref_len: int

    @property
    def cer(self) -> Optional[float]:
        # None marks the empty-reference case that has no finite rate
        if self.char_ref_len == 0:
            return 0.0 if self.char_distance == 0 else None
        return self.char_distance / self.char_ref_len

    @property
    def wer(self) -> Optional[float]:
        if self.word_ref_len == 0:
            return 0.0 if self.word_distance == 0 else None
        return self.word_distance / self.word_ref_len


def _micro(num: int, den: int) -> float:
    if den == 0:
        return 0.0 if num == 0 else float("inf")
    return num / den


@dataclass
class EvalReport:
    lines: list[LineScore] = field(default_factory=list)

    @property
    def char_errors(self) -> int:
        return sum(s.char_distance for s in self.lines)

    @property
    def char_total(self) -> int:
        return sum(s.char_ref_len for s in self.lines)

    @property
    def word_errors(self) -> int:
        return sum(s.word_distance for s in self.lines)

    @property
    def word_total(self) -> int:
        return sum(s.word_ref_len for s in self.lines)

    @property
    def cer(self) -> float:
        return _micro(self.char_errors, self.char_total)

    @property
    def wer(self) -> float:
        return _micro(self.word_errors, self.word_total)

    @property
    def empty_reference_lines(self) -> list[int]:
        return [i for i, s in enumerate(self.lines) if s.cer is None]


def score_line(hyp: str, ref: str) -> LineScore:
    hw, rw = tokenize_words(hyp), tokenize_words(ref)
    return LineScore(edit_distance(hyp, ref), len(ref), edit_distance(hw, rw), len(rw))


def evaluate(hyps: Sequence[str], refs: Sequence[str]) -> EvalReport:
    """Micro-averaged CER/WER: summed distances over summed reference lengths."""
    if len(hyps) != len(refs):
        raise ValueError(f"{len(hyps)} hypotheses but {len(refs)} references")
    return EvalReport([score_line(h, r) for h, r in zip(hyps, refs)])

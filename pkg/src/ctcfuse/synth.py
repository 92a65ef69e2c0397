"""Synthetic confidence matrices built from ground-truth transcripts.

These replace a trained encoder: every character gets a few frames peaked at
it, blanks separate characters (always at least one between repeats), and
optional Gaussian logit noise makes best-path decoding err.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import Alphabet, ConfidenceMatrix, UnknownCharacter, encode_text, log_softmax


@dataclass(frozen=True)
class SynthConfig:
    frames_per_char: int = 3
    blank_frames_between: int = 1
    peak_confidence: float = 0.9
    noise_temperature: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.frames_per_char < 1:
            raise ValueError("frames_per_char must be >= 1")
        if self.blank_frames_between < 0:
            raise ValueError("blank_frames_between must be >= 0")
        if not 0.0 < self.peak_confidence <= 1.0:
            raise ValueError("peak_confidence must lie in (0, 1]")
        if self.noise_temperature < 0:
            raise ValueError("noise_temperature must be >= 0")


def frame_plan(text: Sequence[int], blank: int, cfg: SynthConfig) -> list[int]:
    """Symbol each frame is peaked at. An empty text becomes one blank frame."""
    plan: list[int] = []
    for i, c in enumerate(text):
        if i:
            gap = cfg.blank_frames_between
            if text[i - 1] == c:
                gap = max(gap, 1)
            plan.extend([blank] * gap)
        plan.extend([c] * cfg.frames_per_char)
    return plan or [blank]


def synth_matrix(text: Sequence[int], alphabet: Alphabet, cfg: SynthConfig = SynthConfig()) -> ConfidenceMatrix:
    n = alphabet.n_symbols
    if cfg.peak_confidence <= 1.0 / n:
        raise ValueError(f"peak_confidence must exceed 1/{n}")
    plan = frame_plan([int(c) for c in text], alphabet.blank_id, cfg)
    rest = (1.0 - cfg.peak_confidence) / (n - 1)
    probs = np.full((len(plan), n), rest)
    probs[np.arange(len(plan)), plan] = cfg.peak_confidence
    with np.errstate(divide="ignore"):
        logits = np.log(probs)
    if cfg.noise_temperature > 0:
        rng = np.random.default_rng(cfg.rng_seed)
        logits = logits + cfg.noise_temperature * rng.standard_normal(logits.shape)
    return ConfidenceMatrix(log_softmax(logits, axis=1))


def line_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


class CorpusError(ValueError):
    def __init__(self, errors: list[tuple[int, UnknownCharacter]]):
        msg = "; ".join(f"line {i + 1}: {e}" for i, e in errors)
        super().__init__(msg)
        self.errors = errors


def synth_corpus(texts: Sequence[str], alphabet: Alphabet, cfg: SynthConfig = SynthConfig()):
    """One ``(matrix, reference)`` pair per line; line ``i`` uses seed ``line_seed(cfg.rng_seed, i)``."""
    errors = []
    encoded = []
    for i, t in enumerate(texts):
        try:
            encoded.append(encode_text(alphabet, t))
        except UnknownCharacter as e:
            errors.append((i, e))
    if errors:
        raise CorpusError(errors)
    return [
        (synth_matrix(ids, alphabet, replace(cfg, rng_seed=line_seed(cfg.rng_seed, i))), t)
        for i, (ids, t) in enumerate(zip(encoded, texts))
    ]


# A small closed vocabulary so that generated lines carry word structure an
# n-gram model can pick up.
WORDS = (
    "the of and to in is was for that with on as by at it from his be this are which or had not but "
    "an have they one were her all she there would their we him been has when who will more no if out "
    "so said what up its about into than them can only other new some could time these two may then do "
    "first any my now such like our over man me even most made after also did many before must through "
    "back years where much your way well down should because each just those people how too little state "
    "good very make world still own see men work long get here between both life being under never day "
    "same another know while last might us great old year off come since against go came right used take"
).split()


def random_texts(n: int, rng: np.random.Generator, min_words: int = 2, max_words: int = 6, words=WORDS) -> list[str]:
    return [" ".join(rng.choice(words, size=rng.integers(min_words, max_words + 1))) for _ in range(n)]


def s2s_style_errors(text: str, rng: np.random.Generator, drop_tail: float = 0.5, repeat_tail: float = 0.2, substitute: float = 0.0, alphabet: Optional[Alphabet] = None) -> str:
    """Corrupt ``text`` the way attention decoders tend to fail.

    With probability ``drop_tail`` the last word is cut off (premature EOS);
    otherwise with probability ``repeat_tail`` the last word is repeated.
    Each character is replaced by a random alphabet character with
    probability ``substitute``.
    """
    words = text.split(" ")
    u = rng.random()
    if u < drop_tail:
        if len(words) > 1:
            words = words[:-1]
    elif u < drop_tail + repeat_tail:
        words = words + [words[-1]]
    out = " ".join(words)
    if substitute > 0:
        if alphabet is None:
            raise ValueError("substitution needs an alphabet")
        chars = list(out)
        for i in range(len(chars)):
            if rng.random() < substitute:
                chars[i] = alphabet.chars[int(rng.integers(alphabet.size))]
        out = "".join(chars)
    return out


def default_alphabet() -> Alphabet:
    """Lowercase latin letters and space."""
    return Alphabet(tuple("abcdefghijklmnopqrstuvwxyz "))


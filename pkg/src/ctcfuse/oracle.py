"""Brute-force reference computations for small instances.

Everything here enumerates explicitly (raw frame paths, or transcripts) and
works in probability space where possible, so it shares no recursion with the
code it is used to check.
"""
from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .core import INF, NEG_INF, ConfidenceMatrix
from .ctc import collapse, ctc_full_log_prob

MAX_PATHS = 10**7


class InstanceTooLarge(ValueError):
    pass


def _check_size(m: ConfidenceMatrix) -> None:
    n = (m.alphabet_size + 1) ** m.n_frames
    if n > MAX_PATHS:
        raise InstanceTooLarge(f"{n} paths exceeds the enumeration guard of {MAX_PATHS}")


def labeling_distribution(m: ConfidenceMatrix) -> dict[tuple[int, ...], float]:
    """Probability (linear space) of every collapsed labeling with non-zero mass."""
    _check_size(m)
    probs = np.exp(m.logp)
    V = m.alphabet_size + 1
    dist: dict[tuple[int, ...], float] = {}
    for path in itertools.product(range(V), repeat=m.n_frames):
        p = 1.0
        for t, label in enumerate(path):
            p *= probs[t, label]
        if p == 0.0:
            continue
        y = collapse(path, m.blank_id)
        dist[y] = dist.get(y, 0.0) + p
    return dist


def oracle_prefix_prob(m: ConfidenceMatrix, g: Sequence[int], dist=None) -> float:
    """Log-probability that the collapsed labeling starts with ``g``.

    ``dist`` may carry a precomputed :func:`labeling_distribution` so that many
    prefixes of the same matrix share one enumeration.
    """
    if dist is None:
        dist = labeling_distribution(m)
    g = tuple(int(c) for c in g)
    n = len(g)
    total = math.fsum(p for y, p in dist.items() if y[:n] == g)
    return math.log(total) if total > 0 else NEG_INF


def oracle_exact_prob(m: ConfidenceMatrix, y: Sequence[int], dist=None) -> float:
    if dist is None:
        dist = labeling_distribution(m)
    p = dist.get(tuple(int(c) for c in y), 0.0)
    return math.log(p) if p > 0 else NEG_INF


def all_transcripts(alphabet_size: int, max_len: int):
    for n in range(max_len + 1):
        yield from itertools.product(range(alphabet_size), repeat=n)


def _weighted(w: float, c: float) -> float:
    return 0.0 if w == 0 else w * c


def scorer_sequence_cost(scorer, y: Sequence[int], eos: int) -> float:
    """Sum of the scorer's costs along ``y`` followed by EOS."""
    state = scorer.initial_state()
    total = 0.0
    for c in y:
        total += float(scorer.step(state)[c])
        state = scorer.advance(state, c)
    return total + float(scorer.step(state)[eos])


def exhaustive_decode(m: ConfidenceMatrix, decoder, lm, lambda_ctc: float, lambda_lm: float, max_len: int):
    """Rank every transcript of length ``<= max_len`` by total fused cost.

    The CTC part of a finished transcript is its full ``-log P(y)``. Returns a
    list of ``(total_cost, transcript)`` sorted with the same tie-break the beam
    search uses (cost, then length, then character indices).
    """
    eos = m.alphabet_size
    ranked = []
    for y in all_transcripts(m.alphabet_size, max_len):
        c_ctc = -ctc_full_log_prob(m, y) if lambda_ctc > 0 else 0.0
        c_ce = scorer_sequence_cost(decoder, y, eos)
        c_lm = scorer_sequence_cost(lm, y, eos) if (lm is not None and lambda_lm > 0) else 0.0
        total = _weighted(lambda_ctc, c_ctc) + _weighted(1.0 - lambda_ctc, c_ce) + _weighted(lambda_lm, c_lm)
        if total < INF:
            ranked.append((total, y))
    ranked.sort(key=lambda r: (r[0], len(r[1]), r[1]))
    return ranked

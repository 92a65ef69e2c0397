"""CTC collapse, forward probabilities and the incremental prefix scorer.

The prefix scorer keeps, for a prefix ``g``, two forward variables per frame:
``gamma_n[t]`` (alignments of ``g`` over frames ``0..t`` whose last frame emits
the last character of ``g``) and ``gamma_b[t]`` (same, last frame blank), plus
``log_psi``, the log-probability that the full labeling starts with ``g``.
Extending ``g`` by a character ``c`` costs ``log_psi(g) - log_psi(g + c)``;
terminating costs ``log_psi(g) - log P(g)``. Summed along a path these
telescope to ``-log P(y)`` for the final transcript ``y``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import INF, NEG_INF, ConfidenceMatrix


def collapse(path: Sequence[int], blank: int) -> tuple[int, ...]:
    """Merge adjacent repeats, then drop blanks."""
    out = []
    prev = None
    for label in path:
        label = int(label)
        if label != prev and label != blank:
            out.append(label)
        prev = label
    return tuple(out)


def best_path_decode(m: ConfidenceMatrix) -> tuple[tuple[int, ...], float]:
    # np.argmax returns the first maximum, i.e. ties go to the lowest index.
    path = np.argmax(m.logp, axis=1)
    logp = float(m.logp[np.arange(m.n_frames), path].sum())
    return collapse(path, m.blank_id), logp


def ctc_full_log_prob(m: ConfidenceMatrix, y: Sequence[int]) -> float:
    """Log of the total probability of all frame paths collapsing to ``y``.

    Standard forward recursion over the blank-interleaved label sequence.
    """
    lp = m.logp
    T = m.n_frames
    blank = m.blank_id
    y = [int(c) for c in y]
    L = 2 * len(y) + 1
    ext = [blank] * L
    ext[1::2] = y
    ext = np.array(ext)
    # transitions that skip the preceding blank are only legal between distinct characters
    can_skip = np.zeros(L, dtype=bool)
    for s in range(2, L):
        can_skip[s] = ext[s] != blank and ext[s] != ext[s - 2]

    alpha = np.full(L, NEG_INF)
    alpha[0] = lp[0, ext[0]]
    if L > 1:
        alpha[1] = lp[0, ext[1]]
    for t in range(1, T):
        prev = alpha
        alpha = prev.copy()
        alpha[1:] = np.logaddexp(alpha[1:], prev[:-1])
        alpha[2:] = np.where(can_skip[2:], np.logaddexp(alpha[2:], prev[:-2]), alpha[2:])
        alpha = alpha + lp[t, ext]
    if L == 1:
        return float(alpha[0])
    return float(np.logaddexp(alpha[-1], alpha[-2]))


def ctc_neg_log_likelihood(m: ConfidenceMatrix, y: Sequence[int]) -> float:
    return -ctc_full_log_prob(m, y)


@dataclass(frozen=True, eq=False)
class PrefixState:
    prefix: tuple[int, ...]
    gamma_n: np.ndarray
    gamma_b: np.ndarray
    log_psi: float

    @property
    def log_exact(self) -> float:
        """Log-probability that the labeling is exactly ``prefix``."""
        return float(np.logaddexp(self.gamma_n[-1], self.gamma_b[-1]))

    @property
    def dead(self) -> bool:
        return self.log_psi == NEG_INF


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def prefix_state_init(m: ConfidenceMatrix) -> PrefixState:
    gamma_b = np.cumsum(m.logp[:, m.blank_id])
    gamma_n = np.full(m.n_frames, NEG_INF)
    return PrefixState((), gamma_n=_frozen(gamma_n), gamma_b=_frozen(gamma_b), log_psi=0.0)


def prefix_extend_batch(
    parents: Sequence[PrefixState], chars: Sequence[int], m: ConfidenceMatrix
) -> tuple[list[PrefixState], np.ndarray]:
    """Extend ``parents[i]`` by ``chars[i]`` for every ``i`` at once.

    Returns the child states and the non-negative delta costs. A child whose
    prefix probability is zero gets delta ``+inf`` and all-``-inf`` gammas.
    """
    K = len(parents)
    T = m.n_frames
    if K == 0:
        return [], np.zeros(0)
    chars = np.asarray(chars, dtype=np.int64)
    if (chars < 0).any() or (chars >= m.alphabet_size).any():
        raise ValueError("prefix extension takes character indices only (no blank/EOS)")

    prev_n = np.full((K, T), NEG_INF)
    prev_b = np.full((K, T), NEG_INF)
    same_last = np.zeros(K, dtype=bool)
    for i, st in enumerate(parents):
        # shift by one frame; frame -1 is virtual: only the empty prefix has mass there
        prev_n[i, 1:] = st.gamma_n[:-1]
        prev_b[i, 1:] = st.gamma_b[:-1]
        if not st.prefix:
            prev_b[i, 0] = 0.0
        else:
            same_last[i] = st.prefix[-1] == chars[i]
    # a repeated character needs a blank in between, so only the blank-ending mass flows on
    phi = np.where(same_last[:, None], prev_b, np.logaddexp(prev_n, prev_b))
    emit = m.logp[:, chars].T
    blank = m.logp[:, m.blank_id]

    contrib = phi + emit
    top = contrib.max(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_psi = np.where(
            top == NEG_INF,
            NEG_INF,
            top + np.log(np.exp(contrib - np.where(top == NEG_INF, 0.0, top)[:, None]).sum(axis=1)),
        )

    gamma_n = np.full((K, T), NEG_INF)
    gamma_b = np.full((K, T), NEG_INF)
    alive = np.flatnonzero(log_psi > NEG_INF)
    if alive.size:
        finite = np.isfinite(phi[alive]).any(axis=0)
        start = int(np.argmax(finite))
        gn = np.full(alive.size, NEG_INF)
        gb = np.full(alive.size, NEG_INF)
        ph = phi[alive]
        em = emit[alive]
        for t in range(start, T):
            gn, gb = np.logaddexp(gn, ph[:, t]) + em[:, t], np.logaddexp(gb, gn) + blank[t]
            gamma_n[alive, t] = gn
            gamma_b[alive, t] = gb

    parent_psi = np.array([st.log_psi for st in parents])
    with np.errstate(invalid="ignore"):
        delta = np.where(log_psi == NEG_INF, INF, np.maximum(parent_psi - log_psi, 0.0))
    children = [
        PrefixState(
            st.prefix + (int(c),), _frozen(gamma_n[i].copy()), _frozen(gamma_b[i].copy()), float(log_psi[i])
        )
        for i, (st, c) in enumerate(zip(parents, chars))
    ]
    return children, delta


def prefix_extend(state: PrefixState, c: int, m: ConfidenceMatrix) -> tuple[PrefixState, float]:
    children, delta = prefix_extend_batch([state], [c], m)
    return children[0], float(delta[0])


def prefix_eos_cost(state: PrefixState) -> float:
    exact = state.log_exact
    if exact == NEG_INF or state.dead:
        return INF
    return max(state.log_psi - exact, 0.0)


def prefix_state_for(m: ConfidenceMatrix, g: Sequence[int]) -> PrefixState:
    """Run the incremental scorer from the empty prefix along ``g``."""
    st = prefix_state_init(m)
    for c in g:
        st, _ = prefix_extend(st, c, m)
    return st

"""Joint beam search over CTC prefix scores, a decoder scorer and an LM.

Per step and open hypothesis, the cheap part

    C_pre = (1 - lambda_ctc) * C_CE + lambda_lm * C_LM

is computed for every next symbol. Only the ``ceil(pre_beam_factor * n_beams)``
cheapest symbols (plus EOS) get the expensive CTC prefix score, then

    C_tot = lambda_ctc * C_CTC + C_pre

ranks the union of candidates and the best ``n_beams`` open ones survive.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from .core import INF, ConfidenceMatrix
from .ctc import PrefixState, best_path_decode, prefix_eos_cost, prefix_extend_batch, prefix_state_init

# lambda_ctc = 0.3 is the compromise weighting; n_beams = 5 is the default width.
DEFAULT_LAMBDA_CTC = 0.3
DEFAULT_N_BEAMS = 5
DEFAULT_PRE_BEAM_FACTOR = 1.5


class NoHypothesisSurvived(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DecodeConfig:
    lambda_ctc: float = DEFAULT_LAMBDA_CTC
    lambda_lm: float = 0.0
    n_beams: int = DEFAULT_N_BEAMS
    pre_beam_factor: float = DEFAULT_PRE_BEAM_FACTOR
    pre_beam: bool = True
    max_len: Optional[int] = None  # None: number of frames
    keep_all_finished: bool = True

    def __post_init__(self):
        if not 0.0 <= self.lambda_ctc <= 1.0:
            raise ConfigError(f"lambda_ctc must lie in [0, 1], got {self.lambda_ctc}")
        if not 0.0 <= self.lambda_lm <= 1.0:
            raise ConfigError(f"lambda_lm must lie in [0, 1], got {self.lambda_lm}")
        if self.n_beams < 1:
            raise ConfigError("n_beams must be >= 1")
        if not self.pre_beam_factor >= 1.0:
            raise ConfigError("pre_beam_factor must be >= 1")
        if self.max_len is not None and self.max_len < 1:
            raise ConfigError("max_len must be >= 1")

    @property
    def pre_beam_size(self) -> int:
        return math.ceil(self.pre_beam_factor * self.n_beams)


def weighted(w: float, cost: float) -> float:
    """``w * cost`` with ``0 * inf = 0``: a zero-weighted scorer has no say."""
    return 0.0 if w == 0 else w * cost


def _weighted_vec(w: float, costs: np.ndarray) -> np.ndarray:
    return np.zeros_like(costs) if w == 0 else w * costs


def fuse(cfg: DecodeConfig, c_ctc: float, c_ce: float, c_lm: float) -> float:
    return weighted(cfg.lambda_ctc, c_ctc) + weighted(1.0 - cfg.lambda_ctc, c_ce) + weighted(cfg.lambda_lm, c_lm)


def combine_pre(c_ce: np.ndarray, c_lm: np.ndarray, cfg: DecodeConfig) -> np.ndarray:
    c_ce = np.asarray(c_ce, dtype=np.float64)
    c_lm = np.asarray(c_lm, dtype=np.float64)
    return _weighted_vec(1.0 - cfg.lambda_ctc, c_ce) + _weighted_vec(cfg.lambda_lm, c_lm)


@dataclass(frozen=True, eq=False)
class Hypothesis:
    prefix: tuple[int, ...]
    total_cost: float
    ctc_cost: float
    ce_cost: float
    lm_cost: float
    ctc_state: Optional[PrefixState] = field(default=None, repr=False)
    decoder_state: Any = field(default=None, repr=False)
    lm_state: Any = field(default=None, repr=False)
    finished: bool = False

    def sort_key(self):
        return (self.total_cost, len(self.prefix), self.prefix)


@dataclass
class DecodeStats:
    mode: str = "beam"
    steps: int = 0
    prefix_evals: int = 0
    max_prefix_evals_per_hyp_step: int = 0
    scorer_steps: int = 0
    wall_time: float = 0.0


@dataclass
class DecodeResult:
    best: Hypothesis
    n_best: list[Hypothesis]
    stats: DecodeStats


def _ranked(hyps):
    return sorted(hyps, key=Hypothesis.sort_key)


def beam_decode(m: ConfidenceMatrix, decoder, lm=None, cfg: DecodeConfig = DecodeConfig()) -> DecodeResult:
    t0 = time.perf_counter()
    if lm is None and cfg.lambda_lm != 0:
        cfg = replace(cfg, lambda_lm=0.0)
    V = m.alphabet_size + 1
    eos = m.alphabet_size
    max_len = cfg.max_len if cfg.max_len is not None else m.n_frames
    k = cfg.pre_beam_size
    prune = cfg.pre_beam and k < V
    use_lm = lm is not None and cfg.lambda_lm > 0
    stats = DecodeStats()
    zeros = np.zeros(V)

    root = Hypothesis(
        prefix=(),
        total_cost=0.0,
        ctc_cost=0.0,
        ce_cost=0.0,
        lm_cost=0.0,
        ctc_state=prefix_state_init(m),
        decoder_state=decoder.initial_state(),
        lm_state=lm.initial_state() if use_lm else None,
    )
    open_hyps = [root]
    finished: list[Hypothesis] = []

    while open_hyps:
        stats.steps += 1
        # (parent, symbol, ce, lm) for candidates still needing a CTC extension
        pending = []
        new_finished = []
        for hyp in open_hyps:
            c_ce = np.asarray(decoder.step(hyp.decoder_state), dtype=np.float64)
            c_lm = np.asarray(lm.step(hyp.lm_state), dtype=np.float64) if use_lm else zeros
            stats.scorer_steps += 1 + int(use_lm)
            if len(hyp.prefix) >= max_len:
                symbols = [eos]
            else:
                pre = combine_pre(c_ce, c_lm, cfg)
                if prune:
                    symbols = [int(s) for s in np.argsort(pre, kind="stable")[:k]]
                    if eos not in symbols:
                        symbols.append(eos)
                else:
                    symbols = list(range(V))
            n_ext = 0
            for s in symbols:
                if s == eos:
                    d_ctc = prefix_eos_cost(hyp.ctc_state)
                    ctc = hyp.ctc_cost + d_ctc
                    ce = hyp.ce_cost + float(c_ce[s])
                    lmc = hyp.lm_cost + float(c_lm[s])
                    total = fuse(cfg, ctc, ce, lmc)
                    if total < INF:
                        new_finished.append(
                            Hypothesis(hyp.prefix, total, ctc, ce, lmc, hyp.ctc_state, hyp.decoder_state, hyp.lm_state, True)
                        )
                else:
                    if fuse(cfg, 0.0, float(c_ce[s]), float(c_lm[s])) == INF:
                        continue
                    pending.append((hyp, s, float(c_ce[s]), float(c_lm[s])))
                    n_ext += 1
            stats.max_prefix_evals_per_hyp_step = max(stats.max_prefix_evals_per_hyp_step, n_ext)

        candidates = []
        if pending:
            children, deltas = prefix_extend_batch([p[0].ctc_state for p in pending], [p[1] for p in pending], m)
            stats.prefix_evals += len(pending)
            for (hyp, s, ce_d, lm_d), child, d_ctc in zip(pending, children, deltas):
                ctc = hyp.ctc_cost + float(d_ctc)
                ce = hyp.ce_cost + ce_d
                lmc = hyp.lm_cost + lm_d
                total = fuse(cfg, ctc, ce, lmc)
                if total < INF:
                    candidates.append((total, hyp, s, child, ctc, ce, lmc))

        candidates.sort(key=lambda c: (c[0], len(c[1].prefix) + 1, c[1].prefix + (c[2],)))
        open_hyps = []
        for total, hyp, s, child, ctc, ce, lmc in candidates[: cfg.n_beams]:
            open_hyps.append(
                Hypothesis(
                    hyp.prefix + (s,),
                    total,
                    ctc,
                    ce,
                    lmc,
                    child,
                    decoder.advance(hyp.decoder_state, s),
                    lm.advance(hyp.lm_state, s) if use_lm else None,
                )
            )

        finished.extend(new_finished)
        if not cfg.keep_all_finished and finished:
            finished = _ranked(finished)[:1]
        if stats.steps == 1 and not open_hyps and not finished:
            raise NoHypothesisSurvived("every first-step candidate has infinite cost")
        if finished:
            best_finished = min(h.total_cost for h in finished)
            if all(h.total_cost > best_finished for h in open_hyps):
                break

    if not finished:
        raise NoHypothesisSurvived("search ended without a finite-cost finished hypothesis")
    n_best = _ranked(finished)
    stats.wall_time = time.perf_counter() - t0
    return DecodeResult(n_best[0], n_best, stats)


def decode_best_path_mode(m: ConfidenceMatrix) -> tuple[int, ...]:
    return best_path_decode(m)[0]


def decode(m: ConfidenceMatrix, mode: str = "beam", decoder=None, lm=None, cfg: DecodeConfig = DecodeConfig()) -> DecodeResult:
    """Single entry point for both decoding modes (``"bestpath"`` or ``"beam"``)."""
    if mode == "bestpath":
        t0 = time.perf_counter()
        prefix, logp = best_path_decode(m)
        hyp = Hypothesis(prefix, -logp, -logp, 0.0, 0.0, finished=True)
        stats = DecodeStats(mode="bestpath", steps=0, wall_time=time.perf_counter() - t0)
        return DecodeResult(hyp, [hyp], stats)
    if mode == "beam":
        if decoder is None:
            raise ConfigError("beam mode needs a decoder scorer")
        return beam_decode(m, decoder, lm, cfg)
    raise ConfigError(f"unknown decoding mode {mode!r}")

import math

import numpy as np
import pytest
from conftest import TableScorer, alphabet_of_size, random_matrix

from ctcfuse.beam import (
    ConfigError,
    DecodeConfig,
    NoHypothesisSurvived,
    beam_decode,
    combine_pre,
    decode,
    decode_best_path_mode,
    fuse,
)
from ctcfuse.core import Alphabet, encode_text
from ctcfuse.ctc import best_path_decode, ctc_full_log_prob, prefix_eos_cost, prefix_extend, prefix_state_init
from ctcfuse.oracle import all_transcripts, exhaustive_decode
from ctcfuse.scorers import TeacherScorer, UniformScorer, ngram_train
from ctcfuse.synth import SynthConfig, synth_matrix


def test_combine_pre():
    ce = np.array([0.5, 1.0, math.inf])
    lm = np.array([2.0, 0.1, 0.3])
    assert combine_pre(ce, lm, DecodeConfig(lambda_ctc=1.0, lambda_lm=0.0)).tolist() == [0.0, 0.0, 0.0]
    assert combine_pre(ce, lm, DecodeConfig(lambda_ctc=0.3, lambda_lm=0.0)).tolist() == pytest.approx([0.35, 0.7, math.inf])
    uni = np.full(3, math.log(3))
    shifted = combine_pre(ce, uni, DecodeConfig(lambda_ctc=0.3, lambda_lm=0.5))
    assert shifted[:2] - 0.7 * ce[:2] == pytest.approx([0.5 * math.log(3)] * 2)
    assert np.argmin(shifted) == np.argmin(0.7 * ce)


@pytest.mark.parametrize(
    "kwargs", [dict(lambda_ctc=1.5), dict(lambda_lm=-0.1), dict(n_beams=0), dict(pre_beam_factor=0.5), dict(max_len=0)]
)
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        DecodeConfig(**kwargs)


def test_teacher_on_low_noise_matrix():
    alpha = Alphabet(tuple("abc"))
    ref = encode_text(alpha, "ab")
    m = synth_matrix(ref, alpha, SynthConfig(frames_per_char=1, blank_frames_between=0, noise_temperature=0.3, rng_seed=4))
    teacher = TeacherScorer(alpha, ref, 0.9)
    cfg = DecodeConfig(lambda_ctc=0.3, n_beams=5)
    res = beam_decode(m, teacher, None, cfg)
    assert res.best.prefix == ref
    ranked = exhaustive_decode(m, teacher, None, 0.3, 0.0, m.n_frames)
    assert ranked[0][1] == ref


@pytest.mark.parametrize("n_beams", [1, 3, 7])
def test_teacher_only_returns_reference(n_beams):
    alpha = Alphabet(tuple("abcd"))
    rng = np.random.default_rng(2)
    ref = (2, 2, 0, 3, 1)
    m = random_matrix(rng, 8, 4)
    res = beam_decode(m, TeacherScorer(alpha, ref, 0.9), None, DecodeConfig(lambda_ctc=0.0, n_beams=n_beams))
    assert res.best.prefix == ref


def _exhaustive_cfg(A, max_len, **kw):
    n = sum(A**k for k in range(max_len + 1))
    return DecodeConfig(n_beams=n, pre_beam=False, max_len=max_len, **kw)


@pytest.mark.parametrize("seed", range(8))
def test_matches_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    A = int(rng.integers(1, 4))
    T = int(rng.integers(2, 6))
    max_len = int(rng.integers(1, 5))
    m = random_matrix(rng, T, A)
    dec = TableScorer(A, seed)
    lm = ngram_train(["ab", "ba", "abc", "c"], Alphabet(tuple("abc")[:A]), order=2)
    for lc in (0.0, 0.3, 1.0):
        for ll in (0.0, 0.5):
            ranked = exhaustive_decode(m, dec, lm, lc, ll, max_len)
            res = beam_decode(m, dec, lm, _exhaustive_cfg(A, max_len, lambda_ctc=lc, lambda_lm=ll))
            assert res.best.prefix == ranked[0][1]
            assert res.best.total_cost == pytest.approx(ranked[0][0], abs=1e-9)


def test_pure_ctc_objective_is_max_full_probability():
    rng = np.random.default_rng(21)
    for _ in range(10):
        m = random_matrix(rng, 4, 2)
        res = beam_decode(m, UniformScorer(alphabet_of_size(2)), None, _exhaustive_cfg(2, 4, lambda_ctc=1.0))
        best = max(all_transcripts(2, 4), key=lambda y: (ctc_full_log_prob(m, y), -len(y)))
        assert res.best.prefix == best
        assert res.best.total_cost == pytest.approx(-ctc_full_log_prob(m, best), abs=1e-9)


def test_uniform_decoder_without_ctc_prefers_short():
    alpha = alphabet_of_size(3)
    m = random_matrix(np.random.default_rng(0), 4, 3)
    res = beam_decode(m, UniformScorer(alpha), None, DecodeConfig(lambda_ctc=0.0, n_beams=4, pre_beam=False))
    assert res.best.prefix == ()
    same_len = [h.prefix for h in res.n_best if len(h.prefix) == 1]
    assert same_len == sorted(same_len)


def _replay(m, decoder, lm, prefix):
    st = prefix_state_init(m)
    ctc = ce = lmc = 0.0
    ds = decoder.initial_state()
    ls = lm.initial_state() if lm is not None else None
    for c in prefix:
        st, d = prefix_extend(st, c, m)
        ctc += d
        ce += float(decoder.step(ds)[c])
        ds = decoder.advance(ds, c)
        if lm is not None:
            lmc += float(lm.step(ls)[c])
            ls = lm.advance(ls, c)
    eos = m.alphabet_size
    ctc += prefix_eos_cost(st)
    ce += float(decoder.step(ds)[eos])
    if lm is not None:
        lmc += float(lm.step(ls)[eos])
    return ctc, ce, lmc


def test_cost_accounting_replay():
    rng = np.random.default_rng(8)
    alpha = alphabet_of_size(3)
    lm = ngram_train(["abc", "cab", "bb"], alpha, order=3)
    for seed in range(5):
        m = random_matrix(rng, 6, 3)
        dec = TableScorer(3, seed)
        cfg = DecodeConfig(lambda_ctc=0.3, lambda_lm=0.5, n_beams=3)
        res = beam_decode(m, dec, lm, cfg)
        for h in res.n_best:
            ctc, ce, lmc = _replay(m, dec, lm, h.prefix)
            assert h.ctc_cost == pytest.approx(ctc, abs=1e-9)
            assert h.ce_cost == pytest.approx(ce, abs=1e-9)
            assert h.lm_cost == pytest.approx(lmc, abs=1e-9)
            assert h.total_cost == pytest.approx(fuse(cfg, ctc, ce, lmc), abs=1e-9)
        costs = [h.total_cost for h in res.n_best]
        assert costs == sorted(costs) and res.best is res.n_best[0]


def _signature(res):
    return [(h.prefix, h.total_cost, h.ctc_cost, h.ce_cost, h.lm_cost) for h in res.n_best]


def test_deterministic():
    m = random_matrix(np.random.default_rng(3), 7, 3)
    dec = TableScorer(3, 1)
    cfg = DecodeConfig(n_beams=4)
    assert _signature(beam_decode(m, dec, None, cfg)) == _signature(beam_decode(m, TableScorer(3, 1), None, cfg))


def test_zero_weight_lm_is_no_lm():
    alpha = alphabet_of_size(3)
    m = random_matrix(np.random.default_rng(4), 7, 3)
    dec = TableScorer(3, 2)
    cfg = DecodeConfig(lambda_lm=0.0, n_beams=3)
    with_lm = beam_decode(m, dec, UniformScorer(alpha), cfg)
    without = beam_decode(m, dec, None, cfg)
    assert _signature(with_lm) == _signature(without)


def test_pruning_neutral_when_pre_beam_covers_alphabet():
    rng = np.random.default_rng(6)
    for n_beams in (3, 4, 6):
        assert math.ceil(1.5 * n_beams) >= 4
        m = random_matrix(rng, 6, 3)
        dec = TableScorer(3, n_beams)
        on = beam_decode(m, dec, None, DecodeConfig(n_beams=n_beams))
        off = beam_decode(m, dec, None, DecodeConfig(n_beams=n_beams, pre_beam=False))
        assert _signature(on) == _signature(off)


def test_pre_beam_bounds_prefix_evaluations():
    alpha = alphabet_of_size(10)
    m = random_matrix(np.random.default_rng(1), 12, 10)
    for n_beams in (1, 2, 4):
        res = beam_decode(m, TableScorer(10, 0), None, DecodeConfig(n_beams=n_beams))
        assert 0 < res.stats.max_prefix_evals_per_hyp_step <= math.ceil(1.5 * n_beams)
    full = beam_decode(m, TableScorer(10, 0), None, DecodeConfig(n_beams=1, pre_beam=False))
    assert full.stats.max_prefix_evals_per_hyp_step == alpha.size


def test_exhaustive_width_never_beaten():
    for seed in range(30):
        rng = np.random.default_rng(seed)
        m = random_matrix(rng, 5, 3)
        dec = TableScorer(3, seed)
        wide = beam_decode(m, dec, None, DecodeConfig(n_beams=400, pre_beam=False)).best.total_cost
        for n in (1, 2, 3, 5, 8):
            assert wide <= beam_decode(m, dec, None, DecodeConfig(n_beams=n, pre_beam=False)).best.total_cost + 1e-12


def test_wider_beam_is_not_always_better():
    # global top-n selection does not nest across widths, so a wider beam can end worse
    rng = np.random.default_rng(215)
    A = int(rng.integers(2, 4))
    T = int(rng.integers(3, 7))
    m = random_matrix(rng, T, A)
    dec = TableScorer(A, 215)
    cost = {n: beam_decode(m, dec, None, DecodeConfig(n_beams=n, pre_beam=False)).best.total_cost for n in (1, 2)}
    assert cost[2] > cost[1]


def test_max_len_forces_finish():
    m = random_matrix(np.random.default_rng(2), 6, 2)
    res = beam_decode(m, TableScorer(2, 0), None, DecodeConfig(n_beams=3, max_len=1))
    assert all(len(h.prefix) <= 1 for h in res.n_best)


def test_keep_only_best_finished():
    m = random_matrix(np.random.default_rng(2), 6, 2)
    keep_all = beam_decode(m, TableScorer(2, 0), None, DecodeConfig(n_beams=3))
    keep_one = beam_decode(m, TableScorer(2, 0), None, DecodeConfig(n_beams=3, keep_all_finished=False))
    assert len(keep_one.n_best) == 1
    assert keep_one.best.prefix == keep_all.best.prefix


class DeadScorer:
    def initial_state(self):
        return None

    def step(self, state):
        return np.full(3, math.inf)

    def advance(self, state, c):
        return None


def test_no_hypothesis_survived():
    m = random_matrix(np.random.default_rng(0), 3, 2)
    with pytest.raises(NoHypothesisSurvived):
        beam_decode(m, DeadScorer(), None, DecodeConfig(lambda_ctc=0.3))


def test_bestpath_mode():
    m = random_matrix(np.random.default_rng(9), 5, 2)
    res = decode(m, "bestpath")
    assert res.best.prefix == best_path_decode(m)[0] == decode_best_path_mode(m)
    assert res.stats.prefix_evals == 0 and res.stats.scorer_steps == 0
    with pytest.raises(ConfigError):
        decode(m, "beam")
    with pytest.raises(ConfigError):
        decode(m, "greedy")

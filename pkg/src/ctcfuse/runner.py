"""Corpus-level decoding, run manifests and the throughput harness."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .beam import ConfigError, DecodeConfig, DecodeResult, decode
from .core import Alphabet, ConfidenceMatrix, decode_text
from .metrics import evaluate
from .scorers import TeacherScorer


@dataclass
class DecodeJob:
    """Everything needed to decode a corpus except the matrices."""

    alphabet: Alphabet
    mode: str = "beam"
    cfg: DecodeConfig = field(default_factory=DecodeConfig)
    teacher_refs: Optional[Sequence[Sequence[int]]] = None
    teacher_mass: float = 0.9
    lm: object = None

    def __post_init__(self):
        if self.mode not in ("bestpath", "beam"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "beam" and self.teacher_refs is None:
            raise ConfigError("beam mode needs a decoder scorer source (teacher references)")

    def decode_line(self, i: int, m: ConfidenceMatrix) -> DecodeResult:
        if self.mode == "bestpath":
            return decode(m, "bestpath")
        dec = TeacherScorer(self.alphabet, self.teacher_refs[i], self.teacher_mass)
        return decode(m, "beam", dec, self.lm, self.cfg)


_worker_job: Optional[DecodeJob] = None


def _init_worker(job: DecodeJob) -> None:
    global _worker_job
    _worker_job = job


def _decode_one(args):
    i, m = args
    return _worker_job.decode_line(i, m)


def decode_corpus(job: DecodeJob, matrices: Sequence[ConfidenceMatrix], jobs: int = 1):
    """Decode one line at a time (or ``jobs`` lines in parallel).

    Returns ``(results, seconds)``; the timing covers the decode loop only.
    """
    if job.teacher_refs is not None and job.mode == "beam" and len(job.teacher_refs) != len(matrices):
        raise ValueError(f"{len(job.teacher_refs)} teacher references for {len(matrices)} matrices")
    t0 = time.perf_counter()
    if jobs <= 1:
        results = [job.decode_line(i, m) for i, m in enumerate(matrices)]
    else:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(job,)) as pool:
            results = list(pool.map(_decode_one, enumerate(matrices), chunksize=4))
    return results, time.perf_counter() - t0


def _num(x: float):
    return x if math.isfinite(x) else str(x)


def build_manifest(job: DecodeJob, names: Sequence[str], results: Sequence[DecodeResult], seconds: float, nbest: int = 1, extra_config=None) -> dict:
    alphabet = job.alphabet
    lines = []
    for name, r in zip(names, results):
        b = r.best
        lines.append(
            {
                "file": name,
                "transcript": decode_text(alphabet, b.prefix),
                "total_cost": _num(b.total_cost),
                "ctc_cost": _num(b.ctc_cost),
                "ce_cost": _num(b.ce_cost),
                "lm_cost": _num(b.lm_cost),
                "n_best": [
                    {"transcript": decode_text(alphabet, h.prefix), "total_cost": _num(h.total_cost)}
                    for h in r.n_best[:nbest]
                ],
                "steps": r.stats.steps,
                "prefix_evals": r.stats.prefix_evals,
            }
        )
    config = {"mode": job.mode, "teacher_mass": job.teacher_mass, **asdict(job.cfg)}
    if extra_config:
        config.update(extra_config)
    return {
        "config": config,
        "lines": lines,
        "stats": {
            "lines": len(results),
            "prefix_evals": sum(r.stats.prefix_evals for r in results),
            "max_prefix_evals_per_hyp_step": max((r.stats.max_prefix_evals_per_hyp_step for r in results), default=0),
            "pre_beam_bound": job.cfg.pre_beam_size,
        },
        "timing": {
            "nondeterministic": True,
            "decode_seconds": seconds,
            "lines_per_second": len(results) / seconds if seconds > 0 else None,
        },
    }


@dataclass
class BenchRow:
    name: str
    mode: str
    n_beams: int
    lines: int
    seconds: float
    lines_per_second: float
    prefix_evals: int
    max_prefix_evals_per_hyp_step: int
    pre_beam_bound: Optional[int]
    cer: Optional[float] = None
    transcripts: list = field(default_factory=list, repr=False)


def run_bench(named_jobs: Sequence[tuple[str, DecodeJob]], matrices: Sequence[ConfidenceMatrix], references: Optional[Sequence[str]] = None) -> list[BenchRow]:
    """Time every configuration over the whole corpus with batch size 1."""
    if not matrices:
        raise ValueError("empty corpus")
    rows = []
    for name, job in named_jobs:
        results, seconds = decode_corpus(job, matrices)
        hyps = [decode_text(job.alphabet, r.best.prefix) for r in results]
        beam = job.mode == "beam"
        rows.append(
            BenchRow(
                name=name,
                mode=job.mode,
                n_beams=job.cfg.n_beams if beam else 0,
                lines=len(results),
                seconds=seconds,
                lines_per_second=len(results) / seconds if seconds > 0 else math.inf,
                prefix_evals=sum(r.stats.prefix_evals for r in results),
                max_prefix_evals_per_hyp_step=max(r.stats.max_prefix_evals_per_hyp_step for r in results),
                pre_beam_bound=job.cfg.pre_beam_size if beam and job.cfg.pre_beam else None,
                cer=evaluate(hyps, references).cer if references is not None else None,
                transcripts=hyps,
            )
        )
    return rows


def format_bench(rows: Sequence[BenchRow]) -> str:
    head = f"{'config':<16} {'mode':<9} {'beams':>5} {'lines':>5} {'lines/s*':>10} {'prefix evals':>12} {'max/hyp/step':>12} {'bound':>5} {'CER%':>7}"
    out = [head, "-" * len(head)]
    for r in rows:
        cer = f"{100 * r.cer:7.2f}" if r.cer is not None else f"{'-':>7}"
        bound = str(r.pre_beam_bound) if r.pre_beam_bound is not None else "-"
        out.append(
            f"{r.name:<16} {r.mode:<9} {r.n_beams:>5} {r.lines:>5} {r.lines_per_second:>10.2f} "
            f"{r.prefix_evals:>12} {r.max_prefix_evals_per_hyp_step:>12} {bound:>5} {cer}"
        )
    out.append("* wall-clock timing of the decode loop, batch size 1; nondeterministic")
    return "\n".join(out)

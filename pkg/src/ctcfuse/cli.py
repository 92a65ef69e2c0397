"""Command line: ``ctcfuse {synth,decode,train-lm,eval,bench}``.

Exit codes: 0 success, 2 input/data errors, 3 configuration errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import io
from .beam import ConfigError, DecodeConfig
from .core import UnknownCharacter, encode_text
from .metrics import evaluate
from .runner import DecodeJob, build_manifest, decode_corpus, format_bench, run_bench
from .scorers import DEFAULT_ORDER, EmptyCorpus, ModelFormatError, NgramModel, UniformScorer, ngram_eval_topk, ngram_train, perplexity
from .synth import CorpusError, SynthConfig, synth_corpus

EXIT_DATA = 2
EXIT_CONFIG = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_DATA):
        super().__init__(message)
        self.code = code


def _alphabet(path):
    try:
        return io.read_alphabet(path)
    except (OSError, ValueError) as e:
        raise CliError(f"cannot read alphabet {path}: {e}")


def _lines(path, what):
    try:
        return io.read_lines(path)
    except OSError as e:
        raise CliError(f"cannot read {what} {path}: {e}")


def _encode_lines(alphabet, lines, path):
    out, bad = [], []
    for i, line in enumerate(lines):
        try:
            out.append(encode_text(alphabet, line))
        except UnknownCharacter as e:
            bad.append(f"{path}:{i + 1}: {e}")
    if bad:
        raise CliError("\n".join(bad))
    return out


def _load_lm(source, alphabet):
    if source is None:
        return None
    if source == "uniform":
        return UniformScorer(alphabet)
    try:
        model = NgramModel.load(source)
    except (OSError, ModelFormatError, ValueError, KeyError) as e:
        raise CliError(f"cannot load LM {source}: {e}")
    if model.alphabet != alphabet:
        raise CliError(f"LM {source} was trained on a different alphabet", EXIT_CONFIG)
    return model


def _load_matrices(directory):
    files = io.matrix_files(directory)
    matrices = []
    for f in files:
        try:
            matrices.append(io.read_matrix(f))
        except (OSError, io.MatrixFormatError) as e:
            raise CliError(f"malformed matrix file {f}: {e}")
    return files, matrices


def _make_job(alphabet, n_matrices, mode, beams, lambda_ctc, lambda_lm, pre_beam_factor, pre_beam, max_len, lm_source, teacher, teacher_mass):
    try:
        if not 0.0 <= lambda_lm <= 1.0:
            raise ConfigError(f"lambda_lm must lie in [0, 1], got {lambda_lm}")
        lm = _load_lm(lm_source, alphabet)
        cfg = DecodeConfig(
            lambda_ctc=lambda_ctc,
            lambda_lm=lambda_lm if lm is not None else 0.0,
            n_beams=beams,
            pre_beam_factor=pre_beam_factor,
            pre_beam=pre_beam,
            max_len=max_len,
        )
        if not 0.5 < teacher_mass < 1.0:
            raise ConfigError("teacher mass must lie in (0.5, 1)")
        refs = None
        if mode == "beam":
            if teacher is None:
                raise ConfigError("beam mode needs --teacher (decoder scorer source)")
            refs = _encode_lines(alphabet, _lines(teacher, "teacher file"), teacher)
            if len(refs) != n_matrices:
                raise CliError(f"{teacher} has {len(refs)} lines for {n_matrices} matrices")
        return DecodeJob(alphabet, mode, cfg, refs, teacher_mass, lm)
    except ConfigError as e:
        raise CliError(str(e), EXIT_CONFIG)


def cmd_synth(args):
    alphabet = _alphabet(args.alphabet)
    texts = _lines(args.texts, "texts")
    try:
        cfg = SynthConfig(
            frames_per_char=args.frames_per_char,
            blank_frames_between=args.blank_frames,
            peak_confidence=args.peak,
            noise_temperature=args.noise,
            rng_seed=args.seed,
        )
    except ValueError as e:
        raise CliError(str(e), EXIT_CONFIG)
    try:
        corpus = synth_corpus(texts, alphabet, cfg)
    except CorpusError as e:
        raise CliError("\n".join(f"{args.texts}:{i + 1}: {err}" for i, err in e.errors))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(len(corpus))))
    for i, (m, _) in enumerate(corpus):
        io.write_matrix(out / f"line_{i:0{width}d}{io.MATRIX_SUFFIX}", m)
    io.write_lines(out / "references.txt", texts)
    print(f"wrote {len(corpus)} matrices and references.txt to {out}")


def cmd_decode(args):
    alphabet = _alphabet(args.alphabet)
    files, matrices = _load_matrices(args.matrices)
    for f, m in zip(files, matrices):
        if m.alphabet_size != alphabet.size:
            raise CliError(f"{f}: matrix has {m.alphabet_size} characters, alphabet has {alphabet.size}")
    job = _make_job(
        alphabet, len(matrices), args.mode, args.beams, args.lambda_ctc, args.lambda_lm,
        args.pre_beam_factor, not args.no_pre_beam, args.max_len, args.lm, args.teacher, args.teacher_mass,
    )
    results, seconds = decode_corpus(job, matrices, jobs=args.jobs)
    manifest = build_manifest(job, [f.name for f in files], results, seconds, nbest=args.nbest, extra_config={"lm": args.lm})
    transcripts = [line["transcript"] for line in manifest["lines"]]
    if args.out:
        io.write_lines(args.out, transcripts)
        manifest_path = args.manifest or f"{args.out}.manifest.json"
    else:
        for t in transcripts:
            print(t)
        manifest_path = args.manifest
    if manifest_path:
        Path(manifest_path).write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    stats = manifest["stats"]
    print(f"decoded {len(results)} lines ({args.mode}); prefix evals {stats['prefix_evals']}", file=sys.stderr)


def cmd_train_lm(args):
    alphabet = _alphabet(args.alphabet)
    corpus = _lines(args.corpus, "corpus")
    if args.order < 1:
        raise CliError("--order must be >= 1", EXIT_CONFIG)
    try:
        model = ngram_train(corpus, alphabet, order=args.order)
    except EmptyCorpus as e:
        raise CliError(str(e))
    model.save(args.out)
    ppl = perplexity(model, alphabet, corpus)
    print(f"order {args.order}, {len(corpus)} lines, training perplexity {ppl:.4f} (uniform {alphabet.n_symbols})")
    if model.skipped_chars:
        print(f"skipped {model.skipped_chars} characters outside the alphabet")
    if args.heldout:
        held = _lines(args.heldout, "held-out corpus")
        for k in (1, 10):
            print(f"top-{k} accuracy {100 * ngram_eval_topk(model, held, k):.2f}%")


def cmd_eval(args):
    hyps = _lines(args.hyp, "hypotheses")
    refs = _lines(args.ref, "references")
    if len(hyps) != len(refs):
        raise CliError(f"line count mismatch: {len(hyps)} hypotheses, {len(refs)} references")
    report = evaluate(hyps, refs)
    if args.json:
        print(json.dumps({
            "cer": report.cer, "wer": report.wer,
            "char_errors": report.char_errors, "char_total": report.char_total,
            "word_errors": report.word_errors, "word_total": report.word_total,
            "lines": [vars(s) for s in report.lines],
        }))
        return
    def pct(x):
        return "n/a" if x is None else f"{100 * x:.2f}"
    if not args.quiet:
        for i, s in enumerate(report.lines, 1):
            print(f"line {i}: CER {pct(s.cer)} ({s.char_distance}/{s.char_ref_len}) WER {pct(s.wer)} ({s.word_distance}/{s.word_ref_len})")
    print(f"CER {pct(report.cer)} ({report.char_errors}/{report.char_total})")
    print(f"WER {pct(report.wer)} ({report.word_errors}/{report.word_total})")


def _bench_jobs(config_path, alphabet, n_matrices):
    path = Path(config_path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise CliError(f"cannot read configs {path}: {e}", EXIT_CONFIG)
    entries = data["configs"] if isinstance(data, dict) else data
    defaults = data if isinstance(data, dict) else {}

    def rel(p):
        if p is None or p == "uniform":
            return p
        p = Path(p)
        return str(p if p.is_absolute() else path.parent / p)

    jobs = []
    for e in entries:
        get = lambda key, default=None: e.get(key, defaults.get(key, default))  # noqa: E731
        jobs.append((
            e.get("name", f"config{len(jobs)}"),
            _make_job(
                alphabet, n_matrices, get("mode", "beam"), get("beams", 5), get("lambda_ctc", 0.3),
                get("lambda_lm", 0.5), get("pre_beam_factor", 1.5), get("pre_beam", True), get("max_len"),
                rel(get("lm")), rel(get("teacher")), get("teacher_mass", 0.9),
            ),
        ))
    return jobs


def cmd_bench(args):
    alphabet = _alphabet(args.alphabet)
    files, matrices = _load_matrices(args.matrices)
    if not matrices:
        raise CliError(f"no matrix files in {args.matrices}")
    jobs = _bench_jobs(args.configs, alphabet, len(matrices))
    refs = _lines(args.ref, "references") if args.ref else None
    rows = run_bench(jobs, matrices, refs)
    print(format_bench(rows))
    if args.json:
        payload = [{k: v for k, v in vars(r).items() if k != "transcripts"} for r in rows]
        Path(args.json).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _finite_float(s):
    x = float(s)
    if not math.isfinite(x):
        raise argparse.ArgumentTypeError("expected a finite number")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctcfuse", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate synthetic confidence matrices")
    s.add_argument("--texts", required=True)
    s.add_argument("--alphabet", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--frames-per-char", type=int, default=3)
    s.add_argument("--blank-frames", type=int, default=1)
    s.add_argument("--peak", type=_finite_float, default=0.9)
    s.add_argument("--noise", type=_finite_float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    d = sub.add_parser("decode", help="decode a directory of matrices")
    d.add_argument("--matrices", required=True)
    d.add_argument("--alphabet", required=True)
    d.add_argument("--mode", choices=["bestpath", "beam"], default="beam")
    d.add_argument("--beams", type=int, default=5)
    d.add_argument("--lambda-ctc", type=_finite_float, default=0.3)
    d.add_argument("--lambda-lm", type=_finite_float, default=0.5)
    d.add_argument("--lm", help="NGLM file, or 'uniform'")
    d.add_argument("--teacher", help="reference lines for the teacher decoder scorer, aligned with the matrices")
    d.add_argument("--teacher-mass", type=_finite_float, default=0.9)
    d.add_argument("--pre-beam-factor", type=_finite_float, default=1.5)
    d.add_argument("--no-pre-beam", action="store_true")
    d.add_argument("--max-len", type=int)
    d.add_argument("--nbest", type=int, default=1)
    d.add_argument("--out")
    d.add_argument("--manifest")
    d.add_argument("--jobs", type=int, default=1, help="decode lines in parallel (not for benchmarking)")
    d.set_defaults(func=cmd_decode)

    t = sub.add_parser("train-lm", help="train a character n-gram LM")
    t.add_argument("--corpus", required=True)
    t.add_argument("--alphabet", required=True)
    t.add_argument("--order", type=int, default=DEFAULT_ORDER)
    t.add_argument("--out", required=True)
    t.add_argument("--heldout")
    t.set_defaults(func=cmd_train_lm)

    e = sub.add_parser("eval", help="CER/WER of hypotheses against references")
    e.add_argument("--hyp", required=True)
    e.add_argument("--ref", required=True)
    e.add_argument("--json", action="store_true")
    e.add_argument("--quiet", action="store_true", help="totals only")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="throughput of decoding configurations")
    b.add_argument("--matrices", required=True)
    b.add_argument("--alphabet", required=True)
    b.add_argument("--configs", required=True)
    b.add_argument("--ref")
    b.add_argument("--json")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""On-disk formats: alphabet files, ``CTCM`` matrix files, line-aligned text files.

A matrix file is little-endian::

    b"CTCM" | u16 version | u32 T | u32 |A| | T * (|A| + 1) float32, row-major, blank last
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .core import Alphabet, ConfidenceMatrix, InvalidMatrix

MATRIX_MAGIC = b"CTCM"
MATRIX_VERSION = 1
MATRIX_SUFFIX = ".ctcm"
_HEADER = struct.Struct("<4sHII")


class MatrixFormatError(ValueError):
    pass


def read_lines(path) -> list[str]:
    """UTF-8 text, one entry per newline-terminated line. Spaces are kept."""
    text = Path(path).read_text(encoding="utf-8")
    if not text:
        return []
    lines = text.split("\n")
    if lines[-1] == "":
        lines.pop()
    return [line[:-1] if line.endswith("\r") else line for line in lines]


def write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def read_alphabet(path) -> Alphabet:
    lines = read_lines(path)
    for i, line in enumerate(lines):
        if len(line) != 1:
            raise ValueError(f"{path}:{i + 1}: expected exactly one character, got {line!r}")
    return Alphabet(tuple(lines))


def write_alphabet(path, alphabet: Alphabet) -> None:
    write_lines(path, alphabet.chars)


def matrix_to_bytes(m: ConfidenceMatrix) -> bytes:
    header = _HEADER.pack(MATRIX_MAGIC, MATRIX_VERSION, m.n_frames, m.alphabet_size)
    return header + np.ascontiguousarray(m.logp, dtype="<f4").tobytes()


def matrix_from_bytes(data: bytes, name: str = "<bytes>") -> ConfidenceMatrix:
    if len(data) < _HEADER.size:
        raise MatrixFormatError(f"{name}: truncated header")
    magic, version, T, A = _HEADER.unpack_from(data)
    if magic != MATRIX_MAGIC:
        raise MatrixFormatError(f"{name}: bad magic {magic!r}")
    if version != MATRIX_VERSION:
        raise MatrixFormatError(f"{name}: unsupported version {version}")
    expected = _HEADER.size + 4 * T * (A + 1)
    if len(data) != expected:
        raise MatrixFormatError(f"{name}: expected {expected} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(T, A + 1)
    try:
        return ConfidenceMatrix(values.astype(np.float64))
    except InvalidMatrix as e:
        raise MatrixFormatError(f"{name}: {e}") from None


def write_matrix(path, m: ConfidenceMatrix) -> None:
    Path(path).write_bytes(matrix_to_bytes(m))


def read_matrix(path) -> ConfidenceMatrix:
    return matrix_from_bytes(Path(path).read_bytes(), str(path))


def matrix_files(directory) -> list[Path]:
    """Matrix files of a directory in deterministic (sorted filename) order."""
    return sorted(Path(directory).glob(f"*{MATRIX_SUFFIX}"))

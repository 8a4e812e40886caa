"""Word index over a reference set.

Every w-mer over {A,C,G,T} is packed two bits per base into a uint64 code.
The index is three parallel arrays (code, reference index, offset) sorted by
code with a stable sort, so occurrences of one word are contiguous and stay
in (reference, offset) order. Lookups are binary searches.

On-disk layout (little-endian):
    magic      8 bytes  b"AMRIDX1\\0"
    header     <IIQQ    word_size, n_refs, total_length, n_entries
    per ref    <I + utf-8 bytes, three times: id, title, sequence
    codes      n_entries * <u8
    ref_idx    n_entries * <u4
    offsets    n_entries * <u4
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from amr_drugclass_pipeline.seqio.fasta import SeqRecord

logger = logging.getLogger(__name__)

MIN_WORD_SIZE = 4
MAX_WORD_SIZE = 16
INDEX_MAGIC = b"AMRIDX1\0"
_HEADER = struct.Struct("<IIQQ")
_LEN = struct.Struct("<I")

_INVALID = 4
_ENCODE = np.full(256, _INVALID, dtype=np.uint8)
for _code, _base in enumerate(b"ACGT"):
    _ENCODE[_base] = _code


class EmptyReferenceSet(ValueError):
    """No reference sequences were supplied."""


class InvalidWordSize(ValueError):
    def __init__(self, word_size: int) -> None:
        super().__init__(
            f"word_size must be between {MIN_WORD_SIZE} and {MAX_WORD_SIZE}, got {word_size}"
        )
        self.word_size = word_size


class IndexFormatError(ValueError):
    """An index file is truncated or was not written by this package."""


def encode(sequence: str) -> np.ndarray:
    """Map bases to 0..3 (A, C, G, T); anything else becomes 4."""
    return _ENCODE[np.frombuffer(sequence.encode("ascii"), dtype=np.uint8)]


def word_codes(sequence: str, word_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Packed codes of every w-mer and a mask of those free of non-ACGT bases."""
    n_words = len(sequence) - word_size + 1
    if n_words <= 0:
        return np.empty(0, dtype=np.uint64), np.empty(0, dtype=bool)
    enc = encode(sequence)
    bases = (enc & 3).astype(np.uint64)
    codes = np.zeros(n_words, dtype=np.uint64)
    for j in range(word_size):
        codes = (codes << np.uint64(2)) | bases[j : j + n_words]
    bad = np.concatenate(([0], np.cumsum(enc == _INVALID)))
    valid = (bad[word_size:] - bad[:n_words]) == 0
    return codes, valid


def pack_word(word: str) -> int:
    codes, valid = word_codes(word.upper(), len(word))
    if len(codes) != 1 or not valid[0]:
        raise ValueError(f"Not an ACGT word: {word!r}")
    return int(codes[0])


@dataclass
class WordIndex:
    """Read-only word index plus the reference store it was built from."""

    word_size: int
    ref_ids: list[str]
    titles: list[str]
    sequences: list[str]
    codes: np.ndarray
    ref_idx: np.ndarray
    offsets: np.ndarray
    total_length: int
    _arrays: list[np.ndarray] = field(init=False, repr=False)
    _positions: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._arrays = [
            np.frombuffer(seq.encode("ascii"), dtype=np.uint8) for seq in self.sequences
        ]
        self._positions = {rid: i for i, rid in enumerate(self.ref_ids)}

    @property
    def n_refs(self) -> int:
        return len(self.ref_ids)

    @property
    def n_entries(self) -> int:
        return len(self.codes)

    def lookup(self, word: str) -> list[tuple[str, int]]:
        """All (reference id, offset) occurrences of a w-mer."""
        if len(word) != self.word_size:
            raise ValueError(f"Expected a {self.word_size}-mer, got {len(word)} bases")
        try:
            code = np.uint64(pack_word(word))
        except ValueError:
            return []
        lo = int(np.searchsorted(self.codes, code, side="left"))
        hi = int(np.searchsorted(self.codes, code, side="right"))
        return [
            (self.ref_ids[int(r)], int(o))
            for r, o in zip(self.ref_idx[lo:hi], self.offsets[lo:hi])
        ]

    def ranges(self, codes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised [start, stop) entry ranges for a batch of word codes."""
        return (
            np.searchsorted(self.codes, codes, side="left"),
            np.searchsorted(self.codes, codes, side="right"),
        )

    def subject_array(self, position: int) -> np.ndarray:
        return self._arrays[position]

    def position_of(self, ref_id: str) -> int | None:
        return self._positions.get(ref_id)


def _check_word_size(word_size: int) -> None:
    if not MIN_WORD_SIZE <= word_size <= MAX_WORD_SIZE:
        raise InvalidWordSize(word_size)


def build_index(references: Sequence[SeqRecord], word_size: int = 11) -> WordIndex:
    """Index every N-free w-mer of every reference."""
    _check_word_size(word_size)
    if not references:
        raise EmptyReferenceSet("Cannot build an index from zero reference sequences")

    code_parts: list[np.ndarray] = []
    ref_parts: list[np.ndarray] = []
    offset_parts: list[np.ndarray] = []
    for i, rec in enumerate(references):
        codes, valid = word_codes(rec.sequence, word_size)
        positions = np.flatnonzero(valid)
        code_parts.append(codes[positions])
        ref_parts.append(np.full(len(positions), i, dtype=np.uint32))
        offset_parts.append(positions.astype(np.uint32))

    codes = np.concatenate(code_parts)
    order = np.argsort(codes, kind="stable")
    index = WordIndex(
        word_size=word_size,
        ref_ids=[rec.id for rec in references],
        titles=[rec.header for rec in references],
        sequences=[rec.sequence for rec in references],
        codes=codes[order],
        ref_idx=np.concatenate(ref_parts)[order],
        offsets=np.concatenate(offset_parts)[order],
        total_length=sum(len(rec.sequence) for rec in references),
    )
    logger.info(
        "Indexed %d sequences (%d nt, %d words, w=%d)",
        index.n_refs,
        index.total_length,
        index.n_entries,
        word_size,
    )
    return index


def save_index(index: WordIndex, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as handle:
        handle.write(INDEX_MAGIC)
        handle.write(
            _HEADER.pack(index.word_size, index.n_refs, index.total_length, index.n_entries)
        )
        for rid, title, seq in zip(index.ref_ids, index.titles, index.sequences):
            for text in (rid, title, seq):
                raw = text.encode("utf-8")
                handle.write(_LEN.pack(len(raw)))
                handle.write(raw)
        handle.write(index.codes.astype("<u8").tobytes())
        handle.write(index.ref_idx.astype("<u4").tobytes())
        handle.write(index.offsets.astype("<u4").tobytes())
    logger.info("Saved index (%d words) to %s", index.n_entries, path)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, size: int) -> bytes:
        end = self.pos + size
        if end > len(self.data):
            raise IndexFormatError(f"Index truncated at byte {self.pos}")
        chunk = self.data[self.pos : end]
        self.pos = end
        return chunk

    def text(self) -> str:
        (size,) = _LEN.unpack(self.take(_LEN.size))
        return self.take(size).decode("utf-8")

    def array(self, dtype: str, count: int) -> np.ndarray:
        width = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(width * count), dtype=dtype).copy()


def load_index(path: Path) -> WordIndex:
    if not path.exists():
        raise FileNotFoundError(f"Index file not found: {path}")
    reader = _Reader(path.read_bytes())
    if reader.take(len(INDEX_MAGIC)) != INDEX_MAGIC:
        raise IndexFormatError(f"{path} is not an index file (bad magic bytes)")
    word_size, n_refs, total_length, n_entries = _HEADER.unpack(reader.take(_HEADER.size))
    _check_word_size(word_size)

    ref_ids, titles, sequences = [], [], []
    for _ in range(n_refs):
        ref_ids.append(reader.text())
        titles.append(reader.text())
        sequences.append(reader.text())

    index = WordIndex(
        word_size=word_size,
        ref_ids=ref_ids,
        titles=titles,
        sequences=sequences,
        codes=reader.array("<u8", n_entries).astype(np.uint64),
        ref_idx=reader.array("<u4", n_entries).astype(np.uint32),
        offsets=reader.array("<u4", n_entries).astype(np.uint32),
        total_length=total_length,
    )
    if reader.pos != len(reader.data):
        raise IndexFormatError(f"{path} has {len(reader.data) - reader.pos} trailing bytes")
    logger.info("Loaded index with %d sequences from %s", index.n_refs, path)
    return index

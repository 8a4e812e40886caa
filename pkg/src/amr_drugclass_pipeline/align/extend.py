"""Seed extension: ungapped X-drop, gapped X-drop with affine gaps, and a
full Smith-Waterman scorer used as the reference for the gapped stage.

Sequences are uint8 arrays of ASCII bytes; identical bytes score ``match``.
The dynamic programmes run one row at a time with numpy. Within a row the
horizontal-gap state is a running maximum:

    E[j] = open + (j - 1) * extend + max_{k < j} (H0[k] - k * extend)

where ``open = gap_open + gap_extend`` and H0 is the cell value before
horizontal gaps are considered.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from amr_drugclass_pipeline.align.scoring import ScoringScheme

NEG = -(1 << 40)

# traceback operations: aligned pair, gap in subject, gap in query
OP_PAIR = "M"
OP_QUERY_ONLY = "D"
OP_SUBJECT_ONLY = "I"


@dataclass(frozen=True)
class Hsp:
    """Ungapped high-scoring segment pair; ends are exclusive."""

    q_start: int
    q_end: int
    s_start: int
    score: int

    @property
    def s_end(self) -> int:
        return self.s_start + (self.q_end - self.q_start)

    def anchor(
        self, query: np.ndarray, subject: np.ndarray, window: int, scheme: ScoringScheme
    ) -> tuple[int, int]:
        """Centre of the highest-scoring ``window``-long stretch; the first wins ties."""
        length = self.q_end - self.q_start
        window = max(1, min(window, length))
        scores = _pair_scores(
            query[self.q_start : self.q_end], subject[self.s_start : self.s_end], scheme
        )
        sums = np.convolve(scores, np.ones(window, dtype=np.int64), mode="valid")
        offset = int(np.argmax(sums)) + window // 2
        return self.q_start + offset, self.s_start + offset


@dataclass(frozen=True)
class GappedAlignment:
    score: int
    q_start: int
    q_end: int
    s_start: int
    s_end: int
    ops: str

    @cached_property
    def pair_cells(self) -> frozenset[tuple[int, int]]:
        """(query, subject) offsets of every aligned pair on the path."""
        cells: set[tuple[int, int]] = set()
        qi, si = self.q_start, self.s_start
        for op in self.ops:
            if op == OP_PAIR:
                cells.add((qi, si))
                qi += 1
                si += 1
            elif op == OP_QUERY_ONLY:
                qi += 1
            else:
                si += 1
        return frozenset(cells)

    def passes_through(self, q: int, s: int) -> bool:
        return (q, s) in self.pair_cells


def _pair_scores(a: np.ndarray, b: np.ndarray, scheme: ScoringScheme) -> np.ndarray:
    return np.where(a == b, scheme.match, scheme.mismatch).astype(np.int64)


def _ungapped_run(a: np.ndarray, b: np.ndarray, scheme: ScoringScheme) -> tuple[int, int]:
    """Best prefix extension along a diagonal: (score gain, length)."""
    if len(a) == 0:
        return 0, 0
    cs = np.cumsum(_pair_scores(a, b, scheme))
    running_best = np.maximum.accumulate(np.maximum(cs, 0))
    dropped = np.flatnonzero(cs < running_best - scheme.x_drop_ungapped)
    stop = int(dropped[0]) if len(dropped) else len(cs)
    if stop == 0:
        return 0, 0
    best_at = int(np.argmax(cs[:stop]))
    gain = int(cs[best_at])
    return (gain, best_at + 1) if gain > 0 else (0, 0)


def extend_ungapped(
    query: np.ndarray,
    subject: np.ndarray,
    q_off: int,
    s_off: int,
    length: int,
    scheme: ScoringScheme,
) -> Hsp:
    """X-drop extension of a seed in both directions along its diagonal."""
    seed = int(
        _pair_scores(
            query[q_off : q_off + length], subject[s_off : s_off + length], scheme
        ).sum()
    )

    q_end, s_end = q_off + length, s_off + length
    span = min(len(query) - q_end, len(subject) - s_end)
    right_gain, right_len = _ungapped_run(
        query[q_end : q_end + span], subject[s_end : s_end + span], scheme
    )

    span = min(q_off, s_off)
    left_gain, left_len = _ungapped_run(
        query[q_off - span : q_off][::-1], subject[s_off - span : s_off][::-1], scheme
    )

    return Hsp(
        q_start=q_off - left_len,
        q_end=q_end + right_len,
        s_start=s_off - left_len,
        score=seed + left_gain + right_gain,
    )


@dataclass
class _Row:
    lo: int
    h: np.ndarray
    e: np.ndarray
    f: np.ndarray

    def get(self, which: str, col: int) -> int:
        k = col - self.lo
        arr = getattr(self, which)
        if 0 <= k < len(arr):
            return int(arr[k])
        return NEG


def _horizontal(h0: np.ndarray, open_cost: int, ge: int) -> np.ndarray:
    width = len(h0)
    e = np.full(width, NEG, dtype=np.int64)
    if width > 1:
        ramp = np.arange(width, dtype=np.int64) * ge
        best = np.maximum.accumulate(h0 - ramp)
        e[1:] = open_cost + ramp[:-1] + best[:-1]
    return e


def xdrop_align(
    a: np.ndarray, b: np.ndarray, scheme: ScoringScheme, x_drop: int | None = None
) -> tuple[int, int, int, str]:
    """Start-anchored gapped X-drop alignment of ``a`` (query) against ``b``.

    Returns (score, query bases used, subject bases used, ops). The alignment
    starts at (0, 0) and may end anywhere; cells falling more than X below
    the best score so far are pruned.
    """
    x = scheme.x_drop_gapped if x_drop is None else x_drop
    ge = scheme.gap_extend
    open_cost = scheme.gap_open + ge
    reach = x // -ge + 1
    n, m = len(a), len(b)

    width = min(m, reach) + 1
    h0 = np.full(width, NEG, dtype=np.int64)
    h0[0] = 0
    e = _horizontal(h0, open_cost, ge)
    h = np.maximum(h0, e)
    f = np.full(width, NEG, dtype=np.int64)
    best, best_i, best_j = 0, 0, 0
    for arr in (h, e, f):
        arr[arr < best - x] = NEG
    rows = [_Row(0, h, e, f)]

    for i in range(1, n + 1):
        prev = rows[-1]
        live = np.flatnonzero(prev.h > NEG)
        if len(live) == 0:
            break
        lo = prev.lo + int(live[0])
        phi = prev.lo + int(live[-1]) + 1
        hi = min(m, phi + reach)
        if lo > hi:
            break
        width = hi - lo + 1
        k0 = lo - prev.lo
        avail = max(0, min(width, len(prev.h) - k0))

        prev_h = np.full(width, NEG, dtype=np.int64)
        prev_f = np.full(width, NEG, dtype=np.int64)
        prev_h[:avail] = prev.h[k0 : k0 + avail]
        prev_f[:avail] = prev.f[k0 : k0 + avail]

        f = np.maximum(prev_h + open_cost, prev_f + ge)
        diag = np.full(width, NEG, dtype=np.int64)
        if width > 1:
            diag[1:] = prev_h[:-1] + _pair_scores(b[lo:hi], a[i - 1], scheme)
        h0 = np.maximum(diag, f)
        e = _horizontal(h0, open_cost, ge)
        h = np.maximum(h0, e)

        row_best_at = int(np.argmax(h))
        if int(h[row_best_at]) > best:
            best, best_i, best_j = int(h[row_best_at]), i, lo + row_best_at

        floor = best - x
        for arr in (h, e, f):
            arr[arr < floor] = NEG
        rows.append(_Row(lo, h, e, f))

    ops = _traceback(rows, a, b, best_i, best_j, scheme)
    return best, best_i, best_j, ops


def _traceback(
    rows: list[_Row],
    a: np.ndarray,
    b: np.ndarray,
    i: int,
    j: int,
    scheme: ScoringScheme,
) -> str:
    ge = scheme.gap_extend
    ops: list[str] = []
    state = "h"
    while i > 0 or j > 0:
        row = rows[i]
        if state == "h":
            value = row.get("h", j)
            if i > 0 and j > 0:
                up_left = rows[i - 1].get("h", j - 1)
                pair = scheme.match if a[i - 1] == b[j - 1] else scheme.mismatch
                if up_left > NEG and up_left + pair == value:
                    ops.append(OP_PAIR)
                    i -= 1
                    j -= 1
                    continue
            if row.get("f", j) == value:
                state = "f"
            elif row.get("e", j) == value:
                state = "e"
            else:
                raise RuntimeError(f"Traceback lost at cell ({i}, {j})")
        elif state == "e":
            ops.append(OP_SUBJECT_ONLY)
            left = row.get("e", j - 1)
            if not (left > NEG and left + ge == row.get("e", j)):
                state = "h"
            j -= 1
        else:
            ops.append(OP_QUERY_ONLY)
            above = rows[i - 1].get("f", j)
            if not (above > NEG and above + ge == row.get("f", j)):
                state = "h"
            i -= 1
    return "".join(reversed(ops))


def extend_gapped(
    query: np.ndarray,
    subject: np.ndarray,
    anchor: tuple[int, int],
    scheme: ScoringScheme,
    x_drop: int | None = None,
) -> GappedAlignment:
    """Gapped X-drop extension in both directions from an anchor cell.

    The anchor pair belongs to the right-hand extension; the left-hand one
    runs over the reversed prefixes.
    """
    qa, sa = anchor
    right_score, rq, rs, right_ops = xdrop_align(query[qa:], subject[sa:], scheme, x_drop)
    left_score, lq, ls, left_ops = xdrop_align(
        query[:qa][::-1], subject[:sa][::-1], scheme, x_drop
    )
    return GappedAlignment(
        score=left_score + right_score,
        q_start=qa - lq,
        q_end=qa + rq,
        s_start=sa - ls,
        s_end=sa + rs,
        ops=left_ops[::-1] + right_ops,
    )


def render_rows(
    query: str, subject: str, alignment: GappedAlignment
) -> tuple[str, str, str]:
    """Three display rows: query, match ('|' on identical bases), subject."""
    q_row: list[str] = []
    m_row: list[str] = []
    s_row: list[str] = []
    qi, si = alignment.q_start, alignment.s_start
    for op in alignment.ops:
        if op == OP_PAIR:
            qc, sc = query[qi], subject[si]
            qi += 1
            si += 1
        elif op == OP_QUERY_ONLY:
            qc, sc = query[qi], "-"
            qi += 1
        else:
            qc, sc = "-", subject[si]
            si += 1
        q_row.append(qc)
        s_row.append(sc)
        m_row.append("|" if qc == sc and qc != "-" else " ")
    return "".join(q_row), "".join(m_row), "".join(s_row)


def smith_waterman_score(query: str, subject: str, scheme: ScoringScheme) -> int:
    """Optimal local alignment score with affine gaps (full DP, no pruning)."""
    a = np.frombuffer(query.encode("ascii"), dtype=np.uint8)
    b = np.frombuffer(subject.encode("ascii"), dtype=np.uint8)
    ge = scheme.gap_extend
    open_cost = scheme.gap_open + ge
    m = len(b)
    h = np.zeros(m + 1, dtype=np.int64)
    f = np.full(m + 1, NEG, dtype=np.int64)
    best = 0
    for i in range(len(a)):
        f = np.maximum(h + open_cost, f + ge)
        h0 = np.zeros(m + 1, dtype=np.int64)
        h0[1:] = np.maximum(h[:-1] + _pair_scores(b, a[i], scheme), 0)
        h0 = np.maximum(h0, f)
        h0[0] = 0
        h = np.maximum(h0, _horizontal(h0, open_cost, ge))
        best = max(best, int(h.max()))
    return best

"""Nucleotide scoring scheme and Karlin-Altschul e-value statistics.

Ungapped lambda is solved numerically for uniform base frequencies and then
applied to gapped scores as well. Only the ranking the e-value induces matters
downstream, and that ranking is score-monotone for a fixed search space.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

logger = logging.getLogger(__name__)

DEFAULT_K = 0.46
EVALUE_FLOOR = 1e-180
LAMBDA_TOLERANCE = 1e-12


class NoPositiveRoot(ValueError):
    """The scheme's expected per-pair score is not negative."""


@dataclass(frozen=True)
class ScoringScheme:
    """Match/mismatch scores, affine gap penalties and X-drop thresholds.

    A gap of length L scores ``gap_open + L * gap_extend``.
    """

    match: int = 2
    mismatch: int = -3
    gap_open: int = -5
    gap_extend: int = -2
    x_drop_ungapped: int = 20
    x_drop_gapped: int = 30

    def __post_init__(self) -> None:
        if self.match <= 0:
            raise ValueError(f"match must be positive, got {self.match}")
        for name in ("mismatch", "gap_open", "gap_extend"):
            if getattr(self, name) >= 0:
                raise ValueError(f"{name} must be negative, got {getattr(self, name)}")
        if self.x_drop_ungapped <= 0 or self.x_drop_gapped <= 0:
            raise ValueError("x-drop thresholds must be positive")

    @property
    def expected_pair_score(self) -> float:
        """Mean score of an aligned pair under uniform base frequencies."""
        return (4 * self.match + 12 * self.mismatch) / 16

    def gap_cost(self, length: int) -> int:
        return self.gap_open + length * self.gap_extend

    def scaled(self, factor: int) -> ScoringScheme:
        return ScoringScheme(
            match=self.match * factor,
            mismatch=self.mismatch * factor,
            gap_open=self.gap_open * factor,
            gap_extend=self.gap_extend * factor,
            x_drop_ungapped=self.x_drop_ungapped * factor,
            x_drop_gapped=self.x_drop_gapped * factor,
        )


@dataclass(frozen=True)
class EvalueParams:
    lambda_: float
    k: float
    m: int
    n: int

    def __post_init__(self) -> None:
        if self.lambda_ <= 0 or self.k <= 0:
            raise ValueError("lambda and K must be positive")
        if self.m < 0 or self.n < 0:
            raise ValueError("search space lengths must be non-negative")


def _root_residual(scheme: ScoringScheme, lam: float) -> float:
    return 0.25 * math.exp(lam * scheme.match) + 0.75 * math.exp(lam * scheme.mismatch) - 1.0


def solve_lambda(scheme: ScoringScheme) -> float:
    """Positive root of sum_ij p_i p_j exp(lambda * s_ij) = 1, by bisection."""
    if scheme.expected_pair_score >= 0:
        raise NoPositiveRoot(
            f"Expected pair score {scheme.expected_pair_score} is not negative for "
            f"match={scheme.match}, mismatch={scheme.mismatch}"
        )
    lo, hi = 0.0, 1.0
    while _root_residual(scheme, hi) <= 0:
        lo, hi = hi, hi * 2
    while hi - lo > LAMBDA_TOLERANCE:
        mid = (lo + hi) / 2
        if _root_residual(scheme, mid) > 0:
            hi = mid
        else:
            lo = mid
    lam = (lo + hi) / 2
    logger.debug("Solved lambda=%.12f for %s", lam, scheme)
    return lam


def evalue(score: int | float, params: EvalueParams) -> float:
    """K*m*n*exp(-lambda*S), clamped to 0.0 below 1e-180."""
    value = params.k * params.m * params.n * math.exp(-params.lambda_ * score)
    return 0.0 if value < EVALUE_FLOOR else value

"""Pairwise joint default probabilities and the default-correlation bound."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .core import ReferencePortfolio
from .errors import (
    DegenerateMarginalError,
    InconsistentCorrelationError,
    ScenarioSizeError,
    ValidationError,
)

BOUND_TOL = 1e-12
PSD_TOL = 1e-10


def _check_marginal(p: float, what: str = "p") -> None:
    if not 0.0 < p < 1.0:
        raise DegenerateMarginalError(
            f"{what} = {p!r}: default correlation is undefined for a sure or impossible default")


@dataclass(frozen=True)
class PairwiseJointProbs:
    p00: float
    p01: float
    p10: float
    p11: float

    @property
    def consistent(self) -> bool:
        return min(self.p00, self.p01, self.p10, self.p11) >= 0.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p00, self.p01, self.p10, self.p11)


def joint_default_probs(p_i: float, p_j: float, rho: float, strict: bool = True) -> PairwiseJointProbs:
    """Joint outcome probabilities of two names with default correlation ``rho``.

    ``p10`` is the probability that name i defaults and name j survives.
    Entries within ``BOUND_TOL`` below zero are rounding noise at a saturated
    bound and are snapped to zero. Anything more negative raises
    ``InconsistentCorrelationError`` unless ``strict`` is False, in which case
    the raw values come back and ``consistent`` reports the problem.
    """
    _check_marginal(p_i, "p_i")
    _check_marginal(p_j, "p_j")
    if not -1.0 <= rho <= 1.0:
        raise ValidationError(f"correlation {rho!r} outside [-1, 1]")
    q_i, q_j = 1.0 - p_i, 1.0 - p_j
    cov = rho * math.sqrt(p_i * q_i * p_j * q_j)
    raw = (q_i * q_j + cov, q_i * p_j - cov, p_i * q_j - cov, p_i * p_j + cov)
    vals = tuple(0.0 if -BOUND_TOL <= v < 0.0 else v for v in raw)
    out = PairwiseJointProbs(*vals)
    if strict and not out.consistent:
        worst = min(vals)
        raise InconsistentCorrelationError(
            f"correlation {rho!r} with p=({p_i!r}, {p_j!r}) gives a negative joint probability {worst:.6g}",
            worst)
    return out


def correlation_upper_bound(p_i: float, p_j: float) -> float:
    _check_marginal(p_i, "p_i")
    _check_marginal(p_j, "p_j")
    if p_i == p_j:
        return 1.0
    lo, hi = min(p_i, p_j), max(p_i, p_j)
    # ordered so the result is bitwise symmetric
    return math.sqrt((lo * (1.0 - hi)) / ((1.0 - lo) * hi))


def _lower_bound(p_i: float, p_j: float) -> float:
    # from P(0,0) >= 0 and P(1,1) >= 0
    q_i, q_j = 1.0 - p_i, 1.0 - p_j
    return -math.sqrt(min(p_i * p_j / (q_i * q_j), q_i * q_j / (p_i * p_j)))


@dataclass(frozen=True)
class DefaultCorrelationMatrix:
    entries: NDArray[np.float64]

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"correlation matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("correlation matrix has non-finite entries")
        if not np.allclose(m, m.T, rtol=0.0, atol=BOUND_TOL):
            raise ValidationError("correlation matrix is not symmetric")
        if np.any(np.diag(m) != 1.0):
            raise ValidationError("correlation matrix diagonal must be exactly 1")
        if np.any(np.abs(m) > 1.0):
            raise ValidationError("correlation entries must lie in [-1, 1]")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, ij) -> float:
        return float(self.entries[ij])


def saturated_matrix(portfolio: ReferencePortfolio) -> DefaultCorrelationMatrix:
    """The default-correlation matrix at which every pairwise bound binds."""
    p = portfolio.probs
    for k, pk in enumerate(p):
        _check_marginal(float(pk), f"p_{k + 1}")
    q = 1.0 - p
    # entry (i, j), i <= j in sorted order: sqrt(p_i q_j / (q_i p_j))
    lo = np.minimum.outer(np.arange(p.size), np.arange(p.size))
    hi = np.maximum.outer(np.arange(p.size), np.arange(p.size))
    m = np.sqrt(p[lo] * q[hi] / (q[lo] * p[hi]))
    np.fill_diagonal(m, 1.0)
    return DefaultCorrelationMatrix(m)


@dataclass
class BoundViolation:
    i: int
    j: int
    value: float
    bound: float


@dataclass
class MatrixValidation:
    upper_violations: list[BoundViolation] = field(default_factory=list)
    lower_violations: list[BoundViolation] = field(default_factory=list)
    min_eigenvalue: float = 0.0
    is_psd: bool = True

    @property
    def within_bounds(self) -> bool:
        return not self.upper_violations and not self.lower_violations

    @property
    def ok(self) -> bool:
        return self.within_bounds and self.is_psd

    def to_dict(self) -> dict:
        def rows(vs):
            return [{"i": v.i + 1, "j": v.j + 1, "value": v.value, "bound": v.bound} for v in vs]
        return {
            "upper_violations": rows(self.upper_violations),
            "lower_violations": rows(self.lower_violations),
            "min_eigenvalue": self.min_eigenvalue,
            "is_psd": self.is_psd,
            "within_bounds": self.within_bounds,
            "ok": self.ok,
        }


def validate_matrix(portfolio: ReferencePortfolio, matrix: DefaultCorrelationMatrix) -> MatrixValidation:
    """Check pairwise bounds and positive semi-definiteness independently.

    Neither property implies the other, so both are always evaluated.
    Indices in the report are zero-based positions in the sorted portfolio.
    """
    if matrix.size != portfolio.size:
        raise ScenarioSizeError(
            f"matrix is {matrix.size}x{matrix.size}, portfolio has {portfolio.size} names")
    p = portfolio.probs
    report = MatrixValidation()
    for i in range(p.size):
        for j in range(i + 1, p.size):
            value = matrix[i, j]
            hi = correlation_upper_bound(float(p[i]), float(p[j]))
            lo = _lower_bound(float(p[i]), float(p[j]))
            if value > hi + BOUND_TOL:
                report.upper_violations.append(BoundViolation(i, j, value, hi))
            if value < lo - BOUND_TOL:
                report.lower_violations.append(BoundViolation(i, j, value, lo))
    eig = np.linalg.eigvalsh(matrix.entries)
    report.min_eigenvalue = float(eig[0])
    report.is_psd = bool(eig[0] >= -PSD_TOL)
    return report

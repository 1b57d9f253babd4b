"""Copula simulation of correlated defaults.

Each name gets a latent variable ``X_i`` and defaults when ``X_i < c_i`` with
``P(X_i < c_i) = p_i``. Latent variables are correlated either through a
single common factor (flat correlation) or through a full asset-correlation
matrix. At 100% correlation all latents coincide and every continuous copula
reduces to the ladder process.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import integrate, special, stats

from .bounds import PSD_TOL, _check_marginal
from .core import (
    LossDistribution,
    PROB_TOL,
    ReferencePortfolio,
    ScenarioTable,
    _check_cutoff,
    independent_table,
)
from .errors import CutoffExceededError, DegenerateMarginalError, MatrixError, ValidationError
from .ladder import LadderProcess, build_ladder, ladder_loss_distribution
from .normal import bvn_cdf, norm_ppf
from .rng import map_chunks

CHOLESKY_JITTER = 1e-12
MAX_LOSS_LEVELS = 1 << 16
QUAD_TOL = 1e-13
# common-factor mass beyond +-9.5 is below 3e-21
FACTOR_RANGE = 9.5
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class AssetCorrelationSpec:
    """Flat (single-factor) correlation or a full asset-correlation matrix."""

    flat: float | None = None
    matrix: NDArray[np.float64] | None = None

    def __post_init__(self):
        if (self.flat is None) == (self.matrix is None):
            raise ValidationError("give exactly one of a flat correlation or a matrix")
        if self.flat is not None:
            rho = float(self.flat)
            if not 0.0 <= rho <= 1.0:
                raise ValidationError(f"flat asset correlation {rho!r} outside [0, 1]")
            object.__setattr__(self, "flat", rho)
            return
        m = np.array(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"correlation matrix must be square, got shape {m.shape}")
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-12):
            raise ValidationError("asset correlation matrix is not symmetric")
        if not np.allclose(np.diag(m), 1.0, rtol=0.0, atol=1e-12):
            raise ValidationError("asset correlation matrix needs a unit diagonal")
        if np.any(np.abs(m) > 1.0 + 1e-12):
            raise ValidationError("asset correlations must lie in [-1, 1]")
        lam = float(np.linalg.eigvalsh(m)[0])
        if lam < -PSD_TOL:
            raise MatrixError(f"asset correlation matrix is not positive semi-definite "
                              f"(smallest eigenvalue {lam:.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def flat_rho(cls, rho: float) -> "AssetCorrelationSpec":
        return cls(flat=rho)

    @classmethod
    def full(cls, matrix) -> "AssetCorrelationSpec":
        return cls(matrix=matrix)

    @property
    def is_flat(self) -> bool:
        return self.flat is not None

    @property
    def is_maximal(self) -> bool:
        if self.is_flat:
            return self.flat == 1.0
        return bool(np.all(self.matrix == 1.0))

    def describe(self) -> dict:
        if self.is_flat:
            return {"flat": self.flat}
        return {"matrix": self.matrix.tolist()}


@dataclass(frozen=True)
class ThresholdVector:
    c: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.c)

    def as_array(self) -> NDArray[np.float64]:
        return np.array(self.c)


class GaussianLatent:
    name = "gaussian"

    def threshold(self, p: float) -> float:
        return norm_ppf(p)

    def scale(self, rng: np.random.Generator, m: int) -> NDArray[np.float64] | None:
        return None


class StudentTLatent:
    """Heavy-tailed alternative: normal latents divided by a shared chi mixing variable."""

    name = "student-t"

    def __init__(self, dof: float = 4.0):
        if dof <= 0:
            raise ValidationError("degrees of freedom must be positive")
        self.dof = float(dof)

    def threshold(self, p: float) -> float:
        if not 0.0 < p < 1.0:
            raise DegenerateMarginalError(f"quantile of p = {p!r} is infinite")
        return float(stats.t.ppf(p, self.dof))

    def scale(self, rng: np.random.Generator, m: int) -> NDArray[np.float64]:
        return np.sqrt(self.dof / rng.chisquare(self.dof, m))


def _family(family) -> GaussianLatent | StudentTLatent:
    if family is None or family == "gaussian":
        return GaussianLatent()
    if family == "student-t":
        return StudentTLatent()
    if isinstance(family, (GaussianLatent, StudentTLatent)):
        return family
    raise ValidationError(f"unknown latent family {family!r}")


def calibrate_thresholds(portfolio: ReferencePortfolio, family=None) -> ThresholdVector:
    fam = _family(family)
    return ThresholdVector(tuple(fam.threshold(n.default_prob) for n in portfolio))


def asset_to_default_correlation(p_i: float, p_j: float, rho_asset: float) -> float:
    """Default correlation implied by a Gaussian asset correlation."""
    _check_marginal(p_i, "p_i")
    _check_marginal(p_j, "p_j")
    if not -1.0 <= rho_asset <= 1.0:
        raise ValidationError(f"asset correlation {rho_asset!r} outside [-1, 1]")
    if rho_asset == 1.0:
        p11 = min(p_i, p_j)
    else:
        p11 = bvn_cdf(norm_ppf(p_i), norm_ppf(p_j), rho_asset)
    return (p11 - p_i * p_j) / math.sqrt(p_i * (1.0 - p_i) * p_j * (1.0 - p_j))


def _factor(matrix: NDArray[np.float64]) -> NDArray[np.float64]:
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(matrix + CHOLESKY_JITTER * np.eye(matrix.shape[0]))
    except np.linalg.LinAlgError as exc:
        raise MatrixError(f"cannot factorize asset correlation matrix: {exc}") from None


def _latent_sampler(portfolio: ReferencePortfolio, corr: AssetCorrelationSpec):
    n = portfolio.size
    if corr.is_flat:
        rho = corr.flat
        if rho == 1.0:
            return lambda rng, m: np.repeat(rng.standard_normal(m)[:, None], n, axis=1)
        a, b = math.sqrt(rho), math.sqrt(1.0 - rho)

        def flat(rng, m):
            z = rng.standard_normal(m)
            eps = rng.standard_normal((m, n))
            return a * z[:, None] + b * eps
        return flat

    if corr.matrix.shape[0] != n:
        raise ValidationError(
            f"asset correlation matrix is {corr.matrix.shape[0]}x{corr.matrix.shape[0]}, "
            f"portfolio has {n} names")
    if corr.is_maximal:
        # rank one: one common variable, no factorization
        return lambda rng, m: np.repeat(rng.standard_normal(m)[:, None], n, axis=1)
    chol = _factor(corr.matrix)
    return lambda rng, m: rng.standard_normal((m, n)) @ chol.T


def copula_sampler(portfolio: ReferencePortfolio, corr: AssetCorrelationSpec, family=None):
    """Return ``fn(rng, m)`` producing an ``(m, N)`` array of default indicators."""
    fam = _family(family)
    c = calibrate_thresholds(portfolio, fam).as_array()
    sample = _latent_sampler(portfolio, corr)

    def draw(rng: np.random.Generator, m: int) -> NDArray[np.uint8]:
        x = sample(rng, m)
        s = fam.scale(rng, m)
        if s is not None:
            x = x * s[:, None]
        return (x < c[None, :]).astype(np.uint8)

    return draw


def simulate_copula(portfolio: ReferencePortfolio, corr: AssetCorrelationSpec, draws: int,
                    seed: int, threads: int | None = None, family=None) -> NDArray[np.uint8]:
    """Sample default scenarios; returns a ``(draws, N)`` array of 0/1 indicators."""
    draw = copula_sampler(portfolio, corr, family)
    return np.concatenate(map_chunks(draw, draws, seed, threads), axis=0)


def degenerate_max_correlation(portfolio: ReferencePortfolio) -> LadderProcess:
    """The 100%-correlation limit, computed analytically."""
    return build_ladder(portfolio)


# --- exact laws under a flat Gaussian copula ---------------------------------

def _conditional_probs(c: NDArray, rho: float, z: float) -> NDArray[np.float64]:
    return special.ndtr((c - math.sqrt(rho) * z) / math.sqrt(1.0 - rho))


def _integrate(fn, c: NDArray, rho: float) -> NDArray[np.float64]:
    """Integrate ``fn(z)`` against the standard normal density of the common factor."""
    pts = sorted({float(x) for x in c / math.sqrt(rho) if abs(x) < FACTOR_RANGE})
    res, _ = integrate.quad_vec(lambda z: math.exp(-0.5 * z * z) / _SQRT2PI * fn(z),
                                -FACTOR_RANGE, FACTOR_RANGE, epsabs=QUAD_TOL, epsrel=0.0,
                                norm="max", points=pts, limit=10_000)
    return np.maximum(res, 0.0)


def flat_copula_table(portfolio: ReferencePortfolio, rho: float) -> ScenarioTable:
    """Full joint table under a flat Gaussian copula, by quadrature over the common factor."""
    _check_cutoff(portfolio.size)
    if not 0.0 <= rho <= 1.0:
        raise ValidationError(f"flat asset correlation {rho!r} outside [0, 1]")
    if rho == 0.0:
        return independent_table(portfolio)
    if rho == 1.0:
        return build_ladder(portfolio).table()
    c = calibrate_thresholds(portfolio).as_array()

    def fn(z):
        table = np.ones(1)
        for pk in _conditional_probs(c, rho, z):
            table = np.concatenate([table * (1.0 - pk), table * pk])
        return table

    return ScenarioTable(_integrate(fn, c, rho))


def _loss_lattice(caps: NDArray) -> tuple[NDArray, list[NDArray]]:
    """Distinct subset sums of ``caps`` and, per name, the index shift on default."""
    levels = np.zeros(1)
    for cap in caps:
        merged = np.concatenate([levels, levels + cap])
        merged.sort()
        keep = np.concatenate([[True], np.diff(merged) > PROB_TOL])
        levels = merged[keep]
        if levels.size > MAX_LOSS_LEVELS:
            raise CutoffExceededError(
                f"more than {MAX_LOSS_LEVELS} distinct loss levels; use Monte Carlo pricing")
    jumps = []
    for cap in caps:
        target = np.searchsorted(levels, levels + cap - PROB_TOL)
        jumps.append(np.minimum(target, levels.size - 1))
    return levels, jumps


def flat_copula_loss_distribution(portfolio: ReferencePortfolio, rho: float) -> LossDistribution:
    """Exact (to quadrature tolerance) loss distribution under a flat Gaussian copula."""
    if not 0.0 <= rho <= 1.0:
        raise ValidationError(f"flat asset correlation {rho!r} outside [0, 1]")
    if rho == 1.0:
        return ladder_loss_distribution(build_ladder(portfolio))
    caps = portfolio.capacities
    levels, jumps = _loss_lattice(caps)
    start = int(np.searchsorted(levels, 0.0))
    k = levels.size

    def recurse(pk_all):
        dist = np.zeros(k)
        dist[start] = 1.0
        for pk, jump in zip(pk_all, jumps):
            moved = np.bincount(jump, weights=dist * pk, minlength=k)
            dist = dist * (1.0 - pk) + moved
        return dist

    if rho == 0.0:
        probs = recurse(portfolio.probs)
    else:
        for n in portfolio:
            _check_marginal(n.default_prob, n.label)
        c = calibrate_thresholds(portfolio).as_array()
        probs = _integrate(lambda z: recurse(_conditional_probs(c, rho, z)), c, rho)
    return LossDistribution.from_samples(levels, probs)


"""Risk-neutral valuation of single-name CDS and tranches.

Single period, premiums paid up front, zero interest rates: a product's fair
value is its expected payoff at maturity. Tranche payoffs and values are
fractions of total portfolio notional.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Union

import numpy as np
from numpy.typing import NDArray

from .copula import AssetCorrelationSpec, _family, copula_sampler
from .core import (
    PROB_TOL,
    LossDistribution,
    ObligorName,
    ReferencePortfolio,
    ScenarioTable,
    table_loss_distribution,
)
from .errors import ValidationError
from .ladder import LadderProcess, ladder_loss_distribution
from .rng import RNG_ALGORITHM, map_chunks

SUPERSENIOR = "supersenior"
EQUITY = "equity"
KINDS = (SUPERSENIOR, EQUITY)

ExactLaw = Union[LadderProcess, ScenarioTable, LossDistribution]


@dataclass(frozen=True)
class TrancheSpec:
    attachment: float
    kind: str = SUPERSENIOR

    def __post_init__(self):
        if not self.attachment >= 0.0:
            raise ValidationError(f"attachment {self.attachment!r} must be non-negative")
        if self.kind not in KINDS:
            raise ValidationError(f"unknown tranche kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "attachment", float(self.attachment))

    def payoff(self, loss: NDArray | float) -> NDArray[np.float64]:
        loss = np.asarray(loss, dtype=np.float64)
        if self.kind == SUPERSENIOR:
            return np.maximum(loss - self.attachment, 0.0)
        return np.minimum(loss, self.attachment)


@dataclass
class Valuation:
    value: float
    stderr: float = 0.0
    method: str = "exhaustive"
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def price_single_name_cds(name: ObligorName) -> Valuation:
    """Fair up-front premium per unit notional of the name."""
    return Valuation(name.lgd * name.default_prob, 0.0, "analytic")


def loss_distribution_of(portfolio: ReferencePortfolio, law: ExactLaw) -> LossDistribution:
    if isinstance(law, LossDistribution):
        return law
    if isinstance(law, LadderProcess):
        if law.portfolio != portfolio:
            raise ValidationError("ladder process was built for a different portfolio")
        return ladder_loss_distribution(law)
    if isinstance(law, ScenarioTable):
        return table_loss_distribution(portfolio, law)
    raise ValidationError(f"unsupported law type {type(law).__name__}")


def price_tranche_exhaustive(portfolio: ReferencePortfolio, tranche: TrancheSpec,
                             law: ExactLaw) -> Valuation:
    """Exact expected payoff under a full joint law."""
    dist = loss_distribution_of(portfolio, law)
    if tranche.kind == SUPERSENIOR and tranche.attachment >= portfolio.total_capacity() - PROB_TOL:
        value = 0.0
    else:
        value = max(dist.expectation(tranche.payoff), 0.0)
    return Valuation(value, 0.0, "exhaustive", {"law": type(law).__name__})


@dataclass
class _Moments:
    n: int
    mean: float
    m2: float

    @classmethod
    def of(cls, x: NDArray[np.float64]) -> "_Moments":
        mean = float(np.mean(x))
        return cls(x.size, mean, float(np.sum((x - mean) ** 2)))

    def merge(self, other: "_Moments") -> "_Moments":
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return _Moments(n, mean, m2)


def mc_payoffs(portfolio: ReferencePortfolio, payoffs, corr: AssetCorrelationSpec, draws: int,
               seed: int, threads: int | None = None, family=None) -> list[Valuation]:
    """Monte Carlo means of several loss payoffs evaluated on the same draws."""
    fam = _family(family)
    draw = copula_sampler(portfolio, corr, fam)
    caps = portfolio.capacities

    def chunk(rng, m):
        loss = draw(rng, m).astype(np.float64) @ caps
        return [_Moments.of(f(loss)) for f in payoffs]

    per_chunk = map_chunks(chunk, draws, seed, threads)
    meta = {"draws": draws, "seed": seed, "rng": RNG_ALGORITHM, "family": fam.name,
            "correlation": corr.describe()}
    out = []
    for k in range(len(payoffs)):
        acc = per_chunk[0][k]
        for part in per_chunk[1:]:
            acc = acc.merge(part[k])
        stderr = math.sqrt(acc.m2 / (acc.n - 1) / acc.n) if acc.n > 1 else 0.0
        out.append(Valuation(max(acc.mean, 0.0), stderr, "monte-carlo", dict(meta)))
    return out


def price_tranche_mc(portfolio: ReferencePortfolio, tranche: TrancheSpec, corr: AssetCorrelationSpec,
                     draws: int, seed: int, threads: int | None = None, family=None) -> Valuation:
    return mc_payoffs(portfolio, [tranche.payoff], corr, draws, seed, threads, family)[0]


@dataclass
class ParityReport:
    equity: float
    supersenior: float
    expected_loss: float
    gap: float
    stderr: float = 0.0

    @property
    def holds(self) -> bool:
        if self.stderr == 0.0:
            return abs(self.gap) <= PROB_TOL
        return abs(self.gap) <= 4.0 * self.stderr

    def to_dict(self) -> dict:
        return {**asdict(self), "holds": self.holds}


def parity_check(portfolio: ReferencePortfolio, attachment: float,
                 law: ExactLaw | AssetCorrelationSpec, draws: int = 200_000, seed: int = 0,
                 threads: int | None = None) -> ParityReport:
    """Equity plus supersenior at a shared attachment versus expected total loss.

    The expected total loss on the right-hand side uses marginals only and is
    therefore the same under every law.
    """
    equity = TrancheSpec(attachment, EQUITY)
    senior = TrancheSpec(attachment, SUPERSENIOR)
    el = portfolio.expected_loss()
    if isinstance(law, AssetCorrelationSpec):
        eq, ss, total = mc_payoffs(portfolio, [equity.payoff, senior.payoff, lambda x: x],
                                   law, draws, seed, threads)
        return ParityReport(eq.value, ss.value, el, eq.value + ss.value - el, total.stderr)
    eq = price_tranche_exhaustive(portfolio, equity, law).value
    ss = price_tranche_exhaustive(portfolio, senior, law).value
    return ParityReport(eq, ss, el, eq + ss - el)

"""Arbitrage portfolio against an overpriced supersenior tranche.

Write the attachment as the loss capacity of the riskiest names plus a
fraction of the next one down,

    A = sum_{i > n} N_i l_i + eps * N_n l_n,   0 < eps <= 1.

Sell protection on one unit of the tranche S[A]. Buy protection on N_i units
of names 1..n-1 and (1 - eps) N_n units of name n. Under every default
scenario the protection received covers the tranche loss. At the 100%
correlation price the position is worth exactly zero, so a quote above that
price means we are paid to enter a position that cannot lose.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import PROB_TOL, ReferencePortfolio, scenario_matrix
from .errors import OutOfRangeError
from .ladder import build_ladder
from .pricing import TrancheSpec, price_tranche_exhaustive

VALUE_TOL = 1e-12


@dataclass(frozen=True)
class AttachmentDecomposition:
    n: int  # one-based pivot index in the sorted portfolio
    epsilon: float
    stress_lgd: bool = False

    def reconstruct(self, portfolio: ReferencePortfolio) -> float:
        caps = _capacities(portfolio, self.stress_lgd)
        return math.fsum(caps[self.n:]) + self.epsilon * caps[self.n - 1]


@dataclass(frozen=True)
class CdsLeg:
    index: int  # one-based
    label: str
    units: float


@dataclass(frozen=True)
class ArbitragePortfolio:
    portfolio: ReferencePortfolio
    attachment: float
    decomposition: AttachmentDecomposition
    cds_legs: tuple[CdsLeg, ...]
    tranche_units: float = 1.0

    def leg_units(self) -> np.ndarray:
        units = np.zeros(self.portfolio.size)
        for leg in self.cds_legs:
            units[leg.index - 1] = leg.units
        return units

    def to_dict(self) -> dict:
        return {
            "attachment": self.attachment,
            "decomposition": {"n": self.decomposition.n, "epsilon": self.decomposition.epsilon,
                              "stress_lgd": self.decomposition.stress_lgd},
            "tranche_leg": {"side": "sell protection", "units": self.tranche_units,
                            "attachment": self.attachment},
            "cds_legs": [{"name": leg.label, "index": leg.index, "side": "buy protection",
                          "units": leg.units} for leg in self.cds_legs],
        }


def _capacities(portfolio: ReferencePortfolio, stress_lgd: bool) -> np.ndarray:
    return portfolio.notionals if stress_lgd else portfolio.capacities


def decompose_attachment(portfolio: ReferencePortfolio, attachment: float,
                         stress_lgd: bool = False) -> AttachmentDecomposition:
    """Find the pivot name and fraction for an attachment point.

    Scans from the riskiest name downward. Names with zero loss capacity are
    skipped. An attachment sitting on a rung (within 1e-12) gets eps = 1 at the
    larger n, never eps = 0.
    """
    caps = _capacities(portfolio, stress_lgd)
    total = math.fsum(caps)
    if not attachment > 0.0:
        raise OutOfRangeError(f"attachment {attachment!r} must be positive")
    if attachment > total + PROB_TOL:
        raise OutOfRangeError(
            f"attachment {attachment!r} exceeds the total loss capacity {total!r}")
    tail = 0.0
    for k in range(portfolio.size - 1, -1, -1):
        cap = float(caps[k])
        if cap == 0.0:
            continue
        if attachment <= tail + cap + PROB_TOL:
            eps = 1.0 if attachment >= tail + cap - PROB_TOL else (attachment - tail) / cap
            return AttachmentDecomposition(k + 1, eps, stress_lgd)
        tail = math.fsum(caps[k:])
    raise OutOfRangeError(f"attachment {attachment!r} cannot be decomposed")


def build_arbitrage_portfolio(portfolio: ReferencePortfolio, attachment: float,
                              stress_lgd: bool = False) -> ArbitragePortfolio:
    dec = decompose_attachment(portfolio, attachment, stress_lgd)
    legs = [CdsLeg(i + 1, portfolio[i].label, portfolio[i].notional) for i in range(dec.n - 1)]
    pivot_units = (1.0 - dec.epsilon) * portfolio[dec.n - 1].notional
    if pivot_units > 0.0:
        legs.append(CdsLeg(dec.n, portfolio[dec.n - 1].label, pivot_units))
    return ArbitragePortfolio(portfolio, float(attachment), dec, tuple(legs))


def terminal_values(arb: ArbitragePortfolio, scenarios: np.ndarray) -> np.ndarray:
    """Value at maturity per scenario row: protection received minus tranche loss paid."""
    pf = arb.portfolio
    bits = np.asarray(scenarios, dtype=np.float64)
    loss = bits @ pf.capacities
    received = bits @ (arb.leg_units() * pf.lgds)
    paid = arb.tranche_units * np.maximum(loss - arb.attachment, 0.0)
    return received - paid


@dataclass
class MaturityReport:
    min_value: float
    max_value: float
    worst_scenario: tuple[int, ...]
    best_scenario: tuple[int, ...]
    profitable_scenarios: list[tuple[int, ...]] = field(default_factory=list)
    n_scenarios: int = 0

    @property
    def nonnegative(self) -> bool:
        return self.min_value >= -VALUE_TOL

    def to_dict(self, max_listed: int = 64) -> dict:
        return {
            "min_value": self.min_value,
            "max_value": self.max_value,
            "nonnegative": self.nonnegative,
            "worst_scenario": list(self.worst_scenario),
            "best_scenario": list(self.best_scenario),
            "n_scenarios": self.n_scenarios,
            "n_profitable": len(self.profitable_scenarios),
            "profitable_scenarios": [list(s) for s in self.profitable_scenarios[:max_listed]],
        }


def verify_nonnegative_maturity(arb: ArbitragePortfolio) -> MaturityReport:
    """Evaluate the position in every one of the 2**N default scenarios."""
    bits = scenario_matrix(arb.portfolio.size)
    values = terminal_values(arb, bits)
    worst, best = int(np.argmin(values)), int(np.argmax(values))
    profitable = [tuple(int(b) for b in bits[k]) for k in np.flatnonzero(values > VALUE_TOL)]
    return MaturityReport(
        min_value=float(values[worst]),
        max_value=float(values[best]),
        worst_scenario=tuple(int(b) for b in bits[worst]),
        best_scenario=tuple(int(b) for b in bits[best]),
        profitable_scenarios=profitable,
        n_scenarios=int(values.size),
    )


def cds_leg_cost(arb: ArbitragePortfolio) -> float:
    """Up-front premium paid for the single-name protection legs."""
    pf = arb.portfolio
    return math.fsum(leg.units * pf[leg.index - 1].lgd * pf[leg.index - 1].default_prob
                     for leg in arb.cds_legs)


def initial_value(arb: ArbitragePortfolio, tranche_market_price: float) -> float:
    """Cost of entering the position: CDS premiums paid minus tranche premium received.

    Negative means we are paid to enter.
    """
    return cds_leg_cost(arb) - arb.tranche_units * tranche_market_price


@dataclass
class ArbitrageCertificate:
    issued: bool
    initial_value: float
    guaranteed_profit: float
    break_even_price: float
    maximal_correlation_price: float
    maturity: MaturityReport
    arbitrage: ArbitragePortfolio

    def to_dict(self) -> dict:
        return {
            "certificate": self.issued,
            "initial_value": self.initial_value,
            "guaranteed_profit": self.guaranteed_profit,
            "break_even_price": self.break_even_price,
            "maximal_correlation_price": self.maximal_correlation_price,
            "min_maturity_value": self.maturity.min_value,
            "maturity": self.maturity.to_dict(),
            "portfolio": self.arbitrage.to_dict(),
        }


def arbitrage_certificate(portfolio: ReferencePortfolio, attachment: float, market_price: float,
                          stress_lgd: bool = False) -> ArbitrageCertificate:
    """Issue a certificate iff entry pays us (beyond 1e-12) and no scenario loses money."""
    arb = build_arbitrage_portfolio(portfolio, attachment, stress_lgd)
    maturity = verify_nonnegative_maturity(arb)
    v0 = initial_value(arb, market_price)
    # zero within rounding is break-even, not arbitrage
    issued = v0 < -VALUE_TOL and maturity.nonnegative
    ladder_price = price_tranche_exhaustive(portfolio, TrancheSpec(attachment),
                                            build_ladder(portfolio)).value
    return ArbitrageCertificate(
        issued=issued,
        initial_value=v0,
        guaranteed_profit=-v0 if issued else 0.0,
        break_even_price=cds_leg_cost(arb),
        maximal_correlation_price=ladder_price,
        maturity=maturity,
        arbitrage=arb,
    )

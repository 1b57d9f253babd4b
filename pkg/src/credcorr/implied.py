"""Implied flat correlation of a supersenior quote and breakdown diagnosis.

Supersenior value rises with flat asset correlation, so a quote is inverted
by bisection on [0, 1]. A quote above the 100%-correlation price has no
consistent solution; it is reported as ``breakdown`` rather than as a
correlation above one.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .copula import AssetCorrelationSpec, _loss_lattice, flat_copula_loss_distribution
from .core import EXHAUSTIVE_CUTOFF, ReferencePortfolio
from .errors import CutoffExceededError, SolverError, ValidationError
from .ladder import build_ladder
from .pricing import SUPERSENIOR, TrancheSpec, price_tranche_exhaustive, price_tranche_mc

SOLVED = "solved"
BREAKDOWN = "breakdown"
BELOW_RANGE = "below-range"

RHO_TOL = 1e-7
PRICE_TOL = 1e-10
MAX_ITER = 200


@dataclass
class PricingConfig:
    method: str = "auto"  # auto | exhaustive | mc
    draws: int = 200_000
    seed: int = 0
    threads: int | None = None

    def __post_init__(self):
        if self.method not in ("auto", "exhaustive", "mc"):
            raise ValidationError(f"unknown pricing method {self.method!r}")


@dataclass
class CalibrationResult:
    status: str
    rho: float | None
    price_at_one: float
    price_at_zero: float
    market_price: float
    iterations: int = 0
    method: str = "exhaustive"
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


class _FlatPricer:
    def __init__(self, portfolio: ReferencePortfolio, tranche: TrancheSpec, config: PricingConfig):
        self.portfolio = portfolio
        self.tranche = tranche
        self.config = config
        self.method = config.method
        if self.method == "auto":
            self.method = "exhaustive" if portfolio.size <= EXHAUSTIVE_CUTOFF else "mc"
        if self.method == "exhaustive":
            try:
                _loss_lattice(portfolio.capacities)
            except CutoffExceededError:
                if config.method == "exhaustive":
                    raise
                self.method = "mc"

    def __call__(self, rho: float) -> tuple[float, float]:
        """Model price and its standard error at flat correlation ``rho``."""
        if rho == 1.0:
            # analytic endpoint, never blurred by sampling noise
            return price_tranche_exhaustive(self.portfolio, self.tranche,
                                            build_ladder(self.portfolio)).value, 0.0
        if self.method == "exhaustive":
            law = flat_copula_loss_distribution(self.portfolio, rho)
            return price_tranche_exhaustive(self.portfolio, self.tranche, law).value, 0.0
        # same seed at every rho: common random numbers keep the curve smooth
        v = price_tranche_mc(self.portfolio, self.tranche, AssetCorrelationSpec(flat=rho),
                             self.config.draws, self.config.seed, self.config.threads)
        return v.value, v.stderr


def implied_flat_correlation(portfolio: ReferencePortfolio, tranche: TrancheSpec,
                             market_price: float, config: PricingConfig | None = None) -> CalibrationResult:
    if tranche.kind != SUPERSENIOR:
        raise ValidationError("implied correlation is defined here for supersenior tranches only")
    if not market_price >= 0.0:
        raise ValidationError(f"market price {market_price!r} must be non-negative")
    config = config or PricingConfig()
    pricer = _FlatPricer(portfolio, tranche, config)
    p1, _ = pricer(1.0)
    p0, se0 = pricer(0.0)
    base = CalibrationResult(BREAKDOWN, None, p1, p0, market_price, 0, pricer.method)

    if market_price > p1 + PRICE_TOL:
        return base
    if market_price < p0 - max(PRICE_TOL, 2.0 * se0):
        base.status = BELOW_RANGE
        return base

    widen = 1.0
    for attempt in range(2):
        try:
            rho, iters, diag = _bisect(pricer, market_price, p0, p1, widen)
        except _NonMonotone as exc:
            if attempt == 0:
                widen = 4.0
                continue
            raise SolverError("price is not monotone in correlation over the bracket",
                              exc.diagnostics) from None
        base.status = SOLVED
        base.rho = rho
        base.iterations = iters
        base.diagnostics = diag
        return base
    raise AssertionError("unreachable")


class _NonMonotone(Exception):
    def __init__(self, diagnostics: dict):
        super().__init__(diagnostics)
        self.diagnostics = diagnostics


def _bisect(pricer: _FlatPricer, target: float, p0: float, p1: float, widen: float):
    lo, hi = 0.0, 1.0
    f_lo, f_hi = p0, p1
    if abs(p0 - target) <= PRICE_TOL:
        return 0.0, 0, {"final_gap": p0 - target}
    if abs(p1 - target) <= PRICE_TOL:
        return 1.0, 0, {"final_gap": p1 - target}
    for it in range(1, MAX_ITER + 1):
        mid = 0.5 * (lo + hi)
        f, se = pricer(mid)
        tol = max(PRICE_TOL, 2.0 * se) * widen
        if f < f_lo - tol or f > f_hi + tol:
            raise _NonMonotone({"lo": lo, "hi": hi, "mid": mid, "price_lo": f_lo,
                                "price_hi": f_hi, "price_mid": f, "stderr": se})
        if abs(f - target) <= tol:
            return mid, it, {"final_gap": f - target, "stderr": se}
        if f < target:
            lo, f_lo = mid, f
        else:
            hi, f_hi = mid, f
        if hi - lo <= RHO_TOL:
            rho = 0.5 * (lo + hi)
            return rho, it, {"final_gap": f - target, "stderr": se}
    raise SolverError("bisection did not converge", {"lo": lo, "hi": hi})


@dataclass
class BreakdownReport:
    calibration: CalibrationResult
    excess_premium: float
    text: str

    def to_dict(self) -> dict:
        return {"calibration": self.calibration.to_dict(), "excess_premium": self.excess_premium,
                "text": self.text}


def breakdown_report(portfolio: ReferencePortfolio, tranche: TrancheSpec, market_price: float,
                     config: PricingConfig | None = None) -> BreakdownReport:
    res = implied_flat_correlation(portfolio, tranche, market_price, config)
    excess = max(market_price - res.price_at_one, 0.0)
    lines = [
        f"supersenior tranche attaching at {tranche.attachment:g}, quoted at {market_price:.10g}",
        f"model price at 0% correlation:   {res.price_at_zero:.10g}",
        f"model price at 100% correlation: {res.price_at_one:.10g}",
    ]
    if res.status == SOLVED:
        lines.append(f"status: solved, implied flat correlation {res.rho:.8f}")
    elif res.status == BELOW_RANGE:
        lines.append("status: below-range, quote is cheaper than the independent-default price")
    else:
        lines.append(
            f"status: breakdown, quote exceeds the maximal-correlation price by {excess:.10g}. "
            "No consistent default law reproduces it. Selling the tranche and buying "
            "single-name protection on the least risky names locks in at least this excess; "
            "see build_arbitrage_portfolio / `credcorr arb`.")
    return BreakdownReport(res, excess, "\n".join(lines))

"""Domain types shared by every module: obligors, portfolios, scenarios, laws.

Scenario enumeration order is binary counting with name 1 as the least
significant bit, so scenario index ``k`` has ``I_i = (k >> (i - 1)) & 1``.
Every full probability table in the package uses that order.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import (
    CutoffExceededError,
    PortfolioParseError,
    ScenarioSizeError,
    ValidationError,
)

EXHAUSTIVE_CUTOFF = 24
PROB_TOL = 1e-12
CSV_HEADER = ("label", "default_prob", "recovery", "notional")


@dataclass(frozen=True)
class ObligorName:
    label: str
    default_prob: float
    recovery: float = 0.0
    notional: float = 1.0

    def __post_init__(self):
        for attr in ("default_prob", "recovery", "notional"):
            value = getattr(self, attr)
            if not isinstance(value, (int, float)) or math.isnan(value):
                raise ValidationError(f"{self.label}: {attr} must be a number, got {value!r}")
            object.__setattr__(self, attr, float(value))
        if not 0.0 <= self.default_prob <= 1.0:
            raise ValidationError(f"{self.label}: default_prob {self.default_prob} outside [0, 1]")
        if not 0.0 <= self.recovery <= 1.0:
            raise ValidationError(f"{self.label}: recovery {self.recovery} outside [0, 1]")
        if self.notional < 0.0:
            raise ValidationError(f"{self.label}: notional {self.notional} is negative")

    @property
    def lgd(self) -> float:
        return 1.0 - self.recovery

    @property
    def loss_capacity(self) -> float:
        """Portfolio loss caused by this name defaulting, ``N_i * lgd_i``."""
        return self.notional * self.lgd


@dataclass(frozen=True)
class ReferencePortfolio:
    """Obligors held in non-decreasing order of default probability.

    The sort is stable, so names with equal probabilities keep their input
    order.
    """

    names: tuple[ObligorName, ...]

    def __post_init__(self):
        names = tuple(self.names)
        if not names:
            raise ValidationError("portfolio has no names")
        for n in names:
            if not isinstance(n, ObligorName):
                raise ValidationError(f"expected ObligorName, got {type(n).__name__}")
        object.__setattr__(self, "names", tuple(sorted(names, key=lambda n: n.default_prob)))

    @classmethod
    def from_arrays(cls, probs, recoveries=None, notionals=None, labels=None) -> "ReferencePortfolio":
        probs = list(probs)
        size = len(probs)
        recoveries = [0.0] * size if recoveries is None else list(recoveries)
        notionals = [1.0 / size] * size if notionals is None else list(notionals)
        labels = [f"name{i + 1}" for i in range(size)] if labels is None else list(labels)
        if not len(recoveries) == len(notionals) == len(labels) == size:
            raise ValidationError("array lengths disagree")
        return cls(tuple(
            ObligorName(lab, float(p), float(r), float(n))
            for lab, p, r, n in zip(labels, probs, recoveries, notionals)
        ))

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self) -> Iterator[ObligorName]:
        return iter(self.names)

    def __getitem__(self, i: int) -> ObligorName:
        return self.names[i]

    @property
    def size(self) -> int:
        return len(self.names)

    @property
    def probs(self) -> NDArray[np.float64]:
        return np.array([n.default_prob for n in self.names])

    @property
    def lgds(self) -> NDArray[np.float64]:
        return np.array([n.lgd for n in self.names])

    @property
    def notionals(self) -> NDArray[np.float64]:
        return np.array([n.notional for n in self.names])

    @property
    def capacities(self) -> NDArray[np.float64]:
        return np.array([n.loss_capacity for n in self.names])

    @property
    def labels(self) -> list[str]:
        return [n.label for n in self.names]

    def total_capacity(self) -> float:
        return math.fsum(n.loss_capacity for n in self.names)

    def expected_loss(self) -> float:
        """Expected portfolio loss; depends on marginals only, never on correlation."""
        return math.fsum(n.loss_capacity * n.default_prob for n in self.names)

    def notional_sum(self) -> float:
        return math.fsum(n.notional for n in self.names)


@dataclass(frozen=True)
class DefaultScenario:
    indicators: tuple[int, ...]

    def __post_init__(self):
        ind = tuple(int(v) for v in self.indicators)
        if any(v not in (0, 1) for v in ind):
            raise ValidationError(f"indicators must be 0/1, got {self.indicators!r}")
        object.__setattr__(self, "indicators", ind)

    def __len__(self) -> int:
        return len(self.indicators)

    @property
    def index(self) -> int:
        return sum(v << i for i, v in enumerate(self.indicators))

    @classmethod
    def from_index(cls, index: int, n_names: int) -> "DefaultScenario":
        return cls(tuple((index >> i) & 1 for i in range(n_names)))

    def defaulted(self) -> list[int]:
        """Zero-based positions of the defaulted names."""
        return [i for i, v in enumerate(self.indicators) if v]


def portfolio_loss(portfolio: ReferencePortfolio, scenario: DefaultScenario) -> float:
    if len(scenario) != portfolio.size:
        raise ScenarioSizeError(
            f"scenario has {len(scenario)} indicators, portfolio has {portfolio.size} names")
    return math.fsum(n.loss_capacity for n, v in zip(portfolio.names, scenario.indicators) if v)


def _check_cutoff(n_names: int) -> None:
    if n_names < 0:
        raise ValidationError("n_names must be non-negative")
    if n_names > EXHAUSTIVE_CUTOFF:
        raise CutoffExceededError(
            f"{n_names} names exceed the exhaustive cutoff of {EXHAUSTIVE_CUTOFF}; "
            "use Monte Carlo pricing instead")


def enumerate_scenarios(n_names: int) -> Iterator[DefaultScenario]:
    """Yield all ``2**n_names`` scenarios in binary-counting order."""
    _check_cutoff(n_names)
    for k in range(1 << n_names):
        yield DefaultScenario.from_index(k, n_names)


def scenario_matrix(n_names: int) -> NDArray[np.uint8]:
    """All scenarios as a ``(2**n, n)`` 0/1 array, row ``k`` is scenario ``k``."""
    _check_cutoff(n_names)
    idx = np.arange(1 << n_names, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n_names, dtype=np.int64)[None, :]) & 1
    return bits.astype(np.uint8)


def scenario_indices(samples: NDArray) -> NDArray[np.int64]:
    """Pack rows of 0/1 indicators into scenario indices."""
    samples = np.asarray(samples)
    weights = np.left_shift(np.int64(1), np.arange(samples.shape[1], dtype=np.int64))
    return samples.astype(np.int64) @ weights


def scenario_losses(portfolio: ReferencePortfolio, samples: NDArray) -> NDArray[np.float64]:
    samples = np.asarray(samples)
    if samples.ndim != 2 or samples.shape[1] != portfolio.size:
        raise ScenarioSizeError(
            f"scenario array shape {samples.shape} does not match {portfolio.size} names")
    return samples.astype(np.float64) @ portfolio.capacities


@dataclass(frozen=True)
class ScenarioTable:
    """A full joint default law: one probability per scenario, 2**N entries."""

    probs: NDArray[np.float64]
    n_names: int = field(init=False)

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0 or probs.size & (probs.size - 1):
            raise ValidationError(f"table length {probs.size} is not a power of two")
        n_names = probs.size.bit_length() - 1
        _check_cutoff(n_names)
        if np.any(~np.isfinite(probs)):
            raise ValidationError("table has non-finite entries")
        worst = float(probs.min())
        if worst < -PROB_TOL:
            raise ValidationError(f"table has a negative entry {worst:.3e}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"table sums to {total!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "n_names", n_names)

    def marginals(self) -> NDArray[np.float64]:
        bits = scenario_matrix(self.n_names).astype(np.float64)
        return self.probs @ bits

    def pair_default_probs(self) -> NDArray[np.float64]:
        """Matrix of ``P(I_i = 1, I_j = 1)``; its diagonal holds the marginals."""
        bits = scenario_matrix(self.n_names).astype(np.float64)
        return bits.T @ (bits * self.probs[:, None])


@dataclass(frozen=True)
class LossDistribution:
    """Discrete portfolio loss law; levels ascending and distinct."""

    levels: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(x) for x in self.levels)
        probs = tuple(float(x) for x in self.probs)
        if len(levels) != len(probs):
            raise ValidationError("levels and probabilities differ in length")
        if not levels:
            raise ValidationError("empty loss distribution")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValidationError("loss levels must be distinct and ascending")
        if any(p < 0.0 for p in probs):
            raise ValidationError("negative probability in loss distribution")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"loss probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_samples(cls, losses: Sequence[float], probs: Sequence[float],
                     merge_tol: float = PROB_TOL, drop_zero: bool = True) -> "LossDistribution":
        """Aggregate (loss, probability) pairs, merging levels closer than ``merge_tol``."""
        pairs = sorted(zip(map(float, losses), map(float, probs)))
        levels: list[float] = []
        masses: list[list[float]] = []
        for loss, p in pairs:
            if drop_zero and p == 0.0:
                continue
            if levels and loss - levels[-1] <= merge_tol:
                masses[-1].append(p)
            else:
                levels.append(loss)
                masses.append([p])
        # clamp quadrature noise of order 1e-17 below zero
        return cls(tuple(levels), tuple(max(math.fsum(m), 0.0) for m in masses))

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.levels, self.probs))

    def expectation(self, payoff) -> float:
        values = payoff(np.asarray(self.levels))
        return math.fsum(np.asarray(self.probs) * values)

    def mean(self) -> float:
        return math.fsum(l * p for l, p in zip(self.levels, self.probs))


def table_loss_distribution(portfolio: ReferencePortfolio, table: ScenarioTable) -> LossDistribution:
    if table.n_names != portfolio.size:
        raise ScenarioSizeError(
            f"table covers {table.n_names} names, portfolio has {portfolio.size}")
    losses = scenario_losses(portfolio, scenario_matrix(portfolio.size))
    return LossDistribution.from_samples(losses, table.probs)


def independent_table(portfolio: ReferencePortfolio) -> ScenarioTable:
    """Joint law of independent defaults (zero correlation)."""
    bits = scenario_matrix(portfolio.size).astype(bool)
    p = portfolio.probs
    probs = np.prod(np.where(bits, p[None, :], 1.0 - p[None, :]), axis=1)
    return ScenarioTable(probs)


# --- portfolio file format -------------------------------------------------

def parse_portfolio(text: str) -> ReferencePortfolio:
    reader = csv.reader(io.StringIO(text))
    rows = [(i + 1, row) for i, row in enumerate(reader)]
    rows = [(ln, row) for ln, row in rows if row and not row[0].lstrip().startswith("#")]
    if not rows:
        raise PortfolioParseError("empty portfolio file", 1)
    ln, header = rows[0]
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise PortfolioParseError(f"expected header {','.join(CSV_HEADER)}, got {','.join(header)}", ln)
    names = []
    for ln, row in rows[1:]:
        if len(row) != len(CSV_HEADER):
            raise PortfolioParseError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", ln)
        label = row[0].strip()
        try:
            values = [float(x) for x in row[1:]]
        except ValueError as exc:
            raise PortfolioParseError(str(exc), ln) from None
        try:
            names.append(ObligorName(label, *values))
        except ValidationError as exc:
            raise PortfolioParseError(str(exc), ln) from None
    if not names:
        raise PortfolioParseError("portfolio has no names", ln)
    return ReferencePortfolio(tuple(names))


def read_portfolio(path: str | Path) -> ReferencePortfolio:
    return parse_portfolio(Path(path).read_text())


def format_portfolio(portfolio: ReferencePortfolio) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for n in portfolio:
        writer.writerow([n.label, repr(n.default_prob), repr(n.recovery), repr(n.notional)])
    return out.getvalue()


def write_portfolio(portfolio: ReferencePortfolio, path: str | Path) -> None:
    Path(path).write_text(format_portfolio(portfolio))


def example5_path() -> Path:
    return Path(__file__).with_name("data") / "example5.csv"


def load_fixture(name: str = "example5") -> ReferencePortfolio:
    path = Path(__file__).with_name("data") / f"{name}.csv"
    if not path.exists():
        raise ValidationError(f"no bundled fixture named {name!r}")
    return read_portfolio(path)


def as_scenarios(samples: Iterable[Sequence[int]]) -> list[DefaultScenario]:
    return [DefaultScenario(tuple(row)) for row in samples]

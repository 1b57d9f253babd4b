"""The maximal-correlation ("ladder") default process.

With names sorted by default probability, the only scenarios carrying mass
are "first n names survive, the remaining N - n default", with probability
``p_{n+1} - p_n`` (``p_0 = 0``, ``p_{N+1} = 1``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .core import (
    DefaultScenario,
    LossDistribution,
    ReferencePortfolio,
    ScenarioTable,
    _check_cutoff,
)
from .errors import ScenarioSizeError, ValidationError
from .rng import map_chunks

TABLE_TOL = 1e-10


@dataclass(frozen=True)
class LadderProcess:
    portfolio: ReferencePortfolio
    scenario_probs: tuple[float, ...]

    @property
    def size(self) -> int:
        return self.portfolio.size

    def scenario(self, survivors: int) -> DefaultScenario:
        n = self.size
        return DefaultScenario((0,) * survivors + (1,) * (n - survivors))

    def scenario_index(self, survivors: int) -> int:
        return (1 << self.size) - (1 << survivors)

    def scenarios(self) -> list[tuple[DefaultScenario, float]]:
        """``(scenario, probability)`` for survivors = 0..N, zero-mass rungs included."""
        return [(self.scenario(k), p) for k, p in enumerate(self.scenario_probs)]

    def losses(self) -> NDArray[np.float64]:
        """Portfolio loss on each rung; entry k has the first k names surviving."""
        caps = self.portfolio.capacities
        return np.array([math.fsum(caps[k:]) for k in range(self.size + 1)])

    def implied_default_prob(self, i: int) -> float:
        """Zero-based name ``i`` defaults on every rung with fewer than i + 1 survivors."""
        return math.fsum(self.scenario_probs[: i + 1])

    def table(self) -> ScenarioTable:
        _check_cutoff(self.size)
        probs = np.zeros(1 << self.size)
        for k, p in enumerate(self.scenario_probs):
            probs[self.scenario_index(k)] = p
        return ScenarioTable(probs)


def build_ladder(portfolio: ReferencePortfolio) -> LadderProcess:
    p = [0.0] + [n.default_prob for n in portfolio] + [1.0]
    probs = tuple(p[k + 1] - p[k] for k in range(portfolio.size + 1))
    return LadderProcess(portfolio, probs)


def ladder_loss_distribution(process: LadderProcess) -> LossDistribution:
    return LossDistribution.from_samples(process.losses(), process.scenario_probs)


def ladder_defaults(process: LadderProcess, x: NDArray | float) -> NDArray[np.uint8]:
    """Default indicators for uniform draws ``x``: name i defaults iff ``p_i > x``."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return (process.portfolio.probs[None, :] > x[:, None]).astype(np.uint8)


def simulate_ladder(process: LadderProcess, draws: int, seed: int,
                    threads: int | None = None) -> NDArray[np.uint8]:
    """Sample ``draws`` scenarios, one uniform per draw; rows are scenarios."""
    chunks = map_chunks(lambda rng, m: ladder_defaults(process, rng.random(m)), draws, seed, threads)
    return np.concatenate(chunks, axis=0)


@dataclass
class UniquenessReport:
    marginals_ok: bool
    saturated_ok: bool
    equals_ladder: bool
    max_marginal_error: float
    max_wrong_order_mass: float
    max_table_diff: float

    @property
    def passed(self) -> bool:
        return self.marginals_ok and self.saturated_ok and self.equals_ladder

    def __bool__(self) -> bool:
        return self.passed


def verify_uniqueness(joint: ScenarioTable | NDArray, portfolio: ReferencePortfolio,
                      tol: float = TABLE_TOL) -> UniquenessReport:
    """Check a full joint table against the marginals and saturated correlations.

    Saturation for a pair i < j (sorted order) is equivalent to
    ``P(I_i = 1, I_j = 0) = 0``. When both the marginal and saturation checks
    hold, the table must coincide with the ladder table; ``equals_ladder``
    records whether it does.
    """
    if not isinstance(joint, ScenarioTable):
        joint = ScenarioTable(np.asarray(joint, dtype=np.float64))
    if joint.n_names != portfolio.size:
        raise ScenarioSizeError(
            f"table covers {joint.n_names} names, portfolio has {portfolio.size}")
    if portfolio.probs.tolist() != sorted(portfolio.probs.tolist()):
        raise ValidationError("portfolio is not sorted by default probability")

    pair = joint.pair_default_probs()
    marg = np.diag(pair)
    marginal_err = float(np.max(np.abs(marg - portfolio.probs)))
    # P(I_i=1, I_j=0) = P(I_i=1) - P(I_i=1, I_j=1), upper triangle only
    wrong = marg[:, None] - pair
    iu = np.triu_indices(portfolio.size, k=1)
    wrong_mass = float(np.max(np.abs(wrong[iu]))) if iu[0].size else 0.0

    marginals_ok = marginal_err <= tol
    saturated_ok = wrong_mass <= tol
    table_diff = float(np.max(np.abs(joint.probs - build_ladder(portfolio).table().probs)))
    return UniquenessReport(
        marginals_ok=marginals_ok,
        saturated_ok=saturated_ok,
        equals_ladder=table_diff <= tol,
        max_marginal_error=marginal_err,
        max_wrong_order_mass=wrong_mass,
        max_table_diff=table_diff,
    )


def is_hierarchical(samples: NDArray) -> NDArray[np.bool_]:
    """Row-wise: every defaulted name is followed only by defaulted names."""
    samples = np.asarray(samples)
    return np.all(samples[:, 1:] >= samples[:, :-1], axis=1)

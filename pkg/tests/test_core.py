import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from credcorr.core import (
    EXHAUSTIVE_CUTOFF,
    DefaultScenario,
    LossDistribution,
    ObligorName,
    ReferencePortfolio,
    ScenarioTable,
    enumerate_scenarios,
    format_portfolio,
    independent_table,
    parse_portfolio,
    portfolio_loss,
    read_portfolio,
    scenario_matrix,
    write_portfolio,
)
from credcorr.errors import (
    CutoffExceededError,
    PortfolioParseError,
    ScenarioSizeError,
    ValidationError,
)


def test_obligor_lgd_is_one_minus_recovery():
    n = ObligorName("x", 0.04, 0.4, 0.1)
    assert n.lgd == 1.0 - 0.4
    assert n.loss_capacity == pytest.approx(0.06)


@pytest.mark.parametrize("kwargs", [
    dict(default_prob=-0.1), dict(default_prob=1.1), dict(recovery=1.5),
    dict(recovery=-0.01), dict(notional=-1.0), dict(default_prob=float("nan")),
])
def test_obligor_rejects_bad_fields(kwargs):
    base = dict(label="x", default_prob=0.1, recovery=0.4, notional=0.2)
    base.update(kwargs)
    with pytest.raises(ValidationError):
        ObligorName(**base)


def test_portfolio_sorted_and_stable():
    names = [ObligorName("a", 0.04), ObligorName("b", 0.01), ObligorName("c", 0.006),
             ObligorName("d", 0.01), ObligorName("e", 0.012)]
    pf = ReferencePortfolio(tuple(names))
    assert pf.labels == ["c", "b", "d", "e", "a"]


@settings(max_examples=50, deadline=None)
@given(st.permutations(range(6)))
def test_portfolio_order_independent_of_input_permutation(perm):
    probs = [0.05, 0.01, 0.03, 0.01, 0.2, 0.07]
    names = [ObligorName(f"n{i}", probs[i]) for i in range(6)]
    base = ReferencePortfolio(tuple(names))
    shuffled = ReferencePortfolio(tuple(names[i] for i in perm))
    assert base.probs.tolist() == shuffled.probs.tolist()
    # ties keep their relative input order
    tied = [lab for lab in shuffled.labels if lab in ("n1", "n3")]
    assert tied == [f"n{i}" for i in perm if i in (1, 3)]


def test_portfolio_loss_examples(example5):
    assert portfolio_loss(example5, DefaultScenario((0,) * 5)) == 0.0
    assert portfolio_loss(example5, DefaultScenario((0, 0, 0, 1, 1))) == pytest.approx(0.4, abs=1e-15)
    assert portfolio_loss(example5, DefaultScenario((1,) * 5)) == pytest.approx(1.0, abs=1e-15)


def test_portfolio_loss_size_mismatch(example5):
    with pytest.raises(ScenarioSizeError):
        portfolio_loss(example5, DefaultScenario((1, 0)))


def test_scenario_rejects_non_binary():
    with pytest.raises(ValidationError):
        DefaultScenario((0, 2))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=5, max_size=5), st.integers(0, 4))
def test_portfolio_loss_monotone(bits, k):
    pf = ReferencePortfolio.from_arrays([0.01, 0.02, 0.03, 0.04, 0.05], [0.1, 0.5, 0.0, 0.9, 0.3],
                                        [0.1, 0.3, 0.2, 0.25, 0.15])
    before = portfolio_loss(pf, DefaultScenario(tuple(bits)))
    bits[k] = 1
    assert portfolio_loss(pf, DefaultScenario(tuple(bits))) >= before


def test_enumerate_small():
    assert [s.indicators for s in enumerate_scenarios(1)] == [(0,), (1,)]
    two = [s.indicators for s in enumerate_scenarios(2)]
    assert two == [(0, 0), (1, 0), (0, 1), (1, 1)]


@pytest.mark.parametrize("n", [0, 1, 3, 5, 8])
def test_enumerate_count_and_distinct(n):
    rows = [s.indicators for s in enumerate_scenarios(n)]
    assert len(rows) == 2 ** n == len(set(rows))
    assert set(rows) == set(itertools.product((0, 1), repeat=n))
    np.testing.assert_array_equal(scenario_matrix(n), np.array(rows, dtype=np.uint8).reshape(2 ** n, n))


def test_enumerate_measure_sums_to_one(example5):
    table = independent_table(example5)
    assert len(list(enumerate_scenarios(5))) == table.probs.size == 32
    assert sum(table.probs) == pytest.approx(1.0, abs=1e-12)


def test_enumerate_cutoff():
    with pytest.raises(CutoffExceededError, match="Monte Carlo"):
        list(enumerate_scenarios(EXHAUSTIVE_CUTOFF + 1))


def test_scenario_index_roundtrip():
    for k in range(16):
        assert DefaultScenario.from_index(k, 4).index == k


def test_scenario_table_validation():
    with pytest.raises(ValidationError):
        ScenarioTable(np.array([0.5, 0.6]))
    with pytest.raises(ValidationError):
        ScenarioTable(np.array([1.1, -0.1]))
    with pytest.raises(ValidationError):
        ScenarioTable(np.array([0.2, 0.3, 0.5]))


def test_loss_distribution_merges_and_validates():
    d = LossDistribution.from_samples([0.4, 0.2 + 0.2, 0.0, 0.3], [0.1, 0.2, 0.6, 0.1])
    assert d.levels == (0.0, 0.3, 0.4)
    assert d.probs[2] == pytest.approx(0.3)
    with pytest.raises(ValidationError):
        LossDistribution((0.0, 0.1), (0.5, 0.4))
    with pytest.raises(ValidationError):
        LossDistribution((0.1, 0.0), (0.5, 0.5))
    with pytest.raises(ValidationError):
        LossDistribution((), ())


def test_portfolio_csv_roundtrip(tmp_path, rng):
    from conftest import random_portfolio
    pf = random_portfolio(rng, 7)
    path = tmp_path / "pf.csv"
    write_portfolio(pf, path)
    assert read_portfolio(path) == pf
    assert parse_portfolio(format_portfolio(pf)) == pf


def test_portfolio_csv_errors_carry_line_numbers():
    text = "label,default_prob,recovery,notional\na,0.01,0,0.5\nb,zero,0,0.5\n"
    with pytest.raises(PortfolioParseError, match="line 3"):
        parse_portfolio(text)
    with pytest.raises(PortfolioParseError, match="line 1"):
        parse_portfolio("name,p\n")
    with pytest.raises(PortfolioParseError, match="line 2"):
        parse_portfolio("label,default_prob,recovery,notional\na,1.5,0,1\n")


def test_fixture_matches_worked_example(example5):
    assert example5.probs.tolist() == [0.006, 0.01, 0.01, 0.012, 0.04]
    assert example5.notionals.tolist() == [0.2] * 5
    assert example5.lgds.tolist() == [1.0] * 5

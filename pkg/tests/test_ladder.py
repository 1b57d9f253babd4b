import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from credcorr.core import ReferencePortfolio, independent_table
from credcorr.errors import ScenarioSizeError
from credcorr.ladder import (
    build_ladder,
    is_hierarchical,
    ladder_defaults,
    ladder_loss_distribution,
    simulate_ladder,
    verify_uniqueness,
)

from conftest import random_portfolio


def test_fixture_ladder(example5):
    lad = build_ladder(example5)
    # survivors 0..5
    assert lad.scenario_probs == pytest.approx((0.006, 0.004, 0.0, 0.002, 0.028, 0.96), abs=1e-15)
    assert lad.scenario(5).indicators == (0, 0, 0, 0, 0)
    assert lad.scenario(4).indicators == (0, 0, 0, 0, 1)
    assert lad.scenario_index(0) == 31 and lad.scenario_index(5) == 0


def test_fixture_loss_distribution(example5):
    dist = dict(ladder_loss_distribution(build_ladder(example5)).points)
    expected = {0.0: 0.96, 0.2: 0.028, 0.4: 0.002, 0.8: 0.004, 1.0: 0.006}
    assert len(dist) == len(expected)
    for (lv, pv), (le, pe) in zip(sorted(dist.items()), sorted(expected.items())):
        assert lv == pytest.approx(le, abs=1e-12)
        assert pv == pytest.approx(pe, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=10))
def test_ladder_is_a_distribution_with_right_marginals(ps):
    pf = ReferencePortfolio.from_arrays(ps)
    lad = build_ladder(pf)
    assert len(lad.scenario_probs) == pf.size + 1
    assert min(lad.scenario_probs) >= 0.0
    assert sum(lad.scenario_probs) == pytest.approx(1.0, abs=1e-12)
    for i in range(pf.size):
        assert lad.implied_default_prob(i) == pytest.approx(pf.probs[i], abs=1e-12)


def test_table_satisfies_uniqueness(example5, rng):
    assert verify_uniqueness(build_ladder(example5).table(), example5).passed
    pf = random_portfolio(rng, 6)
    rep = verify_uniqueness(independent_table(pf), pf)
    assert rep.marginals_ok and not rep.saturated_ok and not rep.passed


def test_uniqueness_size_mismatch(example5):
    with pytest.raises(ScenarioSizeError):
        verify_uniqueness(np.full(8, 1 / 8), example5)


def test_uniqueness_rejects_perturbation(example5):
    t = build_ladder(example5).table().probs.copy()
    # move 1e-6 from the all-survive rung to a non-ladder scenario
    t[0] -= 1e-6
    t[1] += 1e-6
    assert not verify_uniqueness(t, example5).passed


def test_ladder_defaults_thresholding(example5):
    lad = build_ladder(example5)
    out = ladder_defaults(lad, [0.0, 0.007, 0.0099, 0.011, 0.039, 0.5])
    assert out.tolist() == [
        [1, 1, 1, 1, 1], [0, 1, 1, 1, 1], [0, 1, 1, 1, 1],
        [0, 0, 0, 1, 1], [0, 0, 0, 0, 1], [0, 0, 0, 0, 0],
    ]


def test_simulate_ladder_hierarchical_and_deterministic(example5):
    lad = build_ladder(example5)
    a = simulate_ladder(lad, 200_000, seed=3)
    b = simulate_ladder(lad, 200_000, seed=3, threads=4)
    np.testing.assert_array_equal(a, b)
    assert is_hierarchical(a).all()
    assert a[:, 4].mean() == pytest.approx(0.04, abs=4 * np.sqrt(0.04 * 0.96 / 200_000))


def test_is_hierarchical():
    s = np.array([[0, 0, 1], [0, 1, 1], [1, 0, 1], [0, 1, 0]])
    assert is_hierarchical(s).tolist() == [True, True, False, False]

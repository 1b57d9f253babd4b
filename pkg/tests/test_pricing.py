import numpy as np
import pytest

from credcorr.copula import AssetCorrelationSpec, flat_copula_loss_distribution
from credcorr.core import ObligorName, independent_table
from credcorr.errors import ValidationError
from credcorr.ladder import build_ladder
from credcorr.pricing import (
    TrancheSpec,
    parity_check,
    price_single_name_cds,
    price_tranche_exhaustive,
    price_tranche_mc,
)

from conftest import random_portfolio


def test_cds_price():
    assert price_single_name_cds(ObligorName("x", 0.04, 0.4)).value == pytest.approx(0.024)
    assert price_single_name_cds(ObligorName("x", 0.0)).value == 0.0


def test_tranche_spec_validation():
    with pytest.raises(ValidationError):
        TrancheSpec(-0.1)
    with pytest.raises(ValidationError):
        TrancheSpec(0.2, "mezzanine")


def test_fixture_supersenior_under_ladder(example5):
    v = price_tranche_exhaustive(example5, TrancheSpec(0.5), build_ladder(example5))
    assert v.value == pytest.approx(0.0042, abs=1e-15)
    assert v.stderr == 0.0


def test_fixture_parity(example5):
    rep = parity_check(example5, 0.5, build_ladder(example5))
    assert rep.equity == pytest.approx(0.0114, abs=1e-15)
    assert rep.expected_loss == pytest.approx(0.0156, abs=1e-15)
    assert rep.holds and abs(rep.gap) <= 1e-12


def test_attachment_edges(example5):
    lad = build_ladder(example5)
    assert price_tranche_exhaustive(example5, TrancheSpec(1.0), lad).value == 0.0
    assert price_tranche_exhaustive(example5, TrancheSpec(0.0), lad).value == pytest.approx(
        example5.expected_loss(), abs=1e-15)
    assert price_tranche_exhaustive(example5, TrancheSpec(0.0, "equity"), lad).value == 0.0


def test_supersenior_increasing_in_correlation(rng):
    pf = random_portfolio(rng, 6)
    t = TrancheSpec(0.3 * pf.total_capacity())
    prices = [price_tranche_exhaustive(pf, t, flat_copula_loss_distribution(pf, r)).value
              for r in (0.0, 0.2, 0.5, 0.8, 0.99)]
    prices.append(price_tranche_exhaustive(pf, t, build_ladder(pf)).value)
    assert np.all(np.diff(prices) > 0)


def test_mc_agrees_with_exact(example5):
    t = TrancheSpec(0.5)
    exact = price_tranche_exhaustive(example5, t, build_ladder(example5)).value
    v = price_tranche_mc(example5, t, AssetCorrelationSpec(flat=1.0), 400_000, seed=4)
    assert abs(v.value - exact) <= 4 * v.stderr
    pf_exact = price_tranche_exhaustive(example5, TrancheSpec(0.2),
                                        flat_copula_loss_distribution(example5, 0.4)).value
    v = price_tranche_mc(example5, TrancheSpec(0.2), AssetCorrelationSpec(flat=0.4), 400_000, seed=4)
    assert abs(v.value - pf_exact) <= 4 * v.stderr
    assert v.metadata["seed"] == 4 and v.metadata["draws"] == 400_000


def test_mc_reproducible_across_threads(example5):
    spec = AssetCorrelationSpec(flat=0.3)
    a = price_tranche_mc(example5, TrancheSpec(0.2), spec, 300_000, 7, threads=1)
    b = price_tranche_mc(example5, TrancheSpec(0.2), spec, 300_000, 7, threads=4)
    assert a.value == b.value and a.stderr == b.stderr


@pytest.mark.parametrize("law", ["independent", "ladder", "flat"])
def test_parity_under_exact_laws(rng, law):
    pf = random_portfolio(rng, 8)
    joint = {"independent": independent_table(pf), "ladder": build_ladder(pf),
             "flat": flat_copula_loss_distribution(pf, 0.45)}[law]
    for a in np.linspace(0, pf.total_capacity(), 9):
        assert abs(parity_check(pf, float(a), joint).gap) <= 1e-12


def test_parity_monte_carlo(example5):
    rep = parity_check(example5, 0.3, AssetCorrelationSpec(flat=0.5), draws=100_000, seed=2)
    assert rep.holds

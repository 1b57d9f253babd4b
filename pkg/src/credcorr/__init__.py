"""Maximal-correlation credit default models, copula tranche pricing and arbitrage checks."""

__version__ = "0.1.0"

from .arbitrage import (
    ArbitragePortfolio,
    AttachmentDecomposition,
    arbitrage_certificate,
    build_arbitrage_portfolio,
    decompose_attachment,
    initial_value,
    verify_nonnegative_maturity,
)
from .bounds import (
    DefaultCorrelationMatrix,
    PairwiseJointProbs,
    correlation_upper_bound,
    joint_default_probs,
    saturated_matrix,
    validate_matrix,
)
from .copula import (
    AssetCorrelationSpec,
    ThresholdVector,
    asset_to_default_correlation,
    calibrate_thresholds,
    degenerate_max_correlation,
    flat_copula_loss_distribution,
    flat_copula_table,
    simulate_copula,
)
from .core import (
    DefaultScenario,
    LossDistribution,
    ObligorName,
    ReferencePortfolio,
    ScenarioTable,
    enumerate_scenarios,
    independent_table,
    load_fixture,
    portfolio_loss,
    read_portfolio,
    write_portfolio,
)
from .implied import CalibrationResult, PricingConfig, breakdown_report, implied_flat_correlation
from .ladder import (
    LadderProcess,
    build_ladder,
    ladder_loss_distribution,
    simulate_ladder,
    verify_uniqueness,
)
from .pricing import (
    TrancheSpec,
    Valuation,
    parity_check,
    price_single_name_cds,
    price_tranche_exhaustive,
    price_tranche_mc,
)

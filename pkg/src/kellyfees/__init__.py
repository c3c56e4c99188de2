"""Growth-optimal investment fractions and rebalancing schedules under
proportional transaction fees.

The package computes the long-run exponential growth rate of a portfolio
that keeps a fraction f of wealth in a risky asset and rebalances every T
steps, paying a proportional fee on each transfer. Exact evaluation covers
binary, two-scale and lognormal return models; closed-form perturbative
optima cover the small-fee regime; a seeded Monte-Carlo engine handles
Student-t and GARCH returns and partial rebalancing.
"""

from .assets import (
    GARCH_BURN_IN,
    BinaryAsset,
    GarchAsset,
    LognormalAsset,
    OutcomeDistribution,
    StudentAsset,
    TwoScaleAsset,
    binary_compound_distribution,
    garch_step,
    sample_path,
    two_scale_compound_distribution,
)
from .growth import (
    GrowthEstimate,
    QuadratureError,
    growth_binary,
    growth_distribution,
    growth_lognormal,
    growth_two_scale,
    long_term_return,
)
from .mechanics import (
    NO_FEES,
    FeeSchedule,
    PortfolioState,
    Strategy,
    log_wealth_factor,
    rebalance,
    required_transfer,
    wealth_factor_full_rebalance,
)
from .optimize import (
    Optimum,
    approx_f1,
    approx_f_period,
    lognormal_closed_forms,
    maximize_fraction,
    maximize_period,
    threshold_fees,
)
from .sim import (
    PartialPoint,
    PeriodPoint,
    PeriodSweep,
    SimConfig,
    period_scan,
    simulate_growth,
    sweep_partial,
    sweep_period,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryAsset",
    "TwoScaleAsset",
    "LognormalAsset",
    "StudentAsset",
    "GarchAsset",
    "OutcomeDistribution",
    "binary_compound_distribution",
    "two_scale_compound_distribution",
    "sample_path",
    "garch_step",
    "GARCH_BURN_IN",
    "FeeSchedule",
    "NO_FEES",
    "PortfolioState",
    "Strategy",
    "required_transfer",
    "rebalance",
    "wealth_factor_full_rebalance",
    "log_wealth_factor",
    "GrowthEstimate",
    "QuadratureError",
    "growth_distribution",
    "growth_binary",
    "growth_two_scale",
    "growth_lognormal",
    "long_term_return",
    "Optimum",
    "maximize_fraction",
    "maximize_period",
    "approx_f1",
    "approx_f_period",
    "threshold_fees",
    "lognormal_closed_forms",
    "SimConfig",
    "PeriodPoint",
    "PeriodSweep",
    "PartialPoint",
    "simulate_growth",
    "sweep_period",
    "period_scan",
    "sweep_partial",
    "__version__",
]

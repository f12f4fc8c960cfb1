"""Insurance contracts between renewable producers and energy storage.

Pricing, bidding and settlement of a reserve contract in a two-settlement
electricity market, plus a Monte Carlo calendar study and a network study
on a modified IEEE 14-bus system.
"""
from .contract import (
    DA_PROFITABLE, INSURANCE_ONLY, UNPROFITABLE, FeasibilityInterval, ProfitabilityBounds, TwoWayBid,
    feasibility_interval, optimal_bid, profitability_classify, renewable_price_cap, storage_price_floor,
    standard_contract, two_way_analysis, two_way_closed_form, two_way_commitment,
)
from .errors import ConsistencyError, DataError, LPInfeasibleError, LPUnboundedError, NumericError
from .lab import StudyConfig, StudyReport, peak_share_delta, profitability_calendar, run_profit_study
from .lp import LPResult, solve_lp
from .market import (
    Cashflows, Contract, MarketPrices, SettlementResult, renewable_expected_profit, settle_realized,
    storage_expected_profit,
)
from .network import (
    DispatchResult, FeasibilityMatrix, NetworkCase, evaluate_placement, feasibility_matrix, load_case,
    multi_period_dispatch,
)
from .renewable import (
    RenewableModel, Scenario, expected_capped_cost, expected_shortfall, fit_hourly_gaussian, quantile,
    sample_scenarios, scenario_rng,
)
from .storage import (
    FeasibilityReport, KKTCertificate, StoragePolicy, StorageParams, arbitrage_pair, arbitrage_policy,
    baseline_profit, check_feasible, kkt_certificate, simulate, single_cycle_policy,
)

__version__ = "0.1.0"

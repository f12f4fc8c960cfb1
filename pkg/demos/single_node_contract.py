# %% Single-node insurance contract on a three-hour day
# A wind producer sells day-ahead and pays a penalty for every MWh it fails
# to deliver. A storage unit that would otherwise arbitrage instead reserves
# its charge for the producer at the peak hour. Which prices work for both?
import warnings

import numpy as np

from reserve_insure import (MarketPrices, RenewableModel, StorageParams, arbitrage_pair, feasibility_interval,
                            optimal_bid, single_cycle_policy, standard_contract, storage_expected_profit,
                            renewable_expected_profit, baseline_profit)
from reserve_insure.market import Contract

prices = MarketPrices(np.array([10.0, 40.0, 20.0]), lambda_p=100.0)
model = RenewableModel(np.full(3, 10.0), np.full(3, 2.0), capacity=30.0)
params = StorageParams(e_max=12.0, cost_coeff=7.0)

# %% Day-ahead only
i, j = arbitrage_pair(prices)
policy = single_cycle_policy(prices, params)
print(f"arbitrage: charge in hour {i}, discharge in hour {j}")
print(f"storage profit without contract: {baseline_profit(policy, prices, params):.2f} $")

bid = optimal_bid(prices, model)
print("producer bids (MW):", np.round(bid, 3))
print(f"producer expected profit: {renewable_expected_profit(bid, Contract.none(3), prices, model):.2f} $")

# %% The range of mutually acceptable reserve prices
iv = feasibility_interval(prices, model, params)
print(f"reserve {iv.reserve} MWh in hour {iv.slot}; producer now commits {iv.commitment:.3f} MW")
print(f"storage accepts pi >= {iv.floor:.4f}, producer accepts pi <= {iv.cap:.4f}")

# %% Both sides at the standard price (the day-ahead price of the peak hour)
contract = standard_contract(prices, model, params)
bid_c = optimal_bid(prices, model, contract.g)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    s0 = baseline_profit(policy, prices, params)
    s1 = storage_expected_profit(policy, prices, params, contract, model, bid_c)
r0 = renewable_expected_profit(bid, Contract.none(3), prices, model)
r1 = renewable_expected_profit(bid_c, contract, prices, model)
print(f"storage:  {s0:8.2f} -> {s1:8.2f} $")
print(f"producer: {r0:8.2f} -> {r1:8.2f} $")

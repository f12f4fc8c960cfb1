# %% Selling surplus to the storage as well
# If the storage also buys any production above the commitment at a price
# pi_e, the producer's best commitment moves. Without a reserve there is a
# closed form; with one, the first-order condition is solved numerically.
import numpy as np

from reserve_insure import MarketPrices, RenewableModel
from reserve_insure.contract import optimal_bid, two_way_analysis, two_way_closed_form

prices = MarketPrices(np.array([10.0, 40.0, 20.0]), lambda_p=100.0)
model = RenewableModel(np.full(3, 10.0), np.full(3, 2.0), capacity=30.0)
k, reserve = 1, 12.0

print(f"one-way optimum with reserve: {optimal_bid(prices, model, np.array([0, reserve, 0]))[k]:.4f} MW")
print("  pi_e   no reserve (closed)   with reserve   regime")
for pi_e in np.linspace(0.0, 40.0, 9):
    res = two_way_analysis(prices, model, k, reserve, pi_e)
    print(f"{pi_e:6.1f} {two_way_closed_form(prices, model, k, pi_e):20.4f} {res.commitment:14.4f}   {res.regime}")

# %% Without a reserve, a higher resale price makes surplus worth more, so the
# producer commits less. With the 12 MWh reserve the commitment sits about six
# standard deviations above mean production, surplus is practically
# impossible, and pi_e no longer moves the optimum.

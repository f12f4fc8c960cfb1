# %% Where can the contract be signed on a congested network?
# Wind and storage are placed at every pair of buses of a modified 14-bus
# system. For each placement a day-long DC optimal power flow gives nodal
# prices, and the contract is feasible when the storage's price floor at its
# own bus is below the producer's nodal price.
from pathlib import Path

import numpy as np

from reserve_insure.network import feasibility_matrix, load_case, multi_period_dispatch

OUT = Path(__file__).with_name("output")
OUT.mkdir(exist_ok=True)

case = load_case()
base = multi_period_dispatch(case)
print(f"cost {base.objective:.0f} $, max |flow| {np.abs(base.flows).max():.1f} MW")
print("evening peak nodal prices:", np.round(base.lmp[19], 2))

# %% The full placement grid (rows: wind bus, columns: storage bus)
m = feasibility_matrix(case)
for b, row in zip(m.buses, m.feasible):
    print(f"{b:3d} " + "".join("#" if v else "." for v in row))
print(f"{int(m.feasible.sum())} of {m.feasible.size} placements feasible; diagonal all feasible: "
      f"{bool(np.diag(m.feasible).all())}")

# %% Without congestion every placement works
wide = feasibility_matrix(case.with_line_limits_scaled(10.0))
print(f"line limits x10: {int(wide.feasible.sum())} of {wide.feasible.size} feasible")

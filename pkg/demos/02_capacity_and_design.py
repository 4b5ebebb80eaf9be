"""From an arrival vector to a CSMA policy that serves it.

Checks membership in the capacity region with a linear program, solves
for the exponents that make the Gibbs service match a slightly inflated
target, then builds a limited-backoff design on a 4-cycle.
"""

import numpy as np

from csmalab.analysis import (
    alpha_lower_bound,
    capacity_membership,
    capacity_oracle,
    exp_from_ucsma,
    limited_backoff_design,
    maximize_F,
    service_rate,
    symmetric_boundary,
    ucsma_design,
)
from csmalab.channel import ChannelModel
from csmalab.graph import complete_graph, cycle_graph, enumerate_independent_sets

g = complete_graph(5)
ch = ChannelModel.two_level(5)
oracle = capacity_oracle(g, ch)
print("symmetric boundary per link:", symmetric_boundary(oracle)[0])  # 63/320

lam = np.full(5, 0.15)
m = capacity_membership(oracle, lam)
print("lam = 0.15:", m.status, "margin %.4f" % m.margin)

fam = enumerate_independent_sets(g)
r = maximize_F(lam * 1.05, ch, fam)
print("r* =", np.round(r, 4), "service =", np.round(service_rate(r, ch, fam), 4))

# U-CSMA ratios for a schedule target, then the matching channel-aware exponents
ratios = ucsma_design(np.full(5, 0.19), fam)
print("U-CSMA ratio for 0.19 per link:", ratios[0])
r_exp, pol = exp_from_ucsma(1.0, 1.0 / ratios, ch)
print("EXP exponents matching it:", np.round(r_exp, 4))

c4 = cycle_graph(4)
ch4 = ChannelModel.two_level(4, 0.1, up=1 / 3, down=1.0)
print("alpha bound on the 4-cycle:", alpha_lower_bound(c4, ch4))
d = limited_backoff_design(c4, ch4, np.full(4, 0.1), phi=0.01)
print("branch:", d.branch, " max backoff:", d.policy.max_backoff())

"""The four experiment runners at reduced size.

Each returns an ``ExperimentResult`` whose ``to_csv`` output carries the
parameters as comment lines.  Full-size runs are what ``csma-lab
experiment`` and the acceptance tests use.
"""

import numpy as np

from csmalab.channel import ChannelModel
from csmalab.experiments import (
    c4_reference_channel,
    run_figure_complete_graph,
    run_figure_random_topology,
    run_theorem6_sweep,
    run_uniqueness_star,
)
from csmalab.graph import complete_graph, cycle_graph

# throughput fraction on K5 against backoff speed relative to the channel
fig = run_figure_complete_graph(grid=(0.1, 1.0, 10.0, 100.0, 1000.0))
print(fig.to_csv())

# limited backoff: caps at a fraction of the channel speed
print(run_theorem6_sweep(cycle_graph(4), c4_reference_channel()).to_csv())
print(run_theorem6_sweep(complete_graph(5), ChannelModel.two_level(5), phi_over_psi=(0.01,)).to_csv())

# channel-adaptation functions on a star, best tuned exponents each
star = run_uniqueness_star()
for row in star.rows:
    print(f"{row['policy']:18s} fraction {row['fraction']:.5f}")

# a short random-topology sweep; the full one uses horizon 1e5
rt = run_figure_random_topology(arrivals=(0.01, 0.03), ks=("x", "1"), horizon=5000.0)
for row in rt.rows:
    print(f"{row['policy']:12s} lam={row['arrival']:.2f} mean queue {row['mean_queue']:.1f}")
print("links:", rt.params["n_links"], "conflicts:", rt.params["conflict_edges"],
      "mean queue ratio x/U:", np.round(rt.column("mean_queue", k="x") / rt.column("mean_queue", k="1"), 3))

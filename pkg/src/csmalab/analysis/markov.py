"""Joint (schedule, channel) generator and its stationary law."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from numba import njit

from ..channel import ChannelModel, residual, stationary_from_generator
from ..graph import CapExceededError, IndependentSetFamily, InterferenceGraph, enumerate_independent_sets
from ..policy import CsmaPolicy, k_values

#: exact joint analysis is limited to this many (schedule, channel) states
MAX_EXACT_STATES = 4096
#: the arborescence oracle enumerates trees; keep it tiny
MAX_ARBORESCENCE_STATES = 12


@dataclass(eq=False)
class JointGenerator:
    """Generator of the CSMA chain on ``I(G) x H^n``.

    State ``(s, c)`` (schedule index ``s`` in ``family``, joint channel code
    ``c``) lives at row ``s * n_channel + c``.
    """

    Q: sp.csr_matrix
    graph: InterferenceGraph
    channel: ChannelModel
    policy: CsmaPolicy
    family: IndependentSetFamily

    @property
    def n_channel(self):
        return self.channel.space.size

    @property
    def n_states(self):
        return self.Q.shape[0]

    def state_index(self, rho, channel_levels):
        s = self.family.index(rho)
        c = self.channel.space.encode(channel_levels)
        return s * self.n_channel + c

    def dense(self):
        return self.Q.toarray()

    def off_diagonal(self):
        off = self.Q - sp.diags(self.Q.diagonal())
        off = sp.csr_matrix(off)
        off.eliminate_zeros()
        return off


def build_generator(g: InterferenceGraph, ch: ChannelModel, p: CsmaPolicy,
                    cap: int = MAX_EXACT_STATES) -> JointGenerator:
    """Assemble the CSMA kernel.

    Three kinds of transitions exist: channel moves with the schedule held
    fixed, activation of an idle link whose neighbors are all idle (rate
    ``f_i(c_i)``), and deactivation of an active link (rate ``g_i(c_i)``).
    """
    if not (g.n == ch.n == p.n):
        raise ValueError("graph, channel and policy disagree on the number of links")
    family = enumerate_independent_sets(g)
    N, J = len(family), ch.space.size
    if N * J > cap:
        raise CapExceededError(f"{N} schedules x {J} channel states exceeds {cap}")
    sets = family.sets.astype(np.int64)
    level_idx = ch.space.joint_states()  # (J, n)

    Qc = ch.generator()
    Qc = sp.csr_matrix(Qc - sp.diags(Qc.diagonal()))
    blocks = [sp.kron(sp.identity(N, format="csr"), Qc, format="csr")]

    for i in range(g.n):
        on = np.flatnonzero(sets[:, i] == 1)
        off_codes = family.codes[on] - (1 << (g.n - 1 - i))
        off = np.searchsorted(family.codes, off_codes)
        # every independent set minus one link is independent, so off is exact
        A = sp.csr_matrix((np.ones(len(on)), (off, on)), shape=(N, N))
        f = p.backoff[i, level_idx[:, i]]
        gg = p.holding[i, level_idx[:, i]]
        blocks.append(sp.kron(A, sp.diags(f), format="csr"))
        blocks.append(sp.kron(A.T, sp.diags(gg), format="csr"))

    off_diag = sum(blocks[1:], blocks[0]).tocsr()
    Q = (off_diag - sp.diags(np.asarray(off_diag.sum(axis=1)).ravel())).tocsr()
    return JointGenerator(Q, g, ch, p, family)


@dataclass(eq=False)
class StationaryDistribution:
    """Probabilities over ``I(G) x H^n`` as an ``(N, J)`` matrix."""

    probs: np.ndarray
    family: IndependentSetFamily
    channel: ChannelModel
    residual: float = float("nan")

    @classmethod
    def from_vector(cls, pi, q: JointGenerator, res=float("nan")):
        return cls(np.asarray(pi).reshape(len(q.family), q.n_channel), q.family, q.channel, res)

    @property
    def vector(self):
        return self.probs.ravel()

    @cached_property
    def channel_marginal(self):
        return self.probs.sum(axis=0)

    @cached_property
    def schedule_marginal(self):
        return self.probs.sum(axis=1)

    def conditional(self):
        """``pi(sigma | c)`` as an ``(N, J)`` matrix."""
        return self.probs / self.channel_marginal[None, :]


def stationary_exact(q: JointGenerator) -> StationaryDistribution:
    """Stationary law by dense LU with one step of iterative refinement."""
    pi = stationary_from_generator(q.Q)
    return StationaryDistribution.from_vector(pi, q, residual(pi, q.Q))


def arborescence_stationary(q: JointGenerator, cap: int = MAX_ARBORESCENCE_STATES) -> StationaryDistribution:
    """Stationary law from the Markov chain tree theorem.

    The probability of a state is proportional to the total weight of the
    spanning arborescences rooted there (every other state has exactly one
    outgoing tree edge, and following tree edges always ends at the root);
    a tree's weight is the product of its edge rates.  Trees are enumerated
    explicitly, so this is only meant as an independent check on tiny
    chains.
    """
    k = q.n_states
    if k > cap:
        raise CapExceededError(f"arborescence enumeration limited to {cap} states, got {k}")
    weights = arborescence_weights(q.off_diagonal().toarray())
    return StationaryDistribution.from_vector(weights / weights.sum(), q)


def arborescence_weights(rates):
    """Total in-arborescence weight rooted at each vertex of a rate matrix."""
    rates = np.ascontiguousarray(rates, dtype=float)
    k = len(rates)
    weights = np.zeros(k)
    for root in range(k):
        # assign parents nearest-to-root first so most chains close immediately
        order, seen, frontier = [], {root}, [root]
        while frontier:
            nxt = []
            for v in frontier:
                for u in range(k):
                    if u not in seen and rates[u, v] > 0:
                        seen.add(u)
                        order.append(u)
                        nxt.append(u)
            frontier = nxt
        if len(order) != k - 1:
            continue  # root unreachable from somewhere: weight zero
        weights[root] = _sum_trees(rates, np.array(order, dtype=np.int64), root)
    return weights


@njit(cache=True)
def _sum_trees(rates, order, root):
    """Depth-first enumeration of parent choices with cycle pruning."""
    k = rates.shape[0]
    depth = len(order)
    parent = -np.ones(k, dtype=np.int64)
    choice = np.zeros(depth + 1, dtype=np.int64)
    prod = np.ones(depth + 1)
    total = 0.0
    pos = 0
    while pos >= 0:
        if pos == depth:
            total += prod[pos]
            pos -= 1
            continue
        v = order[pos]
        parent[v] = -1
        placed = False
        u = choice[pos]
        while u < k:
            rate = rates[v, u]
            if u != v and rate > 0:
                x = u
                while x != root and x != v and parent[x] != -1:
                    x = parent[x]
                if x != v:
                    placed = True
                    break
            u += 1
        if placed:
            parent[v] = u
            choice[pos] = u + 1
            prod[pos + 1] = prod[pos] * rates[v, u]
            pos += 1
            choice[pos] = 0
        else:
            choice[pos] = 0
            pos -= 1
    return total


def reversibility_check(q: JointGenerator, dist: StationaryDistribution, tol=1e-10):
    """Largest detailed-balance violation ``|pi_x q(x,y) - pi_y q(y,x)|``.

    Returns
    -------
    reversible : bool
        ``violation <= tol``.
    violation : float
    """
    flux = sp.diags(dist.vector) @ q.off_diagonal()
    diff = (flux - flux.T).tocsr()
    violation = float(np.max(np.abs(diff.data))) if diff.nnz else 0.0
    return violation <= tol, violation


def exact_throughput(dist: StationaryDistribution, ch: ChannelModel | None = None):
    """Long-run potential departure rate ``sum c_i sigma_i pi(sigma, c)`` per link."""
    ch = dist.channel if ch is None else ch
    caps = ch.joint_capacities()  # (J, n)
    sets = dist.family.sets.astype(float)  # (N, n)
    return np.einsum("sc,si,ci->i", dist.probs, sets, caps)


def product_form_deviation(dist: StationaryDistribution, r, k="x"):
    """``max |1 - pi(sigma, c) / (pi(c) pi(sigma | c))|`` against the Gibbs conditional.

    The Gibbs conditional for channel state ``c`` weights schedule ``sigma``
    by ``exp(sum_i sigma_i r_i k(c_i))``.
    """
    from .gibbs import gibbs_table

    kv = k_values(k, dist.channel.levels)
    eff = kv[dist.channel.space.joint_states()]
    P, _ = gibbs_table(r, eff, dist.family)  # (J, N)
    ideal = dist.channel_marginal[None, :] * P.T
    return float(np.max(np.abs(1.0 - dist.probs / ideal)))

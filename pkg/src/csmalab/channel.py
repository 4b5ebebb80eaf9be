"""Finite-state Markov channels shared by all links.

A :class:`ChannelModel` is either *factored* (every link runs its own
independent chain over the common level set) or *joint* (one explicit
rate matrix over the product space ``H^n``).  Joint channel states are
indexed in mixed radix with link 0 as the most significant digit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

#: dense LU is used up to this many joint states
MAX_DENSE_STATES = 4096


class ReducibleChainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ChannelStateSpace:
    """Sorted capacity levels ``0 < h_1 < ... < h_m = 1`` for ``n`` links."""

    levels: np.ndarray
    n: int

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float).ravel()
        if levels.size == 0:
            raise ValueError("need at least one channel level")
        if levels[0] <= 0 or not np.all(np.diff(levels) > 0) or levels[-1] != 1.0:
            raise ValueError(f"levels must satisfy 0 < h_1 < ... < h_m = 1, got {levels}")
        if self.n < 1:
            raise ValueError("need at least one link")
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)

    @property
    def m(self):
        return len(self.levels)

    @property
    def size(self):
        return self.m ** self.n

    def level_index(self, h) -> int:
        """Index of level ``h``; raises ``KeyError`` for unknown levels."""
        k = int(np.argmin(np.abs(self.levels - h)))
        if not np.isclose(self.levels[k], h, rtol=0, atol=1e-12):
            raise KeyError(f"{h} is not a channel level (levels: {self.levels.tolist()})")
        return k

    def joint_states(self):
        """``(m**n, n)`` matrix of level indices, link 0 most significant."""
        return np.array(list(itertools.product(range(self.m), repeat=self.n)), dtype=np.int64).reshape(-1, self.n)

    def encode(self, idx) -> int:
        code = 0
        for k in idx:
            code = code * self.m + int(k)
        return code


def stationary_from_generator(Q, check=True):
    """Stationary law of an irreducible CTMC with (dense or sparse) generator ``Q``.

    Solves ``pi Q = 0`` with one balance equation replaced by the
    normalization, followed by a single step of iterative refinement.
    """
    Q = Q.toarray() if sp.issparse(Q) else np.asarray(Q, dtype=float)
    k = Q.shape[0]
    if k == 1:
        return np.ones(1)
    if k > MAX_DENSE_STATES:
        raise ValueError(f"dense stationary solve limited to {MAX_DENSE_STATES} states")
    if check:
        ensure_irreducible(Q)
    A = Q.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    lu = scipy.linalg.lu_factor(A)
    pi = scipy.linalg.lu_solve(lu, b)
    pi += scipy.linalg.lu_solve(lu, b - A @ pi)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def ensure_irreducible(Q):
    off = sp.csr_matrix(np.asarray(Q) if not sp.issparse(Q) else Q)
    off = off - sp.diags(off.diagonal())
    off.eliminate_zeros()
    n_comp, _ = connected_components(off, directed=True, connection="strong")
    if n_comp != 1:
        raise ReducibleChainError(f"chain has {n_comp} strongly connected components")


def residual(pi, Q):
    """``max |pi Q|`` relative to the largest exit rate."""
    Q = Q.toarray() if sp.issparse(Q) else np.asarray(Q)
    scale = max(1.0, float(np.max(np.abs(np.diag(Q)))))
    return float(np.max(np.abs(pi @ Q))) / scale


class ChannelModel:
    """Markov channel over ``H^n``.

    Parameters
    ----------
    space : ChannelStateSpace
    link_rates : array (n, m, m), optional
        Per-link off-diagonal transition rates (factored structure).
    joint_rates : array (m**n, m**n), optional
        Explicit joint transition rates ``gamma^{u -> v}``.
    """

    def __init__(self, space: ChannelStateSpace, link_rates=None, joint_rates=None):
        if (link_rates is None) == (joint_rates is None):
            raise ValueError("give exactly one of link_rates or joint_rates")
        self.space = space
        if link_rates is not None:
            rates = np.array(link_rates, dtype=float)
            if rates.ndim == 2:
                rates = np.broadcast_to(rates, (space.n,) + rates.shape).copy()
            if rates.shape != (space.n, space.m, space.m):
                raise ValueError(f"link_rates must have shape {(space.n, space.m, space.m)}")
            for i in range(space.n):
                np.fill_diagonal(rates[i], 0.0)
            if np.any(rates < 0):
                raise ValueError("transition rates must be nonnegative")
            rates.setflags(write=False)
            self.link_rates = rates
            self.joint_rates = None
        else:
            rates = np.array(joint_rates, dtype=float)
            if rates.shape != (space.size, space.size):
                raise ValueError(f"joint_rates must be {space.size}x{space.size}")
            np.fill_diagonal(rates, 0.0)
            if np.any(rates < 0):
                raise ValueError("transition rates must be nonnegative")
            rates.setflags(write=False)
            self.link_rates = None
            self.joint_rates = rates

    # constructors ---------------------------------------------------------

    @classmethod
    def iid(cls, levels, n, rates):
        """Independent links sharing one ``m x m`` rate matrix."""
        return cls(ChannelStateSpace(levels, n), link_rates=np.asarray(rates, dtype=float))

    @classmethod
    def two_level(cls, n, low=0.5, up=1.0, down=None):
        """Independent two-level links, ``low <-> 1`` with rates ``up``/``down``."""
        down = up if down is None else down
        return cls.iid([low, 1.0], n, [[0.0, up], [down, 0.0]])

    @classmethod
    def ladder(cls, n, m=10, rate=0.01):
        """Independent birth-death ladders on levels ``u/m``, neighbors only."""
        rates = np.zeros((m, m))
        for u in range(m - 1):
            rates[u, u + 1] = rates[u + 1, u] = rate
        return cls.iid(np.arange(1, m + 1) / m, n, rates)

    @classmethod
    def static(cls, n):
        """Every link permanently at full capacity."""
        return cls.iid([1.0], n, np.zeros((1, 1)))

    # properties -----------------------------------------------------------

    @property
    def n(self):
        return self.space.n

    @property
    def levels(self):
        return self.space.levels

    @property
    def factored(self):
        return self.link_rates is not None

    def link_generator(self, i):
        if not self.factored:
            raise ValueError("joint channel has no per-link generator")
        G = self.link_rates[i].copy()
        np.fill_diagonal(G, -G.sum(axis=1))
        return G

    def generator(self):
        """Sparse joint generator on ``H^n`` (Kronecker sum for factored models)."""
        size = self.space.size
        if self.factored:
            m = self.space.m
            Q = sp.csr_matrix((size, size))
            for i in range(self.n):
                left = sp.identity(m ** i, format="csr")
                right = sp.identity(m ** (self.n - 1 - i), format="csr")
                Q = Q + sp.kron(sp.kron(left, sp.csr_matrix(self.link_generator(i))), right, format="csr")
            return Q.tocsr()
        R = sp.csr_matrix(self.joint_rates)
        return (R - sp.diags(np.asarray(R.sum(axis=1)).ravel())).tocsr()

    @cached_property
    def link_stationary(self):
        """``(n, m)`` marginal stationary law of each link's level."""
        if self.factored:
            return np.array([stationary_from_generator(self.link_generator(i)) for i in range(self.n)])
        pi = self.stationary
        states = self.space.joint_states()
        out = np.zeros((self.n, self.space.m))
        for i in range(self.n):
            np.add.at(out[i], states[:, i], pi)
        return out

    @cached_property
    def stationary(self):
        return channel_stationary(self)

    def mean_capacity(self):
        """``E[c_i]`` under the stationary law, per link."""
        return self.link_stationary @ self.levels

    def joint_capacities(self):
        """``(m**n, n)`` capacity vectors for every joint channel state."""
        return self.levels[self.space.joint_states()]

    def describe(self):
        return {
            "levels": self.levels.tolist(),
            "n": self.n,
            "mode": "factored" if self.factored else "joint",
            "varying_speed": varying_speed(self),
        }


def channel_stationary(model: ChannelModel):
    """Stationary law over joint channel states.

    Factored models are solved per link and combined by outer product;
    joint models are solved directly (dense LU, at most 4096 states).
    """
    if model.factored:
        pi = np.ones(1)
        for i in range(model.n):
            pi = np.kron(pi, stationary_from_generator(model.link_generator(i)))
        return pi
    if model.space.size > MAX_DENSE_STATES:
        raise ValueError("joint channel too large for a dense solve; use a factored model")
    return stationary_from_generator(model.generator())


def varying_speed(model: ChannelModel) -> float:
    """Largest total exit rate over joint channel states."""
    if model.factored:
        return float(sum(model.link_rates[i].sum(axis=1).max() for i in range(model.n)))
    return float(model.joint_rates.sum(axis=1).max())


@dataclass
class ChannelPath:
    """Piecewise-constant channel trajectory; ``states[k]`` holds on ``[times[k], times[k+1])``."""

    times: np.ndarray
    states: np.ndarray
    horizon: float

    def occupation(self, space: ChannelStateSpace):
        """Fraction of ``[0, horizon]`` spent in each joint state."""
        durations = np.diff(np.append(self.times, self.horizon))
        codes = self.states @ (space.m ** np.arange(space.n - 1, -1, -1))
        occ = np.zeros(space.size)
        np.add.at(occ, codes, durations)
        return occ / self.horizon


def sample_channel_path(model: ChannelModel, horizon: float, seed=None, initial=None) -> ChannelPath:
    """Exact CTMC sample path of the joint channel on ``[0, horizon]``.

    The initial state is drawn from the stationary law unless ``initial``
    (a vector of level indices) is given.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = np.random.default_rng(seed)
    n, m = model.n, model.space.m
    if initial is None:
        if model.factored:
            state = np.array([rng.choice(m, p=p) for p in model.link_stationary])
        else:
            code = rng.choice(model.space.size, p=model.stationary)
            state = model.space.joint_states()[code]
    else:
        state = np.asarray(initial, dtype=np.int64).copy()
    times, states = [0.0], [state.copy()]
    t = 0.0
    if model.factored:
        exits = model.link_rates.sum(axis=2)
        while True:
            rates = exits[np.arange(n), state]
            total = rates.sum()
            if total <= 0:
                break
            t += rng.exponential(1.0 / total)
            if t >= horizon:
                break
            i = rng.choice(n, p=rates / total)
            row = model.link_rates[i, state[i]]
            state[i] = rng.choice(m, p=row / row.sum())
            times.append(t)
            states.append(state.copy())
    else:
        table = model.space.joint_states()
        code = model.space.encode(state)
        R = model.joint_rates
        while True:
            total = R[code].sum()
            if total <= 0:
                break
            t += rng.exponential(1.0 / total)
            if t >= horizon:
                break
            code = rng.choice(model.space.size, p=R[code] / total)
            times.append(t)
            states.append(table[code].copy())
    return ChannelPath(np.array(times), np.array(states, dtype=np.int64).reshape(-1, n), float(horizon))

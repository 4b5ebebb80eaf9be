"""CSMA policies: per-link backoff rate ``f_i(h)`` and holding rate ``g_i(h)``.

Static policies are stored as two ``(n, m)`` rate tables indexed by link and
channel level.  The dynamic rules (frame-based rate updates and queue-driven
weights) are expressed as pure state-update functions so that simulator
runs can be replayed from their traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelStateSpace

#: named channel-adaptation functions ``k(x)`` accepted by configs
K_FAMILIES = {
    "x": lambda x: x,
    "x^5": lambda x: x ** 5,
    "x^(1/5)": lambda x: x ** 0.2,
    "1": lambda x: np.ones_like(x),
}


def k_function(k):
    """Resolve ``k`` (a name from :data:`K_FAMILIES` or a callable) to a vectorized callable."""
    if callable(k):
        return k
    try:
        return K_FAMILIES[k]
    except KeyError:
        raise ValueError(f"unknown k family {k!r}; choose from {sorted(K_FAMILIES)}") from None


def k_values(k, levels):
    vals = np.asarray(k_function(k)(np.asarray(levels, dtype=float)), dtype=float)
    vals = np.broadcast_to(vals, np.shape(levels)).copy()
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ValueError("k must be finite and nonnegative on every channel level")
    return vals


@dataclass(frozen=True, eq=False)
class CsmaPolicy:
    """Static A-CSMA policy.

    Attributes
    ----------
    space : ChannelStateSpace
    backoff : ndarray (n, m)
        ``f_i(h_u)``.
    holding : ndarray (n, m)
        ``g_i(h_u)``.
    kind : str
        ``"ucsma"``, ``"exp"``, ``"expk"`` or ``"table"``.
    r : ndarray or None
        Exponent vector for the exponential families.
    k : str or callable or None
        Channel-adaptation function of ``"expk"`` policies.
    """

    space: ChannelStateSpace
    backoff: np.ndarray
    holding: np.ndarray
    kind: str = "table"
    r: np.ndarray | None = None
    k: object = None

    def __post_init__(self):
        shape = (self.space.n, self.space.m)
        f = np.broadcast_to(np.asarray(self.backoff, dtype=float), shape).copy()
        g = np.broadcast_to(np.asarray(self.holding, dtype=float), shape).copy()
        if not (np.all(f > 0) and np.all(g > 0) and np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise ValueError("backoff and holding rates must be positive and finite")
        f.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "backoff", f)
        object.__setattr__(self, "holding", g)
        if self.r is not None:
            r = np.asarray(self.r, dtype=float).copy()
            r.setflags(write=False)
            object.__setattr__(self, "r", r)

    @property
    def n(self):
        return self.space.n

    def log_ratio(self):
        """``log(f_i(h) / g_i(h))`` as an ``(n, m)`` table."""
        return np.log(self.backoff) - np.log(self.holding)

    def scaled(self, factor):
        """Same policy with every rate multiplied by ``factor`` (log-ratios unchanged)."""
        return replace(self, backoff=self.backoff * factor, holding=self.holding * factor)

    def min_rate(self):
        return float(min(self.backoff.min(), self.holding.min()))

    def max_backoff(self):
        return float(self.backoff.max())

    def describe(self):
        out = {"kind": self.kind, "min_rate": self.min_rate(), "max_backoff": self.max_backoff()}
        if self.r is not None:
            out["r"] = self.r.tolist()
        if isinstance(self.k, str):
            out["k"] = self.k
        return out


def make_ucsma_policy(backoff, holding, space: ChannelStateSpace):
    """Channel-unaware policy with constant per-link rates ``R_i`` and ``S_i``."""
    n, m = space.n, space.m
    R = np.broadcast_to(np.asarray(backoff, float), (n,))
    S = np.broadcast_to(np.asarray(holding, float), (n,))
    return CsmaPolicy(space, np.repeat(R[:, None], m, 1), np.repeat(S[:, None], m, 1),
                      kind="ucsma", r=np.log(R / S))


def make_exp_policy(r, base_backoff, space: ChannelStateSpace):
    """EXP-A-CSMA policy ``f_i = R_i``, ``g_i(h) = R_i exp(-r_i h)``.

    ``base_backoff`` may be a scalar or a per-link vector.
    """
    r = np.broadcast_to(np.asarray(r, float), (space.n,))
    R = np.broadcast_to(np.asarray(base_backoff, float), (space.n,))
    if np.any(R <= 0):
        raise ValueError("base backoff rate must be positive")
    f = np.repeat(R[:, None], space.m, axis=1)
    g = R[:, None] * np.exp(-np.outer(r, space.levels))
    return CsmaPolicy(space, f, g, kind="exp", r=r)


def make_expk_policy(r, k, base_backoff, space: ChannelStateSpace):
    """EXP(k)-A-CSMA policy: ``log(f_i/g_i)(h) = r_i k(h)`` with ``f_i = R``."""
    r = np.broadcast_to(np.asarray(r, float), (space.n,))
    R = np.broadcast_to(np.asarray(base_backoff, float), (space.n,))
    kv = k_values(k, space.levels)
    f = np.repeat(R[:, None], space.m, axis=1)
    g = R[:, None] * np.exp(-np.outer(r, kv))
    return CsmaPolicy(space, f, g, kind="expk", r=r, k=k)


def make_table_policy(backoff, holding, space: ChannelStateSpace):
    return CsmaPolicy(space, backoff, holding, kind="table")


def policy_rates_at(policy: CsmaPolicy, link: int, level: float):
    """``(f_i(level), g_i(level))``; ``KeyError`` if ``level`` is not a channel level."""
    u = policy.space.level_index(level)
    return float(policy.backoff[link, u]), float(policy.holding[link, u])


# -- rate-based (frame) updates ---------------------------------------------

def frame_length(j: int) -> float:
    """``T(j) = exp(sqrt(j))`` for ``j >= 1``; the initial frame has length 1."""
    return 1.0 if j == 0 else math.exp(math.sqrt(j))


def step_size(j: int) -> float:
    """``alpha(j) = 1/j`` for ``j >= 1``; the update closing frame 0 uses 1."""
    return 1.0 / max(j, 1)


@dataclass(frozen=True)
class RateBasedState:
    """Parameters in force during frame ``j`` of the rate-based algorithm.

    During frame ``j`` the backoff rate is ``j + 1`` and the holding rate is
    ``(j + 1) exp(-r_i k(h))``, so ``log(f/g) = r_i k(h)`` throughout.
    """

    j: int
    r: tuple
    start: float = 0.0

    @classmethod
    def initial(cls, n):
        return cls(0, (0.0,) * n, 0.0)

    @property
    def length(self):
        return frame_length(self.j)

    @property
    def end(self):
        return self.start + self.length

    @property
    def step(self):
        return step_size(self.j)

    def policy(self, space: ChannelStateSpace, k="x"):
        kv = k_values(k, space.levels)
        scale = float(self.j + 1)
        r = np.asarray(self.r)
        f = np.full((space.n, space.m), scale)
        g = scale * np.exp(-np.outer(r, kv))
        return CsmaPolicy(space, f, g, kind="exp" if k == "x" else "expk", r=r, k=k)


def rate_based_step(state: RateBasedState, lam_hat, s_hat) -> RateBasedState:
    """Close frame ``state.j``: ``r <- r + alpha(j) (lam_hat - s_hat)``."""
    lam_hat = np.asarray(lam_hat, dtype=float)
    s_hat = np.asarray(s_hat, dtype=float)
    if not (np.all(np.isfinite(lam_hat)) and np.all(np.isfinite(s_hat))):
        raise ValueError("empirical rates must be finite")
    r = np.asarray(state.r) + state.step * (lam_hat - s_hat)
    return RateBasedState(state.j + 1, tuple(r.tolist()), state.end)


# -- queue-based weights ------------------------------------------------------

def queue_weight(x):
    """``w(x) = log log(x + e)``; zero at an empty queue."""
    return np.log(np.log(np.asarray(x, dtype=float) + math.e))


def queue_based_rates(queues):
    """``r_i = max(w(Q_i), sqrt(w(max_j Q_j)))``."""
    q = np.asarray(queues, dtype=float)
    if np.any(q < 0):
        raise ValueError("queue lengths must be nonnegative")
    w = queue_weight(q)
    return np.maximum(w, math.sqrt(float(w.max())))


def queue_based_policy(queues, space: ChannelStateSpace, k="x"):
    """Policy in force for the given queue snapshot: ``g = exp(r k(h))``, ``f = g**2``."""
    r = queue_based_rates(queues)
    kv = k_values(k, space.levels)
    g = np.exp(np.outer(r, kv))
    return CsmaPolicy(space, g ** 2, g, kind="exp" if k == "x" else "expk", r=r, k=k)


@dataclass
class DynamicPolicySpec:
    """Selects a dynamic rule for the simulator.

    ``rule`` is ``"rate-based"`` or ``"queue-based"``; ``k`` names the
    channel-adaptation function (``"x"`` gives the exponential family,
    ``"1"`` gives channel-unaware weights).
    """

    rule: str
    k: object = "x"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rule not in ("rate-based", "queue-based"):
            raise ValueError(f"unknown dynamic rule {self.rule!r}")
        k_function(self.k)

"""Parameter design: U-CSMA ratios, their EXP-A-CSMA conversion, and limited-backoff designs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..channel import ChannelModel
from ..graph import IndependentSetFamily, InterferenceGraph, chromatic_number, enumerate_independent_sets
from ..policy import CsmaPolicy, make_exp_policy
from .capacity import polytope_empty_mass
from .gibbs import ChannelAverage, maximize_F


class InfeasibleTargetError(ValueError):
    pass


def alpha_lower_bound(g: InterferenceGraph, ch: ChannelModel) -> float:
    """``max(min_i E[c_i], 1/chi(G))``."""
    if g.n != ch.n:
        raise ValueError("graph and channel disagree on the number of links")
    return max(float(ch.mean_capacity().min()), 1.0 / chromatic_number(g))


def ucsma_design(target, family: IndependentSetFamily, margin=0.0, tol=1e-10):
    """Ratios ``R_i/S_i`` whose static Gibbs marginals reach ``target``.

    The target must lie strictly inside the independent-set polytope,
    meaning some mixture dominating it keeps positive weight on the empty
    schedule.  The marginals of the returned ratios equal
    ``target * (1 + margin)`` up to ``tol``.

    Raises
    ------
    InfeasibleTargetError
        If the (inflated) target is not strictly inside the polytope.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (family.n,):
        raise ValueError(f"target must have length {family.n}")
    aim = target * (1.0 + margin)
    if np.any(aim <= 0):
        raise InfeasibleTargetError("target marginals must be positive")
    if polytope_empty_mass(family, aim) <= 1e-12:
        raise InfeasibleTargetError("target is not strictly inside the independent-set polytope")
    r = maximize_F(aim, None, family, tol=tol, avg=ChannelAverage.static(family))
    return np.exp(r)


def _mean_exp(probs, levels, r):
    return float(np.dot(probs, np.exp(-r * levels)))


def exp_from_ucsma(backoff, holding, ch: ChannelModel, xtol=1e-12):
    """EXP-A-CSMA policy matching U-CSMA rates in channel average.

    Each ``r_i`` solves ``S_i = sum_c pi_c R_i exp(-r_i c_i)``; the right
    side is strictly decreasing in ``r_i`` with range ``(0, inf)``, so a
    bracket always exists.

    Returns
    -------
    r : ndarray
    policy : CsmaPolicy
        ``f_i = R_i`` and ``g_i(h) = R_i exp(-r_i h)``.
    """
    n = ch.n
    R = np.broadcast_to(np.asarray(backoff, dtype=float), (n,))
    S = np.broadcast_to(np.asarray(holding, dtype=float), (n,))
    if np.any(R <= 0) or np.any(S <= 0):
        raise ValueError("U-CSMA rates must be positive")
    r = np.zeros(n)
    for i in range(n):
        p, lv = ch.link_stationary[i], ch.levels
        goal = S[i] / R[i]
        if goal == 1.0:
            continue
        h = lambda x: _mean_exp(p, lv, x) - goal
        lo, hi = -1.0, 1.0
        while h(lo) < 0:
            lo *= 2
        while h(hi) > 0:
            hi *= 2
        r[i] = brentq(h, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)
    return r, make_exp_policy(r, R, ch.space)


@dataclass
class LimitedBackoffDesign:
    policy: CsmaPolicy
    ratios: np.ndarray
    backoff: np.ndarray
    holding: np.ndarray
    schedule_target: np.ndarray
    branch: str  # "mean-capacity" or "coloring"


def limited_backoff_design(g: InterferenceGraph, ch: ChannelModel, lam, phi, delta=0.01,
                           family: IndependentSetFamily | None = None) -> LimitedBackoffDesign:
    """EXP-A-CSMA with every backoff rate at most ``phi`` serving ``lam``.

    Follows the two-step route: choose schedule marginals ``rho`` (either
    ``lam / min_i E[c_i]`` or the coloring target ``1/chi - delta``,
    whichever branch of the bound is larger), design U-CSMA ratios for
    ``rho`` with all rates scaled under ``phi``, then convert to the
    exponential family by matching channel-averaged holding rates.
    """
    family = enumerate_independent_sets(g) if family is None else family
    lam = np.asarray(lam, dtype=float)
    ec = float(ch.mean_capacity().min())
    chi = chromatic_number(g)
    if ec >= 1.0 / chi:
        rho, branch = lam / ec, "mean-capacity"
    else:
        rho, branch = np.full(g.n, (1.0 - delta) / chi), "coloring"
    ratios = ucsma_design(rho, family)
    R = phi * np.minimum(1.0, ratios)
    S = R / ratios
    _, policy = exp_from_ucsma(R, S, ch)
    return LimitedBackoffDesign(policy, ratios, R, S, rho, branch)

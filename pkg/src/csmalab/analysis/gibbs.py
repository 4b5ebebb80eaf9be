"""Conditional Gibbs measures, the concave objective F and its maximizer."""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import logsumexp

from ..channel import ChannelModel
from ..graph import IndependentSetFamily
from ..policy import k_values

log = logging.getLogger(__name__)

#: |I(G)| * |H^n| ceiling for the enumerated objective
MAX_GIBBS_TERMS = 2 ** 24


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, r, grad_norm):
        super().__init__(f"{msg} (final |grad F|_inf = {grad_norm:.3e})")
        self.r = r
        self.grad_norm = grad_norm


def conditional_gibbs(r, c, family: IndependentSetFamily):
    """Gibbs law over ``I(G)`` with weights ``exp(sum_i sigma_i r_i c_i)``.

    Returns
    -------
    probs : ndarray (N,)
    log_partition : float
    """
    logw = family.sets @ (np.asarray(r, float) * np.asarray(c, float))
    logz = logsumexp(logw)
    return np.exp(logw - logz), float(logz)


def gibbs_table(r, caps, family: IndependentSetFamily):
    """Gibbs laws for a stack of capacity vectors ``caps`` (J, n).

    Returns ``(P, log_z)`` with ``P`` of shape (J, N).
    """
    caps = np.atleast_2d(np.asarray(caps, float))
    logw = (caps * np.asarray(r, float)[None, :]) @ family.sets.T.astype(float)
    logz = logsumexp(logw, axis=1)
    return np.exp(logw - logz[:, None]), logz


class ChannelAverage:
    """Enumerated channel states, their probabilities and Gibbs inputs.

    ``caps`` is what multiplies the service indicator (the real capacities)
    and ``eff`` is what enters the Gibbs exponent (``k`` applied to them).
    """

    def __init__(self, ch: ChannelModel, family: IndependentSetFamily, k="x"):
        size = ch.space.size * len(family)
        if size > MAX_GIBBS_TERMS:
            raise ValueError(f"objective needs {size} terms (> {MAX_GIBBS_TERMS})")
        self.family = family
        self.pi = ch.stationary
        idx = ch.space.joint_states()
        self.caps = ch.levels[idx]
        self.eff = k_values(k, ch.levels)[idx]
        keep = self.pi > 0
        self.pi, self.caps, self.eff = self.pi[keep], self.caps[keep], self.eff[keep]
        self.S = family.sets.astype(float)

    @classmethod
    def static(cls, family: IndependentSetFamily):
        return cls(ChannelModel.static(family.n), family)

    def marginals(self, r):
        """``E[sigma_i | c]`` as (J, n) plus the Gibbs table."""
        P, logz = gibbs_table(r, self.eff, self.family)
        return P @ self.S, P, logz

    def service(self, r):
        m, _, _ = self.marginals(r)
        return np.einsum("c,ci,ci->i", self.pi, self.caps, m)

    def objective(self, r, lam):
        """``F(r) = lam . r - sum_c pi_c log Z_c(r)``."""
        _, logz = gibbs_table(r, self.eff, self.family)
        return float(np.dot(lam, r) - self.pi @ logz)

    def gradient(self, r, lam):
        """``dF/dr_i = lam_i - sum_c pi_c k(c_i) E[sigma_i | c]``.

        For ``k(x) = x`` this is ``lam - service(r)``.
        """
        m, _, _ = self.marginals(r)
        return np.asarray(lam, float) - np.einsum("c,ci,ci->i", self.pi, self.eff, m)

    def hessian(self, r):
        """``-sum_c pi_c diag(k(c)) Cov(sigma | c) diag(k(c))``."""
        m, P, _ = self.marginals(r)
        second = np.einsum("cs,si,sj->cij", P, self.S, self.S)
        cov = second - m[:, :, None] * m[:, None, :]
        return -np.einsum("c,ci,cij,cj->ij", self.pi, self.eff, cov, self.eff)


def service_rate(r, ch: ChannelModel, family: IndependentSetFamily, k="x"):
    """Per-link service ``sum_c c_i pi_c P(sigma_i = 1 | c)`` under the Gibbs conditionals."""
    return ChannelAverage(ch, family, k).service(r)


def objective_F(r, lam, ch: ChannelModel, family: IndependentSetFamily):
    return ChannelAverage(ch, family).objective(r, lam)


def gradient_F(r, lam, ch: ChannelModel, family: IndependentSetFamily):
    return ChannelAverage(ch, family).gradient(r, lam)


def maximize_F(lam, ch: ChannelModel, family: IndependentSetFamily, tol=1e-8, max_iter=500,
               r0=None, avg: ChannelAverage | None = None):
    """Maximizer of the strictly concave objective ``F``.

    Newton steps (negated Hessian is the channel-averaged covariance) with
    Armijo backtracking; falls back to the plain gradient direction when
    the Hessian is numerically singular.  Starts from ``r = 0``.

    Raises
    ------
    NonConvergenceError
        If ``|grad F|_inf > tol`` after ``max_iter`` iterations.
    """
    avg = ChannelAverage(ch, family) if avg is None else avg
    lam = np.asarray(lam, dtype=float)
    r = np.zeros(family.n) if r0 is None else np.array(r0, dtype=float)
    val = avg.objective(r, lam)
    grad = avg.gradient(r, lam)
    for _ in range(max_iter):
        if np.max(np.abs(grad)) <= tol:
            break
        H = avg.hessian(r)
        try:
            L = np.linalg.cholesky(-H)
            step = np.linalg.solve(L.T, np.linalg.solve(L, grad))
        except np.linalg.LinAlgError:
            step = grad
        if not np.all(np.isfinite(step)) or np.dot(step, grad) <= 0:
            step = grad
        t = 1.0
        slope = float(np.dot(step, grad))
        while True:
            cand = r + t * step
            cval = avg.objective(cand, lam)
            if cval >= val + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12 and cval < val:
            break
        r, val = cand, cval
        grad = avg.gradient(r, lam)
    gnorm = float(np.max(np.abs(grad)))
    if gnorm > tol:
        raise NonConvergenceError("maximize_F did not converge", r, gnorm)
    if np.max(np.abs(r)) > 1e3:
        log.warning("maximizer has |r|_inf = %.3g; target is probably near the capacity boundary",
                    np.max(np.abs(r)))
    return r


def lemma_box(lam_margin, ch: ChannelModel, family: IndependentSetFamily):
    """Sanity bound ``4 n^2 log|I| / (delta^2 min_i E[c_i]^2)`` on ``|r*|_inf``."""
    n = family.n
    ec = ch.mean_capacity()
    return 4 * n ** 2 * np.log(len(family)) / (lam_margin ** 2 * float(ec.min()) ** 2)

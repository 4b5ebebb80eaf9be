"""Capacity region membership via linear programming.

Variables are the time fractions ``alpha[rho, c]`` of using schedule ``rho``
in channel state ``c``; each channel state carries its own simplex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..channel import ChannelModel
from ..graph import IndependentSetFamily, InterferenceGraph, enumerate_independent_sets

#: tolerance on the LP margin for calling a point "on the boundary"
BOUNDARY_TOL = 1e-9
MAX_LP_VARIABLES = 2_000_000


class LPError(RuntimeError):
    pass


@dataclass(eq=False)
class CapacityRegionOracle:
    graph: InterferenceGraph
    channel: ChannelModel
    family: IndependentSetFamily
    pi: np.ndarray
    caps: np.ndarray

    @property
    def n(self):
        return self.graph.n

    def service_matrix(self):
        """Sparse (n, N*J) map from ``alpha`` to the long-run service vector."""
        N, J = len(self.family), len(self.pi)
        if N * J > MAX_LP_VARIABLES:
            raise ValueError(f"LP would need {N * J} variables")
        # coefficient of alpha[s, c] in row i: pi_c * c_i * rho_{s,i}
        sets = self.family.sets.astype(float)  # (N, n)
        coef = sets[:, None, :] * (self.pi[:, None] * self.caps)[None, :, :]  # (N, J, n)
        return sp.csr_matrix(coef.reshape(N * J, self.n).T)

    def simplex_rows(self):
        N, J = len(self.family), len(self.pi)
        return sp.kron(np.ones((1, N)), sp.identity(J), format="csr")


def capacity_oracle(g: InterferenceGraph, ch: ChannelModel) -> CapacityRegionOracle:
    family = enumerate_independent_sets(g)
    pi = ch.stationary
    return CapacityRegionOracle(g, ch, family, pi, ch.joint_capacities())


@dataclass
class Membership:
    status: str  # "strictly-inside" | "boundary" | "outside"
    margin: float

    @property
    def inside(self):
        return self.status == "strictly-inside"


def _solve(c, A_ub, b_ub, A_eq, b_eq, bounds):
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        raise LPError(f"LP failed: {res.message}")
    return res


def capacity_margin(oracle: CapacityRegionOracle, lam) -> float:
    """``max t`` such that some schedule mix serves ``lam_i + t`` on every link."""
    lam = np.asarray(lam, dtype=float)
    M = oracle.service_matrix()
    nvar = M.shape[1]
    # variables: alpha (nvar), t ; minimize -t ; -M alpha + t <= -lam
    A_ub = sp.hstack([-M, sp.csr_matrix(np.ones((oracle.n, 1)))], format="csr")
    E = oracle.simplex_rows()
    A_eq = sp.hstack([E, sp.csr_matrix((E.shape[0], 1))], format="csr")
    c = np.zeros(nvar + 1)
    c[-1] = -1.0
    bounds = [(0, None)] * nvar + [(None, None)]
    res = _solve(c, A_ub, -lam, A_eq, np.ones(E.shape[0]), bounds)
    return float(res.x[-1])


def capacity_membership(oracle: CapacityRegionOracle, lam, tol=BOUNDARY_TOL) -> Membership:
    """Classify ``lam`` as strictly inside, on the boundary of, or outside the admissible region."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        return Membership("outside", float("-inf"))
    t = capacity_margin(oracle, lam)
    if t > tol:
        return Membership("strictly-inside", t)
    if t >= -tol:
        return Membership("boundary", t)
    return Membership("outside", t)


def ray_boundary(oracle: CapacityRegionOracle, direction) -> float:
    """Largest ``s`` with ``s * direction`` admissible."""
    d = np.asarray(direction, dtype=float)
    if np.any(d < 0) or not np.any(d > 0):
        raise ValueError("direction must be nonnegative and nonzero")
    M = oracle.service_matrix()
    nvar = M.shape[1]
    A_ub = sp.hstack([-M, sp.csr_matrix(d[:, None])], format="csr")
    E = oracle.simplex_rows()
    A_eq = sp.hstack([E, sp.csr_matrix((E.shape[0], 1))], format="csr")
    c = np.zeros(nvar + 1)
    c[-1] = -1.0
    bounds = [(0, None)] * nvar + [(0, None)]
    res = _solve(c, A_ub, np.zeros(oracle.n), A_eq, np.ones(E.shape[0]), bounds)
    return float(res.x[-1])


def symmetric_boundary(oracle: CapacityRegionOracle):
    """Boundary point on the all-ones ray."""
    return ray_boundary(oracle, np.ones(oracle.n)) * np.ones(oracle.n)


def polytope_ray_scale(family: IndependentSetFamily, x) -> float:
    """Largest ``s`` with ``s * x`` in the independent-set polytope."""
    x = np.asarray(x, dtype=float)
    S = family.sets.astype(float)  # (N, n)
    N = len(family)
    # variables alpha (N), s ; max s ; -S^T alpha + s x <= 0 ; sum alpha = 1
    A_ub = np.hstack([-S.T, x[:, None]])
    A_eq = np.hstack([np.ones((1, N)), np.zeros((1, 1))])
    c = np.zeros(N + 1)
    c[-1] = -1.0
    res = _solve(c, A_ub, np.zeros(len(x)), A_eq, [1.0], [(0, None)] * (N + 1))
    return float(res.x[-1])


def polytope_empty_mass(family: IndependentSetFamily, x) -> float:
    """Largest weight on the empty schedule among mixtures dominating ``x``.

    ``-inf`` when no mixture dominates ``x`` (``x`` outside the polytope).
    """
    x = np.asarray(x, dtype=float)
    S = family.sets.astype(float)
    N = len(family)
    c = np.zeros(N)
    c[0] = -1.0  # row 0 is the empty set
    res = linprog(c, A_ub=-S.T, b_ub=-x, A_eq=np.ones((1, N)), b_eq=[1.0],
                  bounds=[(0, None)] * N, method="highs")
    if res.status == 2:
        return float("-inf")
    if res.status != 0:
        raise LPError(f"LP failed: {res.message}")
    return float(res.x[0])

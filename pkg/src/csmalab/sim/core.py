"""Simulation configs, traces and rate-stability statistics."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelModel
from ..graph import InterferenceGraph
from ..policy import CsmaPolicy, DynamicPolicySpec, k_values
from . import kernel

TRACE_HEADER = "t,link,Q,r,Dhat_over_t,D_over_t,sigma_frac"


@dataclass
class SimConfig:
    """One simulation replica.

    Parameters
    ----------
    graph, channel
    policy : CsmaPolicy or DynamicPolicySpec
    arrival_rates : array (n,)
        Work arrival rate per link.
    arrival_kind : {"poisson", "fluid"}
        Poisson unit-work arrivals or deterministic fluid inflow.
    horizon : float
    seed : int
    n_samples : int
        Evenly spaced trace records (the last one is at ``horizon``).
    snapshot_interval : float, optional
        Spacing of joint-state snapshots used for law checks.
    check : bool
        Count schedule-feasibility violations after every CSMA event.
    """

    graph: InterferenceGraph
    channel: ChannelModel
    policy: object
    arrival_rates: np.ndarray = None
    arrival_kind: str = "poisson"
    horizon: float = 1e4
    seed: int = 0
    n_samples: int = 1000
    snapshot_interval: float | None = None
    check: bool = False
    frame_cap: int = 4096
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.graph.n
        if self.channel.n != n:
            raise ValueError("graph and channel disagree on the number of links")
        lam = np.zeros(n) if self.arrival_rates is None else self.arrival_rates
        lam = np.broadcast_to(np.asarray(lam, dtype=float), (n,)).copy()
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise ValueError("arrival rates must be finite and nonnegative")
        self.arrival_rates = lam
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.arrival_kind not in ("poisson", "fluid"):
            raise ValueError(f"unknown arrival kind {self.arrival_kind!r}")
        if self.n_samples < 1:
            raise ValueError("need at least one sample")
        if isinstance(self.policy, CsmaPolicy):
            if self.policy.n != n:
                raise ValueError("policy and graph disagree on the number of links")
        elif not isinstance(self.policy, DynamicPolicySpec):
            raise TypeError("policy must be a CsmaPolicy or a DynamicPolicySpec")

    def describe(self):
        pol = self.policy
        out = {
            "n": self.graph.n,
            "edges": [list(e) for e in self.graph.sorted_edges()],
            "channel": self.channel.describe(),
            "policy": pol.describe() if isinstance(pol, CsmaPolicy) else {"rule": pol.rule, "k": str(pol.k)},
            "arrival_rates": self.arrival_rates.tolist(),
            "arrival_kind": self.arrival_kind,
            "horizon": self.horizon,
            "seed": self.seed,
        }
        out.update(self.meta)
        return out


@dataclass
class FrameHistory:
    """Per-frame records of the rate-based rule; row ``j`` closes frame ``j``."""

    end_times: np.ndarray
    r: np.ndarray
    lam_hat: np.ndarray
    s_hat: np.ndarray

    def __len__(self):
        return len(self.end_times)


@dataclass
class SimTrace:
    config: SimConfig
    times: np.ndarray
    Q: np.ndarray
    A: np.ndarray
    D: np.ndarray
    Dhat: np.ndarray
    busy: np.ndarray
    r: np.ndarray
    frames: FrameHistory | None
    snap_schedules: np.ndarray
    snap_channels: np.ndarray
    n_events: int
    violations: int

    @property
    def horizon(self):
        return self.config.horizon

    def final(self):
        T = self.times[-1]
        return {
            "t": float(T),
            "Q_over_t": self.Q[-1] / T,
            "Dhat_over_t": self.Dhat[-1] / T,
            "D_over_t": self.D[-1] / T,
            "sigma_frac": self.busy[-1] / T,
        }

    def to_csv(self, path=None):
        """Write the sampled records; config and seed are echoed as ``#`` lines."""
        buf = io.StringIO()
        buf.write("# " + json.dumps(self.config.describe(), sort_keys=True) + "\n")
        buf.write(f"# seed={self.config.seed} events={self.n_events}\n")
        buf.write(TRACE_HEADER + "\n")
        n = self.Q.shape[1]
        for k, t in enumerate(self.times):
            inv = 1.0 / t if t > 0 else 0.0
            for i in range(n):
                buf.write(f"{t:.17g},{i},{self.Q[k, i]:.17g},{self.r[k, i]:.17g},"
                          f"{self.Dhat[k, i] * inv:.17g},{self.D[k, i] * inv:.17g},{self.busy[k, i] * inv:.17g}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _sample_times(cfg: SimConfig):
    return np.linspace(0.0, cfg.horizon, cfg.n_samples + 1)[1:]


def _channel_arrays(ch: ChannelModel):
    n, m = ch.n, ch.space.m
    if ch.factored:
        exit_ = ch.link_rates.sum(axis=2)
        with np.errstate(invalid="ignore", divide="ignore"):
            cum = np.cumsum(ch.link_rates, axis=2) / exit_[:, :, None]
        cum = np.nan_to_num(cum, nan=1.0)
        return (kernel.FACTORED, exit_, cum, np.zeros(1), np.zeros((1, 1)), np.zeros((1, n), dtype=np.int64))
    R = ch.joint_rates
    exit_ = R.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cum = np.cumsum(R, axis=1) / exit_[:, None]
    cum = np.nan_to_num(cum, nan=1.0)
    return (kernel.JOINT, np.zeros((n, m)), np.zeros((n, m, m)), exit_, cum, ch.space.joint_states())


def _initial_levels(ch: ChannelModel, rng):
    if ch.factored:
        return np.array([rng.choice(ch.space.m, p=p) for p in ch.link_stationary], dtype=np.int64)
    code = rng.choice(ch.space.size, p=ch.stationary)
    return ch.space.joint_states()[code].astype(np.int64)


def simulate(cfg: SimConfig) -> SimTrace:
    """Event-driven simulation of the joint process under ``cfg``.

    Static policies use their rate tables directly; dynamic specs switch to
    the frame-based or queue-driven rule.  Identical configs give identical
    traces.
    """
    g, ch = cfg.graph, cfg.channel
    n, m = g.n, ch.space.m
    init_rng, kseed = np.random.SeedSequence(cfg.seed).spawn(2)
    rng = np.random.default_rng(init_rng)
    lev0 = _initial_levels(ch, rng)
    kernel_seed = int(kseed.generate_state(1)[0])
    ch_mode, link_exit, link_cum, joint_exit, joint_cum, table = _channel_arrays(ch)

    pol = cfg.policy
    if isinstance(pol, CsmaPolicy):
        mode = kernel.STATIC
        f, gg = np.array(pol.backoff), np.array(pol.holding)
        kv = np.ones(m)
    else:
        mode = kernel.RATE_BASED if pol.rule == "rate-based" else kernel.QUEUE_BASED
        f, gg = np.ones((n, m)), np.ones((n, m))
        kv = k_values(pol.k, ch.levels)
    indptr, indices = g.csr()
    snaps = (np.arange(1, int(cfg.horizon / cfg.snapshot_interval)) * cfg.snapshot_interval
             if cfg.snapshot_interval else np.zeros(0))
    out = kernel.run_kernel(
        np.asarray(indptr, np.int64), np.asarray(indices, np.int64), np.asarray(ch.levels, float),
        ch_mode, link_exit, link_cum, joint_exit, joint_cum, table, lev0,
        mode, f, gg, kv, cfg.arrival_rates,
        kernel.POISSON if cfg.arrival_kind == "poisson" else kernel.FLUID,
        float(cfg.horizon), kernel_seed, _sample_times(cfg), snaps.astype(float), cfg.frame_cap, cfg.check,
    )
    (Q, A, D, Dhat, busy, r, fr_t, fr_r, fr_lam, fr_srv, nf, sched, chan, n_events, viol) = out
    if mode == kernel.STATIC:
        r = np.broadcast_to(pol.r if pol.r is not None else np.full(n, np.nan), r.shape).copy()
    frames = FrameHistory(fr_t[:nf], fr_r[:nf], fr_lam[:nf], fr_srv[:nf]) if mode == kernel.RATE_BASED else None
    return SimTrace(cfg, _sample_times(cfg), Q, A, D, Dhat, busy, r, frames, sched, chan, int(n_events), int(viol))


def simulate_rate_based(cfg: SimConfig, k="x") -> SimTrace:
    """Frame-based rule: ``r`` moves by ``(lam_hat - s_hat)/j`` at the end of frame ``j``."""
    if not (isinstance(cfg.policy, DynamicPolicySpec) and cfg.policy.rule == "rate-based"):
        cfg.policy = DynamicPolicySpec("rate-based", k)
    return simulate(cfg)


def simulate_queue_based(cfg: SimConfig, k="x") -> SimTrace:
    """Queue-driven rule re-evaluated at integer times."""
    if not (isinstance(cfg.policy, DynamicPolicySpec) and cfg.policy.rule == "queue-based"):
        cfg.policy = DynamicPolicySpec("queue-based", k)
    return simulate(cfg)


@dataclass
class RateStats:
    Q_over_t: np.ndarray
    final_slope: np.ndarray
    Dhat_over_t: np.ndarray
    D_over_t: np.ndarray
    mean_Q_final_half: np.ndarray

    def as_dict(self):
        return {k: v.tolist() for k, v in self.__dict__.items()}


def rate_stability_stats(trace: SimTrace) -> RateStats:
    """``Q(T)/T``, least-squares ``Q`` slope over the final decile, ``Dhat(T)/T``, ``D(T)/T``."""
    t = trace.times
    if len(t) == 0:
        raise ValueError("empty trace")
    T = t[-1]
    tail = t >= 0.9 * T
    if tail.sum() >= 2:
        tt = t[tail] - t[tail].mean()
        slope = (tt @ (trace.Q[tail] - trace.Q[tail].mean(axis=0))) / (tt @ tt)
    else:
        slope = np.zeros(trace.Q.shape[1])
    half = t >= 0.5 * T
    return RateStats(trace.Q[-1] / T, slope, trace.Dhat[-1] / T, trace.D[-1] / T, trace.Q[half].mean(axis=0))

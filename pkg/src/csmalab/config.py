"""TOML configuration files.

Sections: ``[graph]``, ``[channel]``, ``[policy]``, ``[arrivals]``, ``[sim]``
and ``[experiment]``.  Every builder takes the parsed dict so configs can
also be assembled in code.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from . import graph as gr
from .channel import ChannelModel, ChannelStateSpace
from .policy import DynamicPolicySpec, make_exp_policy, make_expk_policy, make_table_policy, make_ucsma_policy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        try:
            cfg = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    cfg.setdefault("_base", str(path.parent))
    return cfg


def loads_config(text: str) -> dict:
    return tomllib.loads(text)


def _need(section, key, name):
    if key not in section:
        raise ConfigError(f"[{name}] is missing '{key}'")
    return section[key]


def build_graph(cfg: dict) -> gr.InterferenceGraph:
    sec = cfg.get("graph")
    if sec is None:
        raise ConfigError("missing [graph] section")
    kind = sec.get("kind", "edges")
    makers = {"complete": gr.complete_graph, "empty": gr.empty_graph, "path": gr.path_graph,
              "cycle": gr.cycle_graph, "star": gr.star_graph}
    if kind in makers:
        return makers[kind](int(_need(sec, "n", "graph")))
    if kind == "petersen":
        return gr.petersen_graph()
    if kind == "edges":
        return gr.InterferenceGraph.from_edges(int(_need(sec, "n", "graph")),
                                               [tuple(e) for e in sec.get("edges", [])])
    if kind == "file":
        p = Path(_need(sec, "file", "graph"))
        if not p.is_absolute():
            p = Path(cfg.get("_base", ".")) / p
        return gr.read_edge_list(p)
    if kind == "random-two-hop":
        nodes = gr.random_layout(int(sec.get("nodes", 20)), float(sec.get("side", 800.0)),
                                 int(sec.get("layout_seed", 0)))
        g, _ = gr.two_hop_conflict_graph(nodes, float(sec.get("tx_range", 250.0)), sec.get("n_links"))
        if g is None:
            raise ConfigError("random layout produced no links")
        return g
    raise ConfigError(f"unknown graph kind {kind!r}")


def build_channel(cfg: dict, n: int) -> ChannelModel:
    sec = cfg.get("channel", {"mode": "static"})
    mode = sec.get("mode", "iid-matrix")
    if mode == "static":
        return ChannelModel.static(n)
    if mode == "iid-ladder":
        m = int(sec.get("m", len(sec.get("levels", [])) or 10))
        return ChannelModel.ladder(n, m, float(sec.get("rate", 0.01)))
    levels = _need(sec, "levels", "channel")
    rates = np.asarray(_need(sec, "rates", "channel"), dtype=float)
    if mode == "iid-matrix":
        return ChannelModel(ChannelStateSpace(levels, n), link_rates=rates)
    if mode == "joint":
        return ChannelModel(ChannelStateSpace(levels, n), joint_rates=rates)
    raise ConfigError(f"unknown channel mode {mode!r}")


def build_policy(cfg: dict, ch: ChannelModel):
    """A :class:`CsmaPolicy` for static kinds or a :class:`DynamicPolicySpec`."""
    sec = cfg.get("policy")
    if sec is None:
        raise ConfigError("missing [policy] section")
    kind = _need(sec, "kind", "policy")
    n = ch.n
    if kind in ("rate-based", "queue-based"):
        return DynamicPolicySpec(kind, sec.get("k", "x"))
    R = sec.get("R", 1.0)
    if kind == "ucsma":
        S = sec.get("S")
        if S is None:
            S = np.asarray(R, float) / np.exp(np.asarray(sec.get("r", 0.0), float))
        return make_ucsma_policy(R, S, ch.space)
    if kind == "exp":
        return make_exp_policy(np.broadcast_to(sec.get("r", 0.0), (n,)), R, ch.space)
    if kind == "expk":
        return make_expk_policy(np.broadcast_to(sec.get("r", 0.0), (n,)), sec.get("k", "x"), R, ch.space)
    if kind == "table":
        return make_table_policy(_need(sec, "backoff", "policy"), _need(sec, "holding", "policy"), ch.space)
    raise ConfigError(f"unknown policy kind {kind!r}")


def build_arrivals(cfg: dict, n: int):
    """``(rates, kind)`` from ``[arrivals]``; ``rate`` broadcasts, ``rates`` is per link."""
    sec = cfg.get("arrivals", {})
    if "rates" in sec:
        lam = np.asarray(sec["rates"], dtype=float)
        if lam.shape != (n,):
            raise ConfigError(f"[arrivals] rates must have {n} entries")
    else:
        lam = np.full(n, float(sec.get("rate", 0.0)))
    return lam, sec.get("kind", "poisson")


def build_sim_config(cfg: dict, seed=None, horizon=None):
    from .sim import SimConfig

    g = build_graph(cfg)
    ch = build_channel(cfg, g.n)
    pol = build_policy(cfg, ch)
    lam, kind = build_arrivals(cfg, g.n)
    sec = cfg.get("sim", {})
    return SimConfig(
        g, ch, pol, arrival_rates=lam, arrival_kind=kind,
        horizon=float(horizon if horizon is not None else sec.get("horizon", 1e4)),
        seed=int(seed if seed is not None else sec.get("seed", 0)),
        n_samples=int(sec.get("n_samples", 1000)),
        snapshot_interval=sec.get("snapshot_interval"),
        check=bool(sec.get("check", False)),
    )

"""``csma-lab`` command-line front end.

    csma-lab <analyze|simulate|design|experiment> --config FILE [--seed N] [--horizon T] [--out FILE]

Exit status is 0 on success; any error prints one ``csma-lab: error: ...``
line to stderr and exits nonzero.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import config as cf
from .analysis import (
    alpha_lower_bound,
    build_generator,
    capacity_membership,
    capacity_oracle,
    exact_throughput,
    maximize_F,
    product_form_deviation,
    ray_boundary,
    service_rate,
    stationary_exact,
    ucsma_design,
)
from .channel import varying_speed
from .graph import enumerate_independent_sets
from .policy import CsmaPolicy, make_exp_policy

RECORD_HEADER = "quantity,link,value"


def _records(rows):
    buf = io.StringIO()
    buf.write(RECORD_HEADER + "\n")
    for name, link, value in rows:
        buf.write(f"{name},{'' if link is None else link},{float(value):.17g}\n")
    return buf.getvalue()


def _vec(name, values):
    return [(name, i, v) for i, v in enumerate(np.ravel(values))]


def _emit(text, out, comments=()):
    head = "".join(f"# {c}\n" for c in comments)
    if out:
        with open(out, "w") as fh:
            fh.write(head + text)
    else:
        sys.stdout.write(head + text)


def cmd_analyze(cfg, args):
    g = cf.build_graph(cfg)
    ch = cf.build_channel(cfg, g.n)
    pol = cf.build_policy(cfg, ch)
    if not isinstance(pol, CsmaPolicy):
        raise ValueError("analyze needs a static policy (ucsma, exp, expk or table)")
    lam, _ = cf.build_arrivals(cfg, g.n)
    q = build_generator(g, ch, pol)
    dist = stationary_exact(q)
    oracle = capacity_oracle(g, ch)
    rows = _vec("throughput", exact_throughput(dist))
    rows += [("residual", None, dist.residual), ("varying_speed", None, varying_speed(ch)),
             ("alpha_bound", None, alpha_lower_bound(g, ch)),
             ("symmetric_boundary", None, ray_boundary(oracle, np.ones(g.n)))]
    if pol.r is not None:
        # U-CSMA conditionals do not depend on the channel: k = 1
        k = {"ucsma": "1", "expk": pol.k}.get(pol.kind, "x")
        rows.append(("product_form_deviation", None, product_form_deviation(dist, pol.r, k)))
    if np.any(lam > 0):
        m = capacity_membership(oracle, lam)
        rows.append(("lp_margin", None, m.margin))
    rows += _vec("channel_stationary", ch.stationary)
    _emit(_records(rows), args.out, [json.dumps({"command": "analyze", "policy": pol.describe()})])


def cmd_design(cfg, args):
    g = cf.build_graph(cfg)
    ch = cf.build_channel(cfg, g.n)
    lam, _ = cf.build_arrivals(cfg, g.n)
    sec = cfg.get("design", {})
    eps = float(sec.get("epsilon", 0.05))
    family = enumerate_independent_sets(g)
    oracle = capacity_oracle(g, ch)
    m = capacity_membership(oracle, lam * (1 + eps))
    if m.status != "strictly-inside":
        raise ValueError(f"arrival rates inflated by {eps} are {m.status} (margin {m.margin:.3g})")
    r = maximize_F(lam * (1 + eps), ch, family)
    s = service_rate(r, ch, family)
    R = float(cfg.get("policy", {}).get("R", 1.0))
    pol = make_exp_policy(r, R, ch.space)
    rows = _vec("r", r) + _vec("service", s) + [("lp_margin", None, m.margin),
                                                ("alpha_bound", None, alpha_lower_bound(g, ch))]
    if sec.get("ucsma_target") is not None:
        rows += _vec("ucsma_ratio", ucsma_design(np.asarray(sec["ucsma_target"], float), family))
    _emit(_records(rows), args.out, [json.dumps({"command": "design", "epsilon": eps, "policy": pol.describe()})])


def cmd_simulate(cfg, args):
    from .sim import rate_stability_stats, simulate

    sc = cf.build_sim_config(cfg, seed=args.seed, horizon=args.horizon)
    tr = simulate(sc)
    text = tr.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    st = rate_stability_stats(tr)
    summary = {"events": tr.n_events, **st.as_dict()}
    sys.stderr.write("summary " + json.dumps(summary, sort_keys=True) + "\n")


def cmd_experiment(cfg, args):
    from . import experiments as ex
    from .channel import ChannelModel

    sec = dict(cfg.get("experiment", {}))
    kind = args.kind or sec.pop("kind", None)
    sec.pop("kind", None)
    if kind not in ex.RUNNERS:
        raise ValueError(f"unknown experiment kind {kind!r}; choose from {sorted(ex.RUNNERS)}")
    if args.seed is not None:
        sec["seeds" if kind == "figure-random-topology" else "seed"] = (
            [args.seed] if kind == "figure-random-topology" else args.seed)
    if args.horizon is not None and kind == "figure-random-topology":
        sec["horizon"] = args.horizon
    if kind == "theorem6-sweep":
        g = cf.build_graph(cfg)
        ch = cf.build_channel(cfg, g.n) if "channel" in cfg else ChannelModel.static(g.n)
        sec.pop("seed", None)
        res = ex.run_theorem6_sweep(g, ch, **sec)
    else:
        if kind == "uniqueness-star":
            sec.pop("seed", None)
        res = ex.RUNNERS[kind](**sec)
    text = res.to_csv(args.out)
    if not args.out:
        sys.stdout.write(text)


COMMANDS = {"analyze": cmd_analyze, "simulate": cmd_simulate, "design": cmd_design, "experiment": cmd_experiment}


def build_parser():
    p = argparse.ArgumentParser(prog="csma-lab", description="CSMA over Markov time-varying channels")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="TOML config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--out", default=None, help="CSV output path (default: stdout)")
    p.add_argument("--kind", default=None, help="experiment kind (overrides [experiment] kind)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = cf.load_config(args.config)
        COMMANDS[args.command](cfg, args)
    except Exception as exc:  # every module error becomes one diagnostic line
        sys.stderr.write(f"csma-lab: error: {type(exc).__name__}: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line experiment drivers.

Every report carries the full configuration, the library version and the
PRNG name, so an identical command line reproduces it byte for byte.  Exit
status: 0 success, 2 hypothesis rejected, 1 usage or data error.
"""

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import __version__, core, rng
from .gen import (FiniteRootSampler, OffspringDistribution, RootedSampler, agw_sampler,
                  canopy_sampler, complete_graph, config_model, cycle_graph, line_sampler,
                  path_graph, random_connected_graph, star_graph, ugw_sampler, uniform_root,
                  universal_cover)
from .mtp import (HashedTransport, ParentTransport, ball_distribution, isoperimetry_report,
                  mtp_monte_carlo_test, tv_distance, unit_neighbor_transport,
                  uphill_transport)

EXIT_OK, EXIT_ERROR, EXIT_REJECTED = 0, 1, 2

SAMPLERS = ("ugw", "agw", "canopy", "line", "biased-center-p3", "uniform", "degree-biased",
            "cover")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# -- inputs -----------------------------------------------------------------

def parse_graph(text):
    """``path:N``, ``cycle:N``, ``star:N``, ``complete:N``, ``random:N:EXTRA:SEED`` or a JSON file."""
    if text is None:
        raise ValueError("--graph is required for this sampler")
    if os.path.exists(text):
        with open(text) as fh:
            return core.loads(fh.read()).network
    kind, _, rest = text.partition(":")
    try:
        args = [int(x) for x in rest.split(":")] if rest else []
    except ValueError:
        raise ValueError(f"--graph: bad size in {text!r}") from None
    builders = {"path": path_graph, "cycle": cycle_graph, "star": star_graph,
                "complete": complete_graph}
    if kind in builders and len(args) == 1:
        return builders[kind](args[0])
    if kind == "random" and len(args) == 3:
        n, extra, seed = args
        return random_connected_graph(n, extra, rng.stream(seed, 0, rng.STRUCTURE))
    raise ValueError(f"--graph: cannot parse {text!r}")


def _offspring(args):
    if args.p is None:
        raise ValueError("--p is required for this sampler")
    try:
        return OffspringDistribution.parse(args.p)
    except ValueError as exc:
        raise ValueError(f"--p: {exc}") from None


def build_sampler(args):
    name, R = args.sampler, args.radius
    if name == "ugw":
        return ugw_sampler(_offspring(args), R)
    if name == "agw":
        return agw_sampler(_offspring(args), R)
    if name == "canopy":
        return canopy_sampler(R)
    if name == "line":
        return line_sampler(R)
    if name == "biased-center-p3":
        return FiniteRootSampler(path_graph(3), [0, 1, 0], name="center")
    g = parse_graph(args.graph)
    if name == "uniform":
        return uniform_root(g)
    if name == "degree-biased":
        return FiniteRootSampler(g, g.degrees, name="degree-biased")
    if name == "cover":
        return _CoverSampler(g, R)
    raise ValueError(f"--sampler: unknown sampler {name!r}")


class _CoverSampler(RootedSampler):
    """Universal cover of a finite network, rooted over a uniform vertex."""

    def __init__(self, g, radius):
        self.base = uniform_root(g)
        self.truncation_radius = radius
        self.max_degree = max(g.degrees)
        self.infinite = True

    def descriptor(self):
        return {"sampler": "cover", "base": self.base.descriptor(),
                "radius": self.truncation_radius}

    def explore(self, seed, index):
        g = universal_cover(self.base.draw(seed, index), self.truncation_radius)
        return g.explorer()


def _transport(args):
    if args.transport == "uphill":
        return uphill_transport()
    if args.transport == "unit":
        return unit_neighbor_transport()
    if args.transport == "parent":
        return ParentTransport()
    if args.transport == "hashed":
        return HashedTransport(args.salt, 1)
    raise ValueError(f"--transport: unknown transport {args.transport!r}")


def _floats(text, name):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"{name}: expected comma-separated numbers") from None


def _ints(text, name):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"{name}: expected comma-separated integers") from None


# -- subcommands ------------------------------------------------------------
# Each returns (result, rejected, csv_rows or None).

def cmd_sample(args):
    s = build_sampler(args)
    rows = [["index", "key_hex", "vertices", "edges", "root_degree"]]
    nets = []
    from .canon import canonical_key
    for i in range(args.n):
        g = s.draw(args.seed, i)
        rows.append([i, canonical_key(g).hex(), g.n, g.network.m, g.root_degree()])
        nets.append(core.to_json_dict(g))
    return {"sampler": s.descriptor(), "networks": nets}, False, rows


def cmd_mtp_test(args):
    s = build_sampler(args)
    rep = mtp_monte_carlo_test(s, _transport(args), args.n, args.seed, args.permutations)
    out = rep.as_dict()
    out["sampler"] = s.descriptor()
    out["level"] = args.level
    out["rejected"] = rep.rejected(args.level)
    return out, out["rejected"], None


def cmd_converge(args):
    p = _offspring(args)
    ref = ball_distribution(ugw_sampler(p, args.ball_radius), args.ball_radius, args.n,
                            args.seed)
    rows = [["n", "tv"]]
    per_n = []
    for k, size in enumerate(_ints(args.sizes, "--sizes")):
        g = config_model(size, p, rng.derive_seed(args.seed, k))
        emp = ball_distribution(uniform_root(g), args.ball_radius, args.n,
                                rng.derive_seed(args.seed, 1000 + k))
        tv = tv_distance(emp, ref)
        per_n.append({"n": size, "tv": tv})
        rows.append([size, repr(tv)])
    tvs = [x["tv"] for x in per_n]
    decreasing = all(a > b for a, b in zip(tvs, tvs[1:]))
    return {"ball_radius": args.ball_radius, "draws": args.n, "per_n": per_n,
            "decreasing": decreasing}, False, rows


def cmd_walk(args):
    from .walk import parent_drift_rule, reversibility_test, stationarity_test
    s = build_sampler(args)
    rule = parent_drift_rule(args.drift) if args.drift is not None else None
    st = stationarity_test(s, args.ball_radius, args.steps, args.n, args.seed,
                           args.permutations, rule)
    rv = reversibility_test(s, args.ball_radius, args.n, args.seed, args.permutations, rule)
    rejected = min(st["p_value"], rv["p_value"]) < args.level
    return {"sampler": s.descriptor(), "stationarity": st, "reversibility": rv,
            "level": args.level, "rejected": rejected}, rejected, None


def cmd_speed(args):
    from .walk import speed_estimate, tree_speed_formula
    s = build_sampler(args)
    rep = speed_estimate(s, args.steps, args.trials, args.seed, args.workers)
    rep["sampler"] = s.descriptor()
    if args.sampler == "ugw":
        p = _offspring(args)
        # the formula needs infinite trees: no leaves, so a point mass at k >= 1
        if p.min_k == p.max_k >= 1:
            rep["tree_formula"] = tree_speed_formula(p.ugw_mean_degree())
    return rep, False, None


def cmd_heat(args):
    from .walk import WeightedOperator, heat_kernel, mean_return_probability
    g = parse_graph(args.graph)
    w = WeightedOperator(g)
    ts = _floats(args.t, "--t")
    rows = [["t", "mean_return", "root_return"]]
    out = []
    tr = mean_return_probability(w, ts)
    for t, mr in zip(ts, tr):
        P = heat_kernel(w, t)
        out.append({"t": t, "mean_return": float(mr), "root_return": float(P[0, 0])})
        rows.append([repr(t), repr(float(mr)), repr(float(P[0, 0]))])
    return {"graph": args.graph, "n": g.n, "points": out}, False, rows


def cmd_return_compare(args):
    from .walk import return_comparison
    g = parse_graph(args.graph)
    gen = rng.stream(args.seed, 0, rng.STRUCTURE)
    c1 = gen.uniform(0.1, 1.0, size=g.m)
    c2 = c1 + gen.uniform(0.0, 1.0, size=g.m)
    rep = return_comparison(g, c1, c2, _floats(args.t, "--t"))
    rows = [["t", "trace1", "trace2"]] + [[repr(t), repr(a), repr(b)] for t, a, b in
                                          zip(rep["t"], rep["trace1"], rep["trace2"])]
    return rep, not rep["holds"], rows


def cmd_ust(args):
    from .forest import ust_degree_stats
    g = parse_graph(args.graph)
    rep = ust_degree_stats([g], args.n, args.seed, edge_check=True)[0]
    check = rep.pop("edge_check")
    rep["edge_check"] = {k: v for k, v in check.items() if k not in ("frequencies", "oracle")}
    rejected = abs(rep["z"]) > 3 or not check["ok"]
    rows = [["edge", "frequency", "oracle"]] + [
        [e, repr(f), repr(o)] for e, (f, o) in enumerate(zip(check["frequencies"],
                                                             check["oracle"]))]
    return rep, rejected, rows


def cmd_msf(args):
    from .forest import msf_degree_stats
    s = build_sampler(args)
    R = args.R if args.R is not None else (args.radius - 1)
    rep = msf_degree_stats(s, R, args.n, args.seed)
    rep["sampler"] = s.descriptor()
    return rep, False, None


def cmd_perc(args):
    from .perc import pc_estimate
    s = build_sampler(args)
    grid = _floats(args.p_grid, "--p-grid") if args.p_grid else None
    R = args.R if args.R is not None else args.radius
    curve = pc_estimate(s, R, grid, args.n, args.seed, args.level_crossing, args.workers)
    out = curve.as_dict()
    out["sampler"] = s.descriptor()
    rows = list(csv.reader(io.StringIO(curve.to_csv())))
    return out, False, rows


def cmd_iso(args):
    g = parse_graph(args.graph)
    gen = rng.stream(args.seed, 0, rng.LABELS)
    is_open = (gen.random(g.m) < args.q).tolist()
    # give each edge a private mark so the open set can be read back by mark
    marked = core.Network(g.vertex_marks, tuple(
        (u, v, (e,), (e,)) for e, (u, v, _, _) in enumerate(g.edges)))
    rep = isoperimetry_report(marked, lambda mu, mv: is_open[mu[0]])
    out = rep.as_dict()
    out["open_edges"] = [e for e, o in enumerate(is_open) if o]
    return out, False, None


COMMANDS = {"sample": cmd_sample, "mtp-test": cmd_mtp_test, "converge": cmd_converge,
            "walk": cmd_walk, "speed": cmd_speed, "heat": cmd_heat,
            "return-compare": cmd_return_compare, "ust": cmd_ust, "msf": cmd_msf,
            "perc": cmd_perc, "iso": cmd_iso}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="PRNG seed (falls back to $UMTP_SEED, then 0)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    samp = _Parser(add_help=False)
    samp.add_argument("--sampler", choices=SAMPLERS, default="ugw")
    samp.add_argument("--p", default=None, help='offspring law, e.g. "0:0.2,1:0.3,2:0.5"')
    samp.add_argument("--radius", type=int, default=8, help="sampler truncation radius")
    samp.add_argument("--graph", default=None,
                      help="path:N, cycle:N, star:N, complete:N, random:N:EXTRA:SEED or JSON file")

    parser = _Parser(prog="umtp", description="Unimodular random network experiments.")
    parser.add_argument("--version", action="version", version=f"umtp {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("sample", parents=[common, samp])
    p.add_argument("--n", type=int, default=10)

    p = sub.add_parser("mtp-test", parents=[common, samp])
    p.add_argument("--transport", choices=("uphill", "unit", "parent", "hashed"),
                   default="uphill")
    p.add_argument("--salt", default="umtp")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--permutations", type=int, default=10_000)
    p.add_argument("--level", type=float, default=0.01)

    p = sub.add_parser("converge", parents=[common])
    p.add_argument("--p", default="0:0.2,1:0.3,2:0.5")
    p.add_argument("--sizes", default="100,1000,10000")
    p.add_argument("--ball-radius", type=int, default=1)
    p.add_argument("--n", type=int, default=10_000)

    p = sub.add_parser("walk", parents=[common, samp])
    p.add_argument("--steps", type=int, default=3)
    p.add_argument("--ball-radius", type=int, default=2)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--permutations", type=int, default=10_000)
    p.add_argument("--level", type=float, default=0.01)
    p.add_argument("--drift", type=float, default=None,
                   help="probability of stepping to the parent (non-reversible control)")

    p = sub.add_parser("speed", parents=[common, samp])
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--trials", type=int, default=1000)

    for name in ("heat", "return-compare"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--graph", default="cycle:10")
        p.add_argument("--t", default="0.1,1,10")

    p = sub.add_parser("ust", parents=[common])
    p.add_argument("--graph", default="random:50:30:1")
    p.add_argument("--n", type=int, default=10_000)

    p = sub.add_parser("msf", parents=[common, samp])
    p.add_argument("--R", type=int, default=None, help="wired radius (default radius - 1)")
    p.add_argument("--n", type=int, default=1000)

    p = sub.add_parser("perc", parents=[common, samp])
    p.add_argument("--R", type=int, default=None, help="survival radius (default radius)")
    p.add_argument("--p-grid", default=None)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--level-crossing", type=float, default=0.5)

    p = sub.add_parser("iso", parents=[common])
    p.add_argument("--graph", default="random:20:10:1")
    p.add_argument("--q", type=float, default=0.5, help="probability an edge is open")
    return parser


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, Fraction)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, float) and not np.isfinite(x):
        return None
    return x


def render(args, result, rows):
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "workers")}
    header = {"command": args.command, "config": config, "version": __version__,
              "prng": rng.PRNG_NAME}
    if args.format == "csv":
        if rows is None:
            raise ValueError(f"--format: {args.command} has no CSV output")
        buf = io.StringIO()
        buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
        csv.writer(buf, lineterminator="\n").writerows(rows)
        return buf.getvalue()
    return json.dumps(_jsonable({**header, "result": result}), sort_keys=True, indent=2) + "\n"


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_ERROR
        if args.seed is None:
            env = os.environ.get("UMTP_SEED")
            try:
                args.seed = int(env) if env is not None else 0
            except ValueError:
                raise ValueError("UMTP_SEED must be an integer") from None
        result, rejected, rows = COMMANDS[args.command](args)
        text = render(args, result, rows)
    except UsageError as exc:
        print(f"umtp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"umtp: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_REJECTED if rejected else EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()

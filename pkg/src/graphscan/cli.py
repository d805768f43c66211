"""Command-line interface.

Subcommands: generate, estimate, sweep, game, bound, crawler.  Every run
writes a manifest (resolved config, seeds, package versions) next to its
outputs.  Outputs are CSV/JSON only; plotting is left to external tools.

Exit codes: 0 success, 2 usage, 3 unreadable/malformed input, 4 invalid
values, 5 neighborhood-family construction failure, 6 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FamilyError, GraphFormatError, ValidationError
from .graph import (GroundTruth, load_attributes_csv, load_edge_list, load_gml,
                    set_observations, write_attributes_csv, write_edge_list)
from .neighborhoods import build_family
from .estimators import scan_sublevel, scan_superlevel, crawler_estimates
from .bounds import BoundInputs, check_assumption1, family_summaries, selection_bound
from .simulation import (AdversaryStrategy, ExperimentConfig, NoiseModel,
                         TwoSubgraphSpec, apply_noise, generate_two_subgraph,
                         run_monte_carlo)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_FAMILY = 5
EXIT_NUMERIC = 6


def _write_manifest(out_dir: Path, args: argparse.Namespace) -> None:
    import numba
    manifest = {
        "command": sys.argv[1:] if sys.argv[1:] else [],
        "resolved": {k: v for k, v in vars(args).items() if k != "func"},
        "versions": {
            "graphscan": __version__,
            "numpy": np.__version__,
            "numba": numba.__version__,
        },
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _parse_noise(spec: str, seed: int) -> NoiseModel:
    try:
        kind, _, param = spec.partition(":")
        if kind == "gaussian":
            return NoiseModel(kind="gaussian", sigma=float(param or 1.0), seed=seed)
        if kind == "uniform":
            return NoiseModel(kind="uniform_bounded", bound=float(param or 1.0), seed=seed)
    except ValueError as exc:
        raise ValidationError(f"bad noise spec {spec!r}: {exc}") from exc
    raise ValidationError(f"unknown noise spec {spec!r} (use gaussian:SIGMA or uniform:M)")


def _load_graph(args):
    if getattr(args, "gml", None):
        g, values = load_gml(args.gml)
        return g, values
    if getattr(args, "graph", None):
        return load_edge_list(args.graph), None
    raise ValidationError("one of --graph or --gml is required")


def _observations(args, g, values):
    """Attach observations: explicit CSV, or synthesized from GML labels."""
    if getattr(args, "attrs", None):
        return load_attributes_csv(args.attrs, g)
    if getattr(args, "noise", None):
        if values is None:
            raise ValidationError("synthetic --noise requires --gml label values")
        active = values != 0
        A = np.full(g.n, args.a)
        A[active] = args.active_level
        truth = GroundTruth(a=args.a, b=args.active_level, A=A, active=active)
        return apply_noise(truth, _parse_noise(args.noise, args.seed))
    raise ValidationError("one of --attrs or --noise is required")


def _load_truth_csv(path, g) -> GroundTruth:
    import csv
    A = np.full(g.n, np.nan)
    active = np.zeros(g.n, dtype=np.bool_)
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:3]] != ["vertex", "A", "active"]:
                raise GraphFormatError(f"{path}: expected header 'vertex,A,active'")
            for row in reader:
                if not row:
                    continue
                lab = row[0].strip()
                if lab not in g.label_map:
                    raise GraphFormatError(f"{path}: unknown vertex label {lab!r}")
                i = g.label_map[lab]
                A[i] = float(row[1])
                active[i] = row[2].strip() in ("1", "true", "True")
    except OSError as exc:
        raise GraphFormatError(f"cannot read truth CSV {path}: {exc}") from exc
    if np.isnan(A).any():
        raise GraphFormatError(f"{path}: missing activity rows")
    inactive_levels = set(A[~active].tolist())
    if len(inactive_levels) != 1:
        raise ValidationError("truth CSV: inactive vertices must share one baseline")
    a = inactive_levels.pop()
    b = float(A[active].min()) if active.any() else a + 1.0
    return GroundTruth(a=a, b=b, A=A, active=active)


def cmd_generate(args) -> int:
    spec = TwoSubgraphSpec(n_big=args.n_big, n_small=args.n_small,
                           out_degree=args.degree, bridges=args.bridges,
                           seed=args.seed, a=args.a, active_level=args.active_level)
    g, truth = generate_two_subgraph(spec)
    x = apply_noise(truth, _parse_noise(args.noise, args.seed))
    out = Path(args.out)
    _write_manifest(out, args)
    write_edge_list(g, out / "edges.txt")
    write_attributes_csv(g, x, out / "attrs.csv")
    inv = g.labels()
    with open(out / "truth.csv", "w", encoding="utf-8") as fh:
        fh.write("vertex,A,active\n")
        for i in range(g.n):
            fh.write(f"{inv[i]},{float(truth.A[i])!r},{int(truth.active[i])}\n")
    print(f"wrote graph n={g.n} edges={g.num_edges} to {out}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    g, values = _load_graph(args)
    if args.k > g.n:
        raise ValidationError(f"k={args.k} exceeds vertex count n={g.n}")
    g = set_observations(g, _observations(args, g, values))
    family = build_family(g, args.k, workers=args.workers)
    scan_fn = scan_sublevel if args.mode == "sub" else scan_superlevel
    scan = scan_fn(g, family, workers=args.workers)
    out = Path(args.out)
    _write_manifest(out, args)
    scan.save_json(out / "scan.json")
    if args.dump_averages:
        scan.dump_averages_csv(out / "averages.csv")
    print(json.dumps(scan.to_json_dict()))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.k:
        raise ValidationError("sweep needs at least one --k value")
    config = ExperimentConfig(
        spec=TwoSubgraphSpec(n_big=args.n_big, n_small=args.n_small,
                             out_degree=args.degree, bridges=args.bridges,
                             a=args.a, active_level=args.active_level),
        noise=_parse_noise(args.noise, 0),
        k_values=tuple(args.k),
        seeds=tuple(range(args.seeds)),
        adversary=AdversaryStrategy(kind="none"),
        workers=args.workers,
    )
    summaries = run_monte_carlo(config)
    out = Path(args.out)
    _write_manifest(out, args)
    report = {}
    for k, s in summaries.items():
        with open(out / f"estimates_k{k}.csv", "w", encoding="utf-8") as fh:
            fh.write("seed,estimate\n")
            for seed, est in zip(config.seeds, s.estimates):
                fh.write(f"{seed},{est!r}\n")
        report[str(k)] = s.to_json_dict()
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(json.dumps({k: {"mean": v["mean"], "variance": v["variance"]}
                      for k, v in report.items()}))
    return EXIT_OK


def cmd_game(args) -> int:
    config = ExperimentConfig(
        spec=TwoSubgraphSpec(n_big=args.n_big, n_small=args.n_small,
                             out_degree=args.degree, bridges=args.bridges,
                             a=args.a, active_level=args.active_level),
        noise=_parse_noise(args.noise, 0),
        k_values=(args.k,),
        seeds=tuple(range(args.seeds)),
        adversary=AdversaryStrategy(kind="multi_step",
                                    influence_value=args.influence,
                                    max_steps=args.max_steps),
        workers=args.workers,
    )
    summaries = run_monte_carlo(config)
    s = summaries[args.k]
    est = np.asarray(s.estimates)
    nw = [v for v in s.n_w]
    table = {
        "k": args.k,
        "N_w=0": nw.count(0), "N_w=1": nw.count(1), "N_w=2": nw.count(2),
        "N_w=3": nw.count(3), "N_w>=4": sum(1 for v in nw if v is None or v >= 4),
        "mean_a_hat": float(est.mean()),
        "max_a_hat": float(est.max()),
        "min_a_hat": float(est.min()),
        "std_a_hat": float(est.std(ddof=1)) if len(est) > 1 else 0.0,
    }
    out = Path(args.out)
    _write_manifest(out, args)
    with open(out / "games.csv", "w", encoding="utf-8") as fh:
        fh.write("seed,n_w,estimate\n")
        for seed, w, e in zip(config.seeds, nw, s.estimates):
            fh.write(f"{seed},{'' if w is None else w},{e!r}\n")
    with open(out / "table.json", "w", encoding="utf-8") as fh:
        json.dump(table, fh, indent=2)
        fh.write("\n")
    print(json.dumps(table))
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.M is None:
        raise ValidationError(
            "selection bound requires --M: the noise must be almost surely bounded")
    g, _ = _load_graph(args)
    truth = _load_truth_csv(args.truth, g)
    family = build_family(g, args.k, workers=args.workers)
    ok, witness = check_assumption1(g, truth, args.k)
    if not ok:
        raise FamilyError("no inactive vertex with an all-inactive full k-neighborhood")
    k0 = family.neighborhood(witness)
    terms = family_summaries(truth, family, k0.members)
    report = selection_bound(BoundInputs(a=truth.a, b=truth.b, sigma2=args.sigma2,
                                         M=args.M, k=args.k, terms=terms))
    out = Path(args.out)
    _write_manifest(out, args)
    payload = report.to_json_dict() | {"witness": witness, "n_terms": len(terms)}
    with open(out / "bound.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(json.dumps(payload))
    return EXIT_OK


def cmd_crawler(args) -> int:
    g, values = _load_graph(args)
    g = set_observations(g, _observations(args, g, values))
    family = build_family(g, args.k, workers=args.workers)
    scan = scan_sublevel(g, family, workers=args.workers)
    est = crawler_estimates(g, scan)
    out = Path(args.out)
    _write_manifest(out, args)
    est.dump_csv(out / "ecdf.csv")
    payload = {"sigma2_hat": est.sigma2_hat, "a_hat": scan.estimate,
               "k": args.k, "root": int(scan.selected.root)}
    with open(out / "crawler.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(json.dumps(payload))
    return EXIT_OK


def _add_graph_source(p):
    p.add_argument("--graph", help="edge-list file")
    p.add_argument("--gml", help="GML file (directed edges symmetrized)")


def _add_spec_flags(p):
    p.add_argument("--n-big", type=int, default=100_000)
    p.add_argument("--n-small", type=int, default=1_000)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--bridges", type=int, default=20)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--active-level", type=float, default=10.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphscan",
                                 description="k-NN graph scan estimators")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("generate", help="generate a two-subgraph benchmark instance")
    _add_spec_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", default="gaussian:1.0")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("estimate", help="run one scan on a graph")
    _add_graph_source(p)
    p.add_argument("--attrs", help="vertex,value CSV of observations")
    p.add_argument("--noise", help="synthesize observations from GML labels")
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--active-level", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--mode", choices=("sub", "super"), default="sub")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--dump-averages", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over k values")
    _add_spec_flags(p)
    p.add_argument("--noise", default="gaussian:1.0")
    p.add_argument("--k", type=int, action="append", default=[])
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("game", help="multi-step adversary game")
    _add_spec_flags(p)
    p.add_argument("--noise", default="gaussian:1.0")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--influence", type=float, default=1e6)
    p.add_argument("--max-steps", type=int, default=10)
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("bound", help="selection union bound report")
    _add_graph_source(p)
    p.add_argument("--truth", required=True, help="vertex,A,active CSV")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--M", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("crawler", help="crawler-noise ECDF and variance")
    _add_graph_source(p)
    p.add_argument("--attrs")
    p.add_argument("--noise")
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--active-level", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_crawler)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GraphFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FamilyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAMILY
    except FloatingPointError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

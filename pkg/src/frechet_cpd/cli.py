"""Command-line interface: ``frechet-cpd detect | simulate | curve``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

import numpy as np

from . import io as fio
from .cpd import DetectionConfig, binary_segmentation, statistic_curve
from .errors import InputError, NumericalError
from .frechet import incremental_segment_stats, sigma_hat_sq
from .graph import aggregate_edge_stream, parse_window
from .sbm import Scenario, generate_scenario
from .spd import DEFAULT_RELATIVE_FLOOR, log_laplacians

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("frechet_cpd")

_METHODS = {"brownian-mc": "brownian_mc", "bootstrap": "bootstrap", "permutation": "permutation"}


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _add_pipeline_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="edge list: timestamp,src,dst[,weight] with header; .gz ok")
    p.add_argument("--format", default="auto", choices=["auto", "csv", "tsv"])
    p.add_argument("--window", required=True, help="bucket width: integer, or duration such as 1d, 1w, 6h")
    p.add_argument(
        "--directed-policy", default="symmetrize", choices=["symmetrize", "reject", "undirected"]
    )
    p.add_argument("--weight-transform", default="identity", choices=["identity", "log1p"])
    p.add_argument("--epsilon", type=_positive_float, default=None, help="absolute eigenvalue floor")
    p.add_argument(
        "--relative-floor",
        type=_positive_float,
        default=DEFAULT_RELATIVE_FLOOR,
        help="floor = this * max(1, trace(L)/N) when --epsilon is not given",
    )
    p.add_argument("--log-cache", default=None, help="memory-map the log-Laplacian stack to this file")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--method", default="permutation", choices=sorted(_METHODS))
    p.add_argument("--replicates", type=int, default=1000)
    p.add_argument("--bootstrap-size", type=int, default=None)
    p.add_argument("--grid-size", type=int, default=1000)
    p.add_argument("--min-segment", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bonferroni", action="store_true")
    p.add_argument("--output", required=True)
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frechet-cpd",
        description="Change points in dynamic networks via Log-Euclidean Frechet statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    detect = sub.add_parser("detect", help="binary segmentation over the whole sequence")
    _add_pipeline_args(detect)
    detect.add_argument("--output-format", default="json", choices=["json", "csv"])
    detect.add_argument("--no-curves", action="store_true", help="omit per-segment curves from JSON")

    curve = sub.add_parser("curve", help="statistic curve of the full sequence, no segmentation")
    _add_pipeline_args(curve)

    sim = sub.add_parser("simulate", help="draw an SBM scenario and write it as an edge list")
    sim.add_argument("--config", required=True, help="scenario JSON")
    sim.add_argument("--output", required=True, help="edge-list CSV to write")
    sim.add_argument("--truth", default=None, help="ground-truth JSON (default: <output>.truth.json)")
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _detection_config(args) -> DetectionConfig:
    return DetectionConfig(
        alpha=args.alpha,
        c=args.c,
        quantile_method=_METHODS[args.method],
        replicates=args.replicates,
        bootstrap_size=args.bootstrap_size,
        grid_size=args.grid_size,
        min_segment=args.min_segment,
        seed=args.seed,
        bonferroni=args.bonferroni,
    )


def _load_logs(args):
    events = fio.read_edge_list(args.input, args.format)
    network = aggregate_edge_stream(
        events, args.window, directed_policy=args.directed_policy, weight_transform=args.weight_transform
    )
    log.info("aggregated %d events into %d snapshots over %d nodes", len(events), network.n, network.node_count)
    out = None
    if args.log_cache:
        shape = (network.n, network.node_count, network.node_count)
        out = np.lib.format.open_memmap(args.log_cache, mode="w+", dtype=np.float64, shape=shape)
    logs = log_laplacians(network, epsilon=args.epsilon, relative=args.relative_floor, out=out)
    origin = min(ev.timestamp for ev in events)
    return logs, origin


def _bucket_start(origin, window, index: int):
    width = parse_window(window)
    if isinstance(origin, datetime):
        return (origin + index * width).isoformat()
    return origin + index * width


def _eps_config(args) -> dict:
    return {"eps": args.epsilon, "eps_relative": args.relative_floor}


def cmd_detect(args) -> int:
    cfg = _detection_config(args)
    logs, origin = _load_logs(args)
    report = binary_segmentation(logs, cfg)
    doc = report.to_dict(extra_config=_eps_config(args))
    doc["time_axis"] = {
        "origin": origin.isoformat() if isinstance(origin, datetime) else origin,
        "window": args.window,
    }
    for cp in doc["change_points"]:
        cp["bucket_start"] = _bucket_start(origin, args.window, cp["index"])
    if args.output_format == "csv":
        fio.atomic_write_text(args.output, fio.report_curves_csv(doc))
    else:
        if args.no_curves:
            del doc["curves"]
        fio.atomic_write_text(args.output, fio.dumps_json(doc))
    if not report.change_points:
        print("no change points detected")
    for cp in doc["change_points"]:
        print(
            f"change point at index {cp['index']} (tau={cp['tau']:.4f}, bucket {cp['bucket_start']}): "
            f"stat={cp['stat']:.4g} > threshold={cp['threshold']:.4g} in segment [{cp['segment'][0]}, {cp['segment'][1]})"
        )
    return EXIT_OK


def cmd_curve(args) -> int:
    cfg = _detection_config(args)
    logs, _ = _load_logs(args)
    stats = incremental_segment_stats(logs)
    curve = statistic_curve(stats, sigma_hat_sq(logs), cfg.c)
    fio.atomic_write_text(args.output, fio.curve_csv(curve))
    print(f"sup nT = {curve.sup:.6g} at k = {curve.argmax_k} (u = {curve.argmax_k / curve.n:.4f})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    path = Path(args.config)
    if not path.exists():
        raise InputError(f"scenario config not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None
    scenario = Scenario.from_dict(raw)
    network, truth = generate_scenario(scenario, seed=args.seed)
    fio.atomic_write_text(args.output, fio.network_edges_csv(network))
    truth_path = args.truth or f"{args.output}.truth.json"
    seed = scenario.seed if args.seed is None else args.seed
    truth_doc = {
        "version": "1.0",
        "n": network.n,
        "node_count": network.node_count,
        "change_points": truth,
        "scenario": {**scenario.to_dict(), "seed": seed},
    }
    fio.atomic_write_text(truth_path, fio.dumps_json(truth_doc))
    print(f"wrote {network.n} snapshots to {args.output}; ground truth {truth} to {truth_path}")
    return EXIT_OK


_COMMANDS = {"detect": cmd_detect, "curve": cmd_curve, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

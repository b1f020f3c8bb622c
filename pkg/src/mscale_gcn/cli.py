"""``mscale-gcn`` command line.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import hier
from .data import DataError, load_cora
from .graph import GraphError
from .harness import (
    SWEEPS, ConfigError, ExperimentConfig, load_dataset, precompute_dendrogram,
    run_sweep,
)
from .numerics import NumericError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


def _int_list(text):
    return tuple(int(v) for v in text.split(","))


def _grid(text):
    vals = []
    for v in text.split(","):
        vals.append(float(v) if any(c in v for c in ".eE") else int(v))
    return tuple(vals)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mscale-gcn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--content", required=True, help="Cora-format .content file")
    data.add_argument("--cites", required=True, help="Cora-format .cites file")
    data.add_argument("--strict-cora", action="store_true",
                      help="require 1433 features and the seven Cora class names")

    cl = sub.add_parser("cluster", parents=[data], help="run Girvan-Newman once and save the dendrogram")
    cl.add_argument("--out", required=True)
    cl.add_argument("--policy", choices=[p.value for p in hier.SnapshotPolicy],
                    default=hier.SnapshotPolicy.EVERY_REMOVAL.value)

    run = sub.add_parser("run", parents=[data], help="run an experiment sweep")
    run.add_argument("--sweep", choices=SWEEPS, required=True)
    run.add_argument("--dendrogram", default="compute", help="dendrogram file, or 'compute'")
    run.add_argument("--out", required=True, help="results CSV")
    run.add_argument("--grid", type=_grid, help="comma-separated sweep values")
    run.add_argument("--scale-indices", type=_int_list, help="explicit snapshot indices, e.g. 0,200,400")
    run.add_argument("--n-scales", type=int, help="number of linearly spaced scales")
    run.add_argument("--depth", type=int)
    run.add_argument("--fc-hidden", type=int)
    run.add_argument("--conv-epochs", type=int)
    run.add_argument("--fc-epochs", type=int)
    run.add_argument("--fc-batch-size", type=int, help="training nodes per head update, 0 = full batch")
    run.add_argument("--lr", type=float)
    run.add_argument("--weight-decay", type=float)
    run.add_argument("--head", choices=("mlp", "literal"))
    run.add_argument("--no-output-relu", dest="output_relu", action="store_false", default=None,
                     help="skip the activation on the last conv layer")
    run.add_argument("--noise", type=float, help="noise level for non-noise sweeps")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--repeats", type=int, default=2)
    run.add_argument("--jobs", type=int, default=1, help="parallel per-scale trainings")
    run.add_argument("--feature-cap", type=int, help="keep only the first F features")
    run.add_argument("--row-normalize", action="store_true", default=None)
    run.add_argument("--train-per-class", type=int)
    run.add_argument("--test-size", type=int)
    return parser


def _cluster(args) -> int:
    if args.strict_cora:
        ds = load_cora(args.content, args.cites)
    else:
        ds = load_cora(args.content, args.cites, n_features=None, class_names=None)
    print(f"dataset {ds.n_nodes} nodes {ds.graph.n_edges} edges "
          f"({ds.citation_lines} citation lines, {ds.dropped_citations} dropped)")
    if ds.graph.n_edges <= 1:
        print("no usable snapshots: the graph needs at least two edges "
              "(the final, edgeless snapshot is never usable)", file=sys.stderr)
        return EXIT_DATA
    d = precompute_dendrogram(ds, args.out, hier.SnapshotPolicy(args.policy))
    print(f"usable snapshots {d.n_usable} (policy {d.policy.value}) -> {args.out}")
    return EXIT_OK


def _run(args) -> int:
    overrides = dict(
        content=args.content, cites=args.cites, dendrogram=args.dendrogram,
        grid=args.grid, scale_indices=args.scale_indices, n_scales=args.n_scales,
        depth=args.depth, fc_hidden=args.fc_hidden, conv_epochs=args.conv_epochs,
        fc_epochs=args.fc_epochs, fc_batch_size=args.fc_batch_size, lr=args.lr,
        weight_decay=args.weight_decay, head=args.head,
        output_relu=args.output_relu, noise=args.noise, seed=args.seed, repeats=args.repeats,
        jobs=args.jobs, feature_cap=args.feature_cap, row_normalize=args.row_normalize,
        train_per_class=args.train_per_class, test_size=args.test_size,
        strict_cora=args.strict_cora,
    )
    cfg = ExperimentConfig.for_sweep(args.sweep, **overrides)
    ds = load_dataset(cfg)
    print(f"dataset {ds.summary_line()}")
    records = run_sweep(cfg, args.out, ds=ds)
    for rec in records:
        print(f"{cfg.sweep} {rec.sweep_value}: mean {rec.mean:.4f} std {rec.std:.4f}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _cluster(args) if args.command == "cluster" else _run(args)
    except (ConfigError, hier.ScaleRangeError, ValueError) as exc:
        # DataError / GraphError subclass ValueError; check them first
        if isinstance(exc, (DataError, GraphError)):
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, EOFError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, ArithmeticError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

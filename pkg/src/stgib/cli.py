"""Experiment command line: data generation, training, evaluation, explanation.

Every command is reproducible from its echoed configuration and seed, and
emits plain structured text (CSV / JSON / line-delimited records) for
external plotting. Exit codes: 0 success, 2 configuration error,
3 numeric failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import (
    ExperimentConfig,
    build_datasets,
    dump_config,
    load_config,
    planted_edges_for,
)
from .data import corrupt_missing, load_values, save_values, split_series, window_dataset
from .errors import CheckpointError, ConfigError, NumericalError
from .explain import (
    edge_recovery_auc,
    extract_explanation,
    fidelity_plus,
    random_explanation,
    sparsity_plus,
)
from .model import STGIBModel
from .synthetic import SyntheticSpec, generate_synthetic, random_planted_edges, write_ground_truth
from .training import evaluate, train
from .types import AblationFlags, Scaler

OUT_ROOT_ENV = "STGIB_OUT_ROOT"


def _out_root() -> Path:
    return Path(os.environ.get(OUT_ROOT_ENV, "runs"))


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


# ----------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    if args.edges:
        planted = tuple(tuple(int(x) for x in pair.split("-")) for pair in args.edges.split(","))
    elif args.num_edges > 0:
        planted = random_planted_edges(args.num_nodes, args.num_edges, args.seed)
    else:
        raise ConfigError("planted edge set is empty: pass --num-edges > 0 or --edges")
    spec = SyntheticSpec(
        num_nodes=args.num_nodes,
        total_steps=args.num_steps,
        planted_edges=planted,
        noise_std=args.noise_std,
        seed=args.seed,
        period=args.period,
    )
    values, _ = generate_synthetic(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_values(out / "values.npy", values)
    write_ground_truth(out / "ground_truth.json", spec)
    print(
        f"synthetic series: {args.num_steps} steps x {args.num_nodes} nodes, "
        f"{len(planted)} planted edges, noise_std={args.noise_std} -> {out}"
    )
    return 0


# ----------------------------------------------------------------------
# train


def _apply_ablations(config: ExperimentConfig, ablations) -> ExperimentConfig:
    if not ablations:
        return config
    flags = config.model.ablation
    for item in ablations:
        if item == "no_spatial_ib":
            flags = dataclasses.replace(flags, no_spatial_ib=True)
        elif item == "no_temporal_ib":
            flags = dataclasses.replace(flags, no_temporal_ib=True)
        elif item.startswith("random_drop="):
            flags = dataclasses.replace(flags, random_drop_p=float(item.split("=", 1)[1]))
        else:
            raise ConfigError(
                f"unknown ablation {item!r}; expected no_spatial_ib, no_temporal_ib, "
                "or random_drop=<p>"
            )
    return dataclasses.replace(config, model=dataclasses.replace(config.model, ablation=flags))


def _run_dir(config: ExperimentConfig, args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if config.out_dir:
        return Path(config.out_dir)
    return _out_root() / Path(args.config).stem


def _fit(config: ExperimentConfig, run_dir: Path):
    datasets = build_datasets(config.dataset)
    window = datasets.train.windows[0]
    model = STGIBModel(
        dataclasses.replace(config.model, steps_per_day=config.dataset.steps_per_day)
        if config.dataset.task != "crime"
        else dataclasses.replace(config.model, steps_per_day=1),
        datasets.spatial_graph,
        l_in=window.num_input_steps,
        l_out=window.targets.shape[0],
        f_in=window.features.shape[2],
        f_out=window.targets.shape[2],
        seed=config.train.seed,
    )
    log_path = run_dir / "epochs.jsonl"
    model, reports = train(model, datasets, config.train)
    with open(log_path, "w") as fh:
        for report in reports:
            fh.write(json.dumps(dataclasses.asdict(report)) + "\n")
    best_epoch = min(reports, key=lambda r: r.val_mae).epoch if reports else -1
    return model, datasets, reports, best_epoch


def cmd_train(args) -> int:
    config = _apply_ablations(load_config(args.config), args.ablation)
    if args.seed is not None:
        config = dataclasses.replace(
            config, train=dataclasses.replace(config.train, seed=args.seed)
        )
    run_dir = _run_dir(config, args)
    run_dir.mkdir(parents=True, exist_ok=True)
    dump_config(config, run_dir / "config.yaml")
    model, datasets, reports, best_epoch = _fit(config, run_dir)
    model.save(run_dir / "final.ckpt")
    # re-labelled copy so downstream commands have a stable best checkpoint name
    model.save(run_dir / "best.ckpt")
    last = reports[-1]
    print(
        f"trained {config.train.epochs} epochs; best val MAE at epoch {best_epoch}; "
        f"final val MAE={last.val_mae:.4f} RMSE={last.val_rmse:.4f} MAPE={last.val_mape:.2f}%"
    )
    print(f"run directory: {run_dir}")
    return 0


# ----------------------------------------------------------------------
# evaluate


def _load_run(checkpoint_path, config_path=None):
    checkpoint_path = Path(checkpoint_path)
    config_path = Path(config_path) if config_path else checkpoint_path.parent / "config.yaml"
    if not config_path.exists():
        raise ConfigError(f"no configuration found at {config_path}; pass --config")
    config = load_config(config_path)
    model = STGIBModel.load(checkpoint_path)
    return model, config


def cmd_evaluate(args) -> int:
    model, config = _load_run(args.checkpoint, args.config)
    datasets = build_datasets(config.dataset)
    windows = getattr(datasets, args.split).windows
    mae, rmse, mape = evaluate(model, windows)
    record = {"split": args.split, "mae": mae, "rmse": rmse, "mape": mape}
    out = Path(args.out) if args.out else Path(args.checkpoint).parent
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / f"metrics_{args.split}.json", record)
    print(f"{args.split}: MAE={mae:.4f} RMSE={rmse:.4f} MAPE={mape:.2f}%")
    return 0


# ----------------------------------------------------------------------
# explain


def cmd_explain(args) -> int:
    if (args.threshold is None) == (args.top_fraction is None):
        raise ConfigError("give exactly one of --threshold / --top-fraction")
    model, config = _load_run(args.checkpoint, args.config)
    datasets = build_datasets(config.dataset)
    windows = datasets.test.windows[: args.max_windows]
    probs_s, probs_t = model.edge_probabilities(windows)
    rng = np.random.default_rng(args.seed)
    rows = []
    summary = {}
    mean_probs = {}
    for kind, probs, support in (
        ("spatial", probs_s, model.spatial_support),
        ("temporal", probs_t, model.temporal_support),
    ):
        explanations = [
            extract_explanation(
                dict(zip(support.edges, row)), kind, args.threshold, args.top_fraction
            )
            for row in probs
        ]
        baselines = [
            random_explanation(ex.all_edges, len(ex.kept_edges), int(rng.integers(2**31)), kind)
            for ex in explanations
        ]
        sparsity = sparsity_plus(explanations)
        fidelity = fidelity_plus(model, windows, explanations)
        baseline_fidelity = fidelity_plus(model, windows, baselines)
        mean_probs[kind] = dict(zip(support.edges, probs.mean(axis=0)))
        auc = ""
        planted = planted_edges_for(config.dataset)
        if kind == "spatial" and planted is not None:
            auc = edge_recovery_auc(mean_probs[kind], planted)
            print(f"spatial edge-recovery AUC: {auc:.4f}")
        rows.append([kind, sparsity, fidelity, baseline_fidelity, auc])
        summary[kind] = {
            "sparsity": sparsity,
            "fidelity": fidelity,
            "baseline_fidelity": baseline_fidelity,
            "auc": auc if auc != "" else None,
            "windows": len(windows),
        }
        print(
            f"{kind}: sparsity={sparsity:.4f} fidelity={fidelity:.4f} "
            f"baseline_fidelity={baseline_fidelity:.4f}"
        )
    out = Path(args.out) if args.out else Path(args.checkpoint).parent
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "explain_report.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["graph_kind", "sparsity", "fidelity", "baseline_fidelity", "auc"])
        writer.writerows(rows)
    _write_json(out / "explain_summary.json", summary)
    if args.dump_probs:
        with open(out / "edge_probs.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["graph_kind", "v", "u", "prob"])
            for kind in ("spatial", "temporal"):
                for (v, u), p in sorted(mean_probs[kind].items()):
                    writer.writerow([kind, v, u, float(p)])
    return 0


# ----------------------------------------------------------------------
# robustness


def _corrupted_test_windows(config: ExperimentConfig, drop_prob: float, seed: int):
    """Test windows whose features come from a corrupted series; targets stay clean."""
    ds = config.dataset
    if ds.task != "synthetic" and ds.task != "traffic":
        raise ConfigError("robustness sweeps support traffic and synthetic tasks")
    values = load_values(ds.values)
    train_part, val_part, test_part = split_series(
        values, ds.ratios, min_split_length=ds.l_in + ds.l_out
    )
    scaler = Scaler.fit(train_part)
    corrupted = corrupt_missing(test_part, drop_prob, seed)
    offset = len(train_part) + len(val_part)
    return window_dataset(
        corrupted,
        ds.l_in,
        ds.l_out,
        scaler,
        steps_per_day=ds.steps_per_day,
        start_tod=(ds.start_tod + offset) % ds.steps_per_day,
        start_dow=(ds.start_dow + (ds.start_tod + offset) // ds.steps_per_day) % 7,
        target_values=test_part,
    )


def cmd_robustness(args) -> int:
    levels = [float(x) for x in args.drop_levels.split(",")]
    rows = []
    if args.checkpoint:
        model, config = _load_run(args.checkpoint, args.config)
        out = Path(args.out) if args.out else Path(args.checkpoint).parent
        for level in levels:
            windows = _corrupted_test_windows(config, level, args.seed)
            mae, rmse, mape = evaluate(model, windows)
            rows.append([level, mae, rmse, mape])
            print(f"drop={level:.2f}: MAE={mae:.4f} RMSE={rmse:.4f} MAPE={mape:.2f}%")
    else:
        if not args.config:
            raise ConfigError("pass --checkpoint (evaluate-only) or --config (retrain per level)")
        base = load_config(args.config)
        out = Path(args.out) if args.out else _run_dir(base, args)
        for level in levels:
            config = dataclasses.replace(
                base,
                dataset=dataclasses.replace(base.dataset, drop_prob=level, drop_seed=args.seed),
            )
            level_dir = out / f"drop_{level:g}"
            level_dir.mkdir(parents=True, exist_ok=True)
            dump_config(config, level_dir / "config.yaml")
            model, datasets, _, _ = _fit(config, level_dir)
            model.save(level_dir / "final.ckpt")
            mae, rmse, mape = evaluate(model, datasets.test.windows)
            rows.append([level, mae, rmse, mape])
            print(f"drop={level:.2f}: MAE={mae:.4f} RMSE={rmse:.4f} MAPE={mape:.2f}%")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "robustness.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["drop_level", "mae", "rmse", "mape"])
        writer.writerows(rows)
    return 0


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stgib", description="Spatio-temporal forecasting with distilled graph structure"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a planted-structure synthetic dataset")
    p.add_argument("--num-nodes", type=int, default=8)
    p.add_argument("--num-steps", type=int, default=2000)
    p.add_argument("--num-edges", type=int, default=12, help="planted edges drawn at random")
    p.add_argument("--edges", default="", help="explicit arcs, e.g. '0-1,1-2'")
    p.add_argument("--noise-std", type=float, default=0.1)
    p.add_argument("--period", type=int, default=288)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train from a configuration file")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="override train.seed")
    p.add_argument("--out", default=None, help="run directory")
    p.add_argument(
        "--ablation",
        action="append",
        default=[],
        help="no_spatial_ib | no_temporal_ib | random_drop=<p>; repeatable",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metrics of a checkpoint on one split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--split", choices=["train", "val", "test"], default="test")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("explain", help="extract explanations and score them")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--top-fraction", type=float, default=None)
    p.add_argument("--max-windows", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dump-probs", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("robustness", help="metrics across data-missing levels")
    p.add_argument("--checkpoint", default=None, help="evaluate-only sweep")
    p.add_argument("--config", default=None, help="retrain per level")
    p.add_argument("--drop-levels", default="0.1,0.3,0.5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_robustness)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (OSError, CheckpointError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

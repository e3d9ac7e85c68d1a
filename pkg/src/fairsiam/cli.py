"""Command-line front end.

Subcommands: prepare (clean/normalize/split), train (baseline, sf, sf3),
evaluate (per-seed reports + mean+-std aggregate), tradeoff (plot-ready
ACC/FTA points), synth-ctrip (synthetic service-log generator). Every
command is deterministic given its full argument vector; outputs land under
a run directory with a manifest recording the resolved configuration.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import synth
from .augment import AugmentationStrategy, no_augmentation
from .data import load_dataset, load_prepared, normalize, split, write_prepared
from .errors import ConfigError, DataError, NumericError, SchemaError
from .estimators import _DEFAULT_LOSS, _DEFAULT_OPTIMIZER
from .metrics import (
    CSV_HEADER,
    METRIC_KEYS,
    GroupSpec,
    build_report,
    config_fingerprint,
    read_reports_csv,
    write_reports_csv,
)
from .models import architecture, init_model, load_model, save_model
from .schema import load_schema, save_schema
from .siamese import (
    FairnessSpec,
    TrainConfig,
    expected_outputs,
    train_baseline,
    train_siamese,
    write_trace,
)

METHODS = ("baseline", "sf", "sf3")


def _parse_seeds(text):
    try:
        seeds = [int(s) for s in str(text).split(",") if s.strip() != ""]
    except ValueError:
        raise ConfigError(f"cannot parse seed list {text!r}")
    if not seeds or len(set(seeds)) != len(seeds):
        raise ConfigError("seeds must be a non-empty list of distinct integers")
    return seeds


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return cfg


def _resolve(args, cfg, key, default):
    """Flag beats config file beats built-in default."""
    val = getattr(args, key.replace("-", "_"))
    if val is not None:
        return val
    return cfg.get(key, default)


# ---------------------------------------------------------------------------
# prepare


def cmd_prepare(args):
    schema = load_schema(args.schema)
    raw = load_dataset(args.input, schema)
    train, test = split(raw, args.test_fraction, args.seed)
    train_norm, scaler = normalize(train)
    test_norm, _ = normalize(test, scaler)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_prepared(train_norm, outdir / "train.csv")
    write_prepared(test_norm, outdir / "test.csv")
    with open(outdir / "scaler.json", "w") as fh:
        json.dump(scaler.to_dict(), fh, indent=2, sort_keys=True)
    manifest = {
        "command": "prepare", "input": str(args.input), "schema": str(args.schema),
        "test_fraction": args.test_fraction, "seed": args.seed,
        "n_train": len(train_norm), "n_test": len(test_norm),
    }
    manifest["fingerprint"] = config_fingerprint(manifest)
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    print(f"prepared {len(train_norm)} train / {len(test_norm)} test rows -> {outdir}")
    return 0


# ---------------------------------------------------------------------------
# train


def _strategy_for(method, cap, strategy_seed, override=None):
    if override == "none":
        return no_augmentation()
    if override is not None:
        return AugmentationStrategy(mode=override, cap=cap, seed=strategy_seed)
    if method == "baseline":
        return None
    mode = "full" if method == "sf" else "extremes"
    return AugmentationStrategy(mode=mode, cap=cap, seed=strategy_seed)


def cmd_train(args):
    cfg = _load_config_file(args.config)
    schema = load_schema(args.schema)
    train_ds = load_prepared(args.train, schema)

    method = _resolve(args, cfg, "method", "sf")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    arch_name = _resolve(args, cfg, "arch", "fcnn3")
    arch = architecture(arch_name)
    loss = _resolve(args, cfg, "loss", _DEFAULT_LOSS[arch.family])
    optimizer = _resolve(args, cfg, "optimizer", _DEFAULT_OPTIMIZER[arch.family])
    lr = float(_resolve(args, cfg, "lr", 1e-3))
    epochs = int(_resolve(args, cfg, "epochs", 100))
    k_lip = float(_resolve(args, cfg, "k-lipschitz", 1.0))
    cap = _resolve(args, cfg, "cap", None)
    cap = int(cap) if cap is not None else None
    tol = float(_resolve(args, cfg, "tol", 1e-6))
    multiplier_init = float(_resolve(args, cfg, "multiplier-init", 0.0))
    ascent_lr = _resolve(args, cfg, "ascent-lr", None)
    ascent_lr = float(ascent_lr) if ascent_lr is not None else None
    augment_override = _resolve(args, cfg, "augment", None)
    seeds = _parse_seeds(_resolve(args, cfg, "seeds", "0"))

    outdir = Path(args.outdir)
    ckpt_dir = outdir / "checkpoints"
    trace_dir = outdir / "traces"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    trace_dir.mkdir(parents=True, exist_ok=True)

    resolved = {
        "command": "train", "schema": str(args.schema), "train": str(args.train),
        "method": method, "arch": arch_name, "loss": loss, "optimizer": optimizer,
        "lr": lr, "epochs": epochs, "k_lipschitz": k_lip, "cap": cap, "tol": tol,
        "multiplier_init": multiplier_init, "ascent_lr": ascent_lr,
        "augment_override": augment_override, "seeds": seeds,
    }
    fingerprint = config_fingerprint(resolved)

    checkpoints = []
    n_out = expected_outputs(arch.family, schema.label_arity)
    for seed in seeds:
        config = TrainConfig(
            epochs=epochs, learning_rate=lr, optimizer=optimizer, loss=loss,
            fairness=FairnessSpec(lipschitz=k_lip),
            strategy=(_strategy_for(method, cap, seed, augment_override)
                      or AugmentationStrategy()),
            seed=seed, multiplier_init=multiplier_init,
            ascent_rate=ascent_lr, tol=tol)
        model0 = init_model(arch, schema.n_features, n_out, seed=seed)
        if method == "baseline":
            result = train_baseline(train_ds, model0, config)
        else:
            result = train_siamese(train_ds, model0, config)
        ckpt = ckpt_dir / f"{method}_{arch_name}_seed{seed}.ckpt"
        save_model(result.params, ckpt)
        write_trace(result.trace, trace_dir / f"{method}_{arch_name}_seed{seed}.jsonl")
        checkpoints.append({"method": method, "arch": arch_name, "seed": seed,
                            "path": str(ckpt)})
        last = result.trace[-1]
        print(f"{method} {arch_name} seed={seed}: epochs={last.epoch} "
              f"mean_laf={last.mean_laf:.4f} violation_rate={last.violation_rate:.3f}")

    manifest = {"config": resolved, "fingerprint": fingerprint,
                "checkpoints": checkpoints}
    manifest_path = outdir / "manifest.json"
    existing = []
    if manifest_path.exists():
        with open(manifest_path) as fh:
            prev = json.load(fh)
        existing = prev.get("runs", [])
    with open(manifest_path, "w") as fh:
        json.dump({"runs": existing + [manifest]}, fh, indent=2, sort_keys=True)
    return 0


# ---------------------------------------------------------------------------
# evaluate


def _checkpoint_entries(args):
    entries = []
    if args.rundir:
        manifest_path = Path(args.rundir) / "manifest.json"
        if not manifest_path.exists():
            raise DataError(f"no manifest.json under {args.rundir}")
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        for run in manifest.get("runs", []):
            entries.extend(run.get("checkpoints", []))
    for path in args.checkpoints or []:
        stem = Path(path).stem
        parts = stem.split("_seed")
        method = parts[0].split("_")[0] if parts else "model"
        seed = int(parts[1]) if len(parts) == 2 and parts[1].isdigit() else 0
        entries.append({"method": method, "arch": "", "seed": seed, "path": path})
    if not entries:
        raise ConfigError("evaluate needs --rundir or --checkpoints")
    return entries


def _aggregate(reports):
    """Per-method mean/std of every metric plus pooled confusion counts."""
    by_method = {}
    for rep in reports:
        by_method.setdefault(rep.method, []).append(rep)
    table = {}
    for method, reps in sorted(by_method.items()):
        stats = {}
        for key in METRIC_KEYS:
            vals = np.array([r.metrics[key] for r in reps])
            stats[key] = (float(vals.mean()), float(vals.std()))
        pooled = {
            "n_true_fair": sum(r.counts.n_true_fair for r in reps),
            "n_true_biased": sum(r.counts.n_true_biased for r in reps),
            "n_false_fair": sum(r.counts.n_false_fair for r in reps),
            "n_false_biased": sum(r.counts.n_false_biased for r in reps),
        }
        pooled["n_total"] = sum(pooled.values())
        # identities re-asserted on pooled counts (exact) and mean rates
        n = pooled["n_total"]
        assert (pooled["n_true_fair"] + pooled["n_true_biased"]
                + pooled["n_false_fair"] + pooled["n_false_biased"]) == n
        assert abs(stats["acc"][0] - (stats["tfr"][0] + stats["tbr"][0])) <= 1e-9
        assert abs(stats["fta"][0] - (stats["tfr"][0] + stats["ffr"][0])) <= 1e-9
        table[method] = {"stats": stats, "pooled_counts": pooled,
                         "n_seeds": len(reps)}
    return table


def _write_aggregate(table, outdir):
    with open(outdir / "aggregate.csv", "w") as fh:
        fh.write("method,metric,mean,std\n")
        for method, agg in table.items():
            for key in METRIC_KEYS:
                mean, std = agg["stats"][key]
                fh.write(f"{method},{key},{mean!r},{std!r}\n")
    methods = list(table)
    lines = ["metric".ljust(12) + "".join(m.ljust(18) for m in methods)]
    for key in METRIC_KEYS:
        cells = []
        for m in methods:
            mean, std = table[m]["stats"][key]
            cells.append(f"{mean:.3f}±{std:.3f}".ljust(18))
        lines.append(key.ljust(12) + "".join(cells))
    text = "\n".join(lines) + "\n"
    with open(outdir / "aggregate.txt", "w") as fh:
        fh.write(text)
    return text


def cmd_evaluate(args):
    schema = load_schema(args.schema)
    test_ds = load_prepared(args.test, schema)
    entries = _checkpoint_entries(args)
    group = GroupSpec(column=args.group_column,
                      privileged=_coerce_privileged(schema, args),
                      positive_label=args.positive).validate(schema)
    spec = FairnessSpec(lipschitz=args.k_lipschitz)
    strategy = AugmentationStrategy(mode=args.augment, cap=args.cap, seed=0)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    eval_cfg = {"command": "evaluate", "test": str(args.test),
                "group_column": args.group_column, "privileged": str(args.privileged),
                "positive": args.positive, "k_lipschitz": args.k_lipschitz,
                "augment": args.augment, "cap": args.cap, "neighbors": args.neighbors}
    fingerprint = config_fingerprint(eval_cfg)

    reports = []
    for entry in entries:
        model = load_model(entry["path"])
        if model.input_dim != schema.n_features:
            raise SchemaError(
                f"checkpoint {entry['path']} expects {model.input_dim} features, "
                f"schema declares {schema.n_features}")
        rep = build_report(
            test_ds, model, group, spec, strategy, k_neighbors=args.neighbors,
            dataset=Path(args.test).name, model_name=entry.get("arch", ""),
            method=entry["method"], seed=entry["seed"], fingerprint=fingerprint)
        reports.append(rep)
        with open(outdir / f"report_{entry['method']}_seed{entry['seed']}.txt", "w") as fh:
            fh.write(rep.to_kv_text())
    write_reports_csv(reports, outdir / "reports.csv")
    text = _write_aggregate(_aggregate(reports), outdir)
    print(text, end="")
    return 0


def _coerce_privileged(schema, args):
    col = schema.column(args.group_column)
    if col.kind == "numeric":
        try:
            return float(args.privileged)
        except ValueError:
            raise ConfigError(
                f"privileged value {args.privileged!r} is not numeric")
    return args.privileged


# ---------------------------------------------------------------------------
# tradeoff


def cmd_tradeoff(args):
    rows = []
    for path in args.reports:
        rows.extend(read_reports_csv(path))
    baseline = [r for r in rows if r["method"] == "baseline"]
    mitigated = [r for r in rows if r["method"] != "baseline"]
    if not baseline or not mitigated:
        raise ConfigError("tradeoff needs at least one baseline and one "
                          "mitigated report")
    bl_acc = float(np.mean([r["acc"] for r in baseline]))
    bl_fta = float(np.mean([r["fta"] for r in baseline]))
    with open(args.out, "w") as fh:
        fh.write("method,seed,acc,fta,flag\n")
        fh.write(f"baseline_mean,,{bl_acc!r},{bl_fta!r},marker\n")
        for r in rows:
            flag = ""
            if r["method"] != "baseline" and r["acc"] > bl_acc and r["fta"] > bl_fta:
                flag = "dominates-baseline"
            fh.write(f"{r['method']},{r['seed']},{r['acc']!r},{r['fta']!r},{flag}\n")
    print(f"wrote {len(rows) + 1} points -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# synth-ctrip


def cmd_synth_ctrip(args):
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    schema = synth.write_ctrip(outdir / "ctrip.csv", args.n, args.seed,
                               noise=args.noise)
    save_schema(schema, outdir / "ctrip_schema.yaml")
    print(f"wrote {args.n} rows -> {outdir / 'ctrip.csv'}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fairsiam",
        description="Siamese fairness training and accurate-fairness auditing")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="clean, normalize, and split a raw table")
    p.add_argument("--schema", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train baseline/sf/sf3 models over seeds")
    p.add_argument("--schema", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--config", help="YAML defaults, overridden by flags")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--arch", choices=("lr", "svm", "fcnn3", "fcnn5"))
    p.add_argument("--loss", choices=("mse", "hinge"))
    p.add_argument("--optimizer", choices=("sgd", "adam"))
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--k-lipschitz", type=float)
    p.add_argument("--cap", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--multiplier-init", type=float)
    p.add_argument("--ascent-lr", type=float)
    p.add_argument("--augment", choices=("full", "extremes", "none"),
                   help="override the method's augmentation mode")
    p.add_argument("--seeds", help="comma-separated list, e.g. 1,2,3")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="metric reports + mean/std aggregate")
    p.add_argument("--schema", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--rundir", help="training output directory (reads manifest)")
    p.add_argument("--checkpoints", nargs="*")
    p.add_argument("--outdir", required=True)
    p.add_argument("--group-column", required=True)
    p.add_argument("--privileged", required=True)
    p.add_argument("--positive", type=int, default=1)
    p.add_argument("--k-lipschitz", type=float, default=1.0)
    p.add_argument("--augment", choices=("full", "extremes"), default="full")
    p.add_argument("--cap", type=int)
    p.add_argument("--neighbors", type=int, default=5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("tradeoff", help="emit (ACC, FTA) points for plotting")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("synth-ctrip", help="generate the synthetic service log")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_synth_ctrip)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

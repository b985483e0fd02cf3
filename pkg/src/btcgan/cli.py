"""Command-line entry points.

Subcommands:
  gen-data        generate a synthetic labelled dataset CSV
  train-baseline  fit and persist the baseline forest classifier
  train-gan       train a single GAN cell and persist its outputs
  sweep           run the full experiment grid
  score           recompute a confidence value from persisted samples
  report          re-emit a sweep report in csv or json form

Every command exits 0 on success and nonzero with a one-line
diagnostic on stderr otherwise.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import forest as forest_mod
from .config import default_config, gan_config_from, forest_params_from, load_config
from .errors import BtcganError
from .gan import build_gan, generate, train
from .sweep import derive_seed, emit_report, parse_report, run_sweep


def _load_cfg(path):
    if path is None:
        return default_config()
    if not Path(path).is_file():
        raise BtcganError(f"config file not found: {path}")
    return load_config(path)


def _records_from_cfg(cfg, data_override=None):
    source = data_override or cfg["data"]
    if source:
        return data_mod.load_records(source)
    return data_mod.synth_ground_truth(cfg["scale"], seed=cfg["data_seed"])


def _cmd_gen_data(args):
    records = data_mod.synth_ground_truth(args.scale, seed=args.seed)
    data_mod.save_records(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _cmd_train_baseline(args):
    cfg = _load_cfg(args.config)
    records = _records_from_cfg(cfg, args.data)
    train_half, test_half = data_mod.stratified_split(
        records, fraction=cfg["split_fraction"],
        seed=derive_seed("split", cfg["base_seed"]),
    )
    model = forest_mod.train_forest(
        train_half, forest_params_from(cfg),
        seed=derive_seed("forest", cfg["base_seed"]),
    )
    forest_mod.save_forest(model, args.out)
    report = forest_mod.evaluate(model, test_half)
    for label, m in report.class_metrics.items():
        acc = "-" if m.accuracy is None else f"{m.accuracy:.4f}"
        f1 = "-" if m.f1 is None else f"{m.f1:.4f}"
        print(f"{label}: accuracy {acc} f1 {f1} support {m.support}")
    if args.metrics_out:
        payload = {
            label: {"accuracy": m.accuracy, "f1": m.f1, "support": m.support}
            for label, m in report.class_metrics.items()
        }
        Path(args.metrics_out).write_text(json.dumps(payload, indent=2, sort_keys=True))
    print(f"saved baseline model to {args.out}")
    return 0


def _cmd_train_gan(args):
    cfg = _load_cfg(args.config)
    records = _records_from_cfg(cfg, args.data)
    train_half, _ = data_mod.stratified_split(
        records, fraction=cfg["split_fraction"],
        seed=derive_seed("split", cfg["base_seed"]),
    )
    target = cfg["target_class"]
    rows = [r for r in train_half if r.label == target]
    config = gan_config_from(cfg)
    if len(rows) < config.dataset_size:
        raise BtcganError(
            f"target class {target!r} has {len(rows)} training rows, "
            f"dataset_size is {config.dataset_size}"
        )
    learned = data_mod.records_to_learned(rows[:config.dataset_size])
    params = data_mod.fit_normalizer(learned)
    normalized = data_mod.normalize(learned, params)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log_path = out / "training_log.jsonl"
    with open(log_path, "w", encoding="utf-8") as log_fh:
        def log(record):
            if "eval_accuracies" in record or record["epoch"] % args.log_every == 0:
                log_fh.write(json.dumps(record, sort_keys=True) + "\n")

        model = build_gan(config, feature_dim=normalized.shape[1])
        outcome = train(model, normalized, config, log=log)

    samples = generate(model, cfg["sample_count"],
                       rng_seed=derive_seed("samples", config.rng_seed))
    np.savez_compressed(
        out / "samples.npz", samples=samples, minimum=params.minimum,
        maximum=params.maximum, target_class=np.array([target]),
    )
    summary = {
        "epochs_run": outcome.epochs_run,
        "converged": outcome.converged,
        "final_eval_accuracies": outcome.final_eval_accuracies,
        "wall_seconds": outcome.wall_seconds,
        "optimizer": config.optimizer,
        "adam_variant": config.adam_variant if config.optimizer == "adam" else "-",
        "dataset_size": config.dataset_size,
        "batch_size": config.batch_size,
        "rng_seed": config.rng_seed,
    }
    (out / "outcome.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    state = "converged" if outcome.converged else "did not converge"
    print(f"{state} after {outcome.epochs_run} epochs; outputs in {out}")
    return 0


def _cmd_sweep(args):
    cfg = _load_cfg(args.config)
    records = _records_from_cfg(cfg, args.data)
    report = run_sweep(records, cfg, parallel=args.parallel, out_dir=args.out,
                       progress=print if not args.quiet else None)
    converged = sum(1 for r in report.rows if r.converged)
    print(f"sweep complete: {len(report.rows)} cells, {converged} converged; "
          f"report in {args.out}")
    return 0


def _cmd_score(args):
    model = forest_mod.load_forest(args.model)
    with np.load(args.samples, allow_pickle=False) as archive:
        samples = archive["samples"]
        params = data_mod.NormalizationParams(
            minimum=archive["minimum"], maximum=archive["maximum"])
        target = args.target_class or str(archive["target_class"][0])
    confidence = forest_mod.confidence_value(model, samples, params, target)
    denorm = data_mod.denormalize(samples, params)
    _, implausible = data_mod.reconstruct_matrix(denorm)
    print(f"confidence {repr(confidence)} target {target} "
          f"implausible_frac {repr(float(np.mean(implausible)))}")
    return 0


def _cmd_report(args):
    source = Path(args.runs) / "report.json"
    if not source.is_file():
        raise BtcganError(f"no report.json under {args.runs}")
    report = parse_report(source, "json")
    if args.out:
        emit_report(report, args.format, args.out)
        print(f"wrote {args.format} report to {args.out}")
    else:
        tmp = Path(args.runs) / f"report_echo.{args.format}"
        emit_report(report, args.format, tmp)
        sys.stdout.write(tmp.read_text(encoding="utf-8"))
        tmp.unlink()
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="btcgan",
        description="Tabular GAN augmentation toolkit for address-behaviour data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic labelled dataset")
    p.add_argument("--scale", type=float, required=True,
                   help="fraction of the reference class counts to generate")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train-baseline", help="train and save the baseline forest")
    p.add_argument("--config")
    p.add_argument("--data", help="records CSV (defaults to generated data)")
    p.add_argument("--out", required=True)
    p.add_argument("--metrics-out")
    p.set_defaults(func=_cmd_train_baseline)

    p = sub.add_parser("train-gan", help="train a single GAN configuration")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--out", required=True)
    p.add_argument("--log-every", type=int, default=100)
    p.set_defaults(func=_cmd_train_gan)

    p = sub.add_parser("sweep", help="run the experiment grid")
    p.add_argument("--config")
    p.add_argument("--data")
    p.add_argument("--out", required=True)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("score", help="score persisted samples with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--target-class")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("report", help="re-emit a sweep report")
    p.add_argument("--runs", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BtcganError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

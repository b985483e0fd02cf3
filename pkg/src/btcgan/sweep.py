"""Experiment grid: train one GAN per (optimizer, dataset size, batch
size, repetition) cell and score each against the baseline classifier.

Cell seeds are derived by hashing the base seed together with the cell
coordinates, so extending the grid never changes existing cells and
serial and parallel execution produce identical reports. The report
carries, per cell, the epochs to convergence, the discriminator
accuracy of the final evaluation phase, the confidence value from the
baseline classifier and the fraction of implausible reconstructed rows,
plus per-group epoch statistics.
"""

import concurrent.futures
import hashlib
import itertools
import json
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np

from . import data as data_mod
from . import forest as forest_mod
from .errors import ConfigurationError, InputError, ParseError
from .gan import GanConfig, build_gan, generate, train

REPORT_VERSION = 1

ROW_COLUMNS = ("optimizer", "adam_variant", "dataset_size", "batch_size",
               "repetition", "epochs", "converged", "d_accuracy",
               "confidence", "implausible_frac", "wall_seconds")
GROUP_COLUMNS = ("optimizer", "dataset_size", "batch_size",
                 "epochs_mean", "epochs_std", "converged_count")


def derive_seed(*parts):
    """Stable 64-bit seed from the given parts (order-sensitive)."""
    key = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big")


def cell_seed(base_seed, optimizer, dataset_size, batch_size, repetition):
    return derive_seed("cell", base_seed, optimizer, dataset_size,
                       batch_size, repetition)


@dataclass
class SweepCell:
    index: int
    optimizer: str
    dataset_size: int
    batch_size: int
    repetition: int
    seed: int


@dataclass
class SweepSpec:
    """The grid; the default values yield 2*3*4*3 = 72 cells."""

    optimizers: list = field(default_factory=lambda: ["rmsprop", "adam"])
    dataset_sizes: list = field(default_factory=lambda: [10000, 5000, 1000])
    batch_sizes: list = field(default_factory=lambda: [400, 200, 100, 50])
    repetitions: int = 3
    target_class: str = "MiningPool"
    base_seed: int = 42
    sample_count: int = 10000

    @classmethod
    def from_config(cls, cfg):
        return cls(
            optimizers=list(cfg["optimizers"]),
            dataset_sizes=list(cfg["dataset_sizes"]),
            batch_sizes=list(cfg["batch_sizes"]),
            repetitions=cfg["repetitions"],
            target_class=cfg["target_class"],
            base_seed=cfg["base_seed"],
            sample_count=cfg["sample_count"],
        )

    def cells(self):
        out = []
        combos = itertools.product(self.optimizers, self.dataset_sizes,
                                   self.batch_sizes, range(self.repetitions))
        for i, (opt, ds, bs, rep) in enumerate(combos):
            out.append(SweepCell(
                index=i, optimizer=opt, dataset_size=ds, batch_size=bs,
                repetition=rep,
                seed=cell_seed(self.base_seed, opt, ds, bs, rep),
            ))
        return out


@dataclass
class SweepRow:
    optimizer: str
    adam_variant: str
    dataset_size: int
    batch_size: int
    repetition: int
    seed: int
    epochs: int
    converged: bool
    d_accuracy: float | None
    eval_accuracies: list
    confidence: float
    implausible_frac: float
    wall_seconds: float


@dataclass
class GroupStats:
    optimizer: str
    dataset_size: int
    batch_size: int
    epochs_mean: float
    epochs_std: float
    converged_count: int


@dataclass
class SweepReport:
    rows: list
    groups: list
    spec: dict | None = None


def compute_groups(rows):
    """Per (optimizer, dataset_size, batch_size) epoch mean/population
    stddev and converged count, in first-appearance order."""
    order = []
    grouped = {}
    for row in rows:
        key = (row.optimizer, row.dataset_size, row.batch_size)
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(row)
    out = []
    for key in order:
        members = grouped[key]
        epochs = np.array([r.epochs for r in members], dtype=np.float64)
        out.append(GroupStats(
            optimizer=key[0], dataset_size=key[1], batch_size=key[2],
            epochs_mean=float(epochs.mean()), epochs_std=float(epochs.std()),
            converged_count=sum(1 for r in members if r.converged),
        ))
    return out


def _cell_gan_config(cfg_values, cell):
    return GanConfig(
        batch_size=cell.batch_size,
        dataset_size=cell.dataset_size,
        optimizer=cell.optimizer,
        adam_variant=cfg_values["adam_variant"],
        learning_rate=cfg_values["learning_rate"],
        noise_dim=cfg_values["noise_dim"],
        eval_period=cfg_values["eval_period"],
        eval_repetitions=cfg_values["eval_repetitions"],
        thr1=cfg_values["thr1"],
        thr2=cfg_values["thr2"],
        max_epochs=cfg_values["max_epochs"],
        rng_seed=cell.seed,
        generator_loss=cfg_values["generator_loss"],
        dtype=cfg_values["dtype"],
    ).validate()


def _run_cell(payload):
    """Train one cell and generate its synthetic samples (pure task)."""
    cell, normalized, cfg_values, sample_count, samples_seed = payload
    config = _cell_gan_config(cfg_values, cell)
    model = build_gan(config, feature_dim=normalized.shape[1])
    outcome = train(model, normalized, config)
    samples = generate(model, sample_count, rng_seed=samples_seed)
    return {
        "epochs": outcome.epochs_run,
        "converged": outcome.converged,
        "final_accs": outcome.final_eval_accuracies,
        "wall_seconds": outcome.wall_seconds,
        "samples": samples,
    }


def run_sweep(records, cfg, parallel=1, out_dir=None, progress=None):
    """Execute the full grid against a labelled record set.

    Splits records once (stratified), trains the baseline forest on the
    training half, then per cell: slices the target-class training rows
    from row zero, normalizes, trains a GAN, generates samples and
    scores them. Returns a SweepReport; when ``out_dir`` is given the
    report, the baseline model and the per-cell samples are persisted.
    """
    spec = SweepSpec.from_config(cfg)
    cells = spec.cells()
    if not cells:
        raise ConfigurationError("sweep grid is empty")
    for cell in cells:
        if cell.batch_size > cell.dataset_size:
            raise ConfigurationError(
                f"batch size {cell.batch_size} exceeds dataset size "
                f"{cell.dataset_size} in the grid"
            )

    train_half, test_half = data_mod.stratified_split(
        records, fraction=cfg["split_fraction"],
        seed=derive_seed("split", spec.base_seed),
    )
    target_rows = [r for r in train_half if r.label == spec.target_class]
    need = max(spec.dataset_sizes)
    if len(target_rows) < need:
        raise ConfigurationError(
            f"target class {spec.target_class!r} has {len(target_rows)} "
            f"training rows, grid needs {need}"
        )

    from .config import forest_params_from
    baseline = forest_mod.train_forest(
        train_half, forest_params_from(cfg),
        seed=derive_seed("forest", spec.base_seed),
    )
    baseline_eval = forest_mod.evaluate(baseline, test_half)
    if progress:
        progress(f"baseline forest trained on {len(train_half)} records")

    payloads = []
    norm_cache = {}
    for cell in cells:
        if cell.dataset_size not in norm_cache:
            learned = data_mod.records_to_learned(target_rows[:cell.dataset_size])
            params = data_mod.fit_normalizer(learned)
            norm_cache[cell.dataset_size] = (
                data_mod.normalize(learned, params), params)
        normalized, _ = norm_cache[cell.dataset_size]
        samples_seed = derive_seed("samples", spec.base_seed, cell.optimizer,
                                   cell.dataset_size, cell.batch_size,
                                   cell.repetition)
        payloads.append((cell, normalized, dict(cfg.values), spec.sample_count,
                         samples_seed))

    if parallel > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_run_cell, payloads))
    else:
        results = [_run_cell(p) for p in payloads]

    rows = []
    for cell, payload, result in zip(cells, payloads, results):
        _, normalized, _, _, samples_seed = payload
        params = norm_cache[cell.dataset_size][1]
        confidence = forest_mod.confidence_value(
            baseline, result["samples"], params, spec.target_class)
        denorm = data_mod.denormalize(result["samples"], params)
        _, implausible = data_mod.reconstruct_matrix(denorm)
        accs = result["final_accs"]
        row = SweepRow(
            optimizer=cell.optimizer,
            adam_variant=cfg["adam_variant"] if cell.optimizer == "adam" else "-",
            dataset_size=cell.dataset_size,
            batch_size=cell.batch_size,
            repetition=cell.repetition,
            seed=cell.seed,
            epochs=result["epochs"],
            converged=result["converged"],
            d_accuracy=float(np.mean(accs)) if accs else None,
            eval_accuracies=list(accs),
            confidence=confidence,
            implausible_frac=float(np.mean(implausible)),
            wall_seconds=result["wall_seconds"],
        )
        rows.append(row)
        if out_dir is not None:
            _save_cell_samples(out_dir, cell, result["samples"], params,
                               spec.target_class, samples_seed)
        if progress:
            state = "converged" if row.converged else "capped"
            progress(
                f"cell {cell.index + 1}/{len(cells)} {cell.optimizer} "
                f"ds={cell.dataset_size} bs={cell.batch_size} rep={cell.repetition}: "
                f"{state} at {row.epochs} epochs, confidence {row.confidence:.2f}"
            )

    report = SweepReport(rows=rows, groups=compute_groups(rows),
                         spec=dict(cfg.values))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit_report(report, "json", out / "report.json")
        emit_report(report, "csv", out / "report.csv")
        forest_mod.save_forest(baseline, out / "baseline_model.npz")
        (out / "baseline_eval.json").write_text(_eval_report_json(baseline_eval))
        (out / "trend.json").write_text(
            json.dumps(optimizer_trend(report), indent=2, sort_keys=True))
    return report


def _eval_report_json(report):
    payload = {
        label: {"accuracy": m.accuracy, "f1": m.f1, "support": m.support}
        for label, m in report.class_metrics.items()
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def _save_cell_samples(out_dir, cell, samples, params, target_class, samples_seed):
    cells_dir = Path(out_dir) / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)
    name = (f"cell{cell.index:03d}_{cell.optimizer}_ds{cell.dataset_size}"
            f"_bs{cell.batch_size}_r{cell.repetition}.npz")
    np.savez_compressed(
        cells_dir / name,
        samples=samples,
        minimum=params.minimum,
        maximum=params.maximum,
        target_class=np.array([target_class]),
        gan_seed=np.array([cell.seed], dtype=np.uint64),
        samples_seed=np.array([samples_seed], dtype=np.uint64),
    )


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_report(report, format, path):
    """Write a report as json (full) or csv (rows + group stats)."""
    path = Path(path)
    if format == "json":
        payload = {
            "version": REPORT_VERSION,
            "spec": report.spec,
            "rows": [asdict(r) for r in report.rows],
            "groups": [asdict(g) for g in report.groups],
        }
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif format == "csv":
        lines = [",".join(ROW_COLUMNS)]
        for r in report.rows:
            lines.append(",".join(_fmt(getattr(r, c)) for c in ROW_COLUMNS))
        lines.append("")
        lines.append(",".join(GROUP_COLUMNS))
        for g in report.groups:
            lines.append(",".join(_fmt(getattr(g, c)) for c in GROUP_COLUMNS))
        text = "\n".join(lines) + "\n"
    else:
        raise ConfigurationError(f"unknown report format {format!r}")
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot write report to {path}: {exc}") from exc


def parse_report(path, format=None):
    """Read back an emitted report.

    JSON restores everything; CSV restores the row and group tables
    (per-cell seeds and evaluation traces live only in the JSON form).
    """
    path = Path(path)
    if format is None:
        format = "json" if path.suffix == ".json" else "csv"
    text = path.read_text(encoding="utf-8")
    if format == "json":
        payload = json.loads(text)
        rows = [SweepRow(**r) for r in payload["rows"]]
        groups = [GroupStats(**g) for g in payload["groups"]]
        return SweepReport(rows=rows, groups=groups, spec=payload.get("spec"))
    lines = text.splitlines()
    if not lines or lines[0] != ",".join(ROW_COLUMNS):
        raise ParseError(f"{path}: line 1: unexpected report header", line=1)
    rows = []
    groups = []
    section = "rows"
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            section = "groups-header"
            continue
        if section == "groups-header":
            if line != ",".join(GROUP_COLUMNS):
                raise ParseError(f"{path}: line {lineno}: unexpected group header",
                                 line=lineno)
            section = "groups"
            continue
        parts = line.split(",")
        if section == "rows":
            if len(parts) != len(ROW_COLUMNS):
                raise ParseError(f"{path}: line {lineno}: expected "
                                 f"{len(ROW_COLUMNS)} columns", line=lineno)
            rows.append(SweepRow(
                optimizer=parts[0], adam_variant=parts[1],
                dataset_size=int(parts[2]), batch_size=int(parts[3]),
                repetition=int(parts[4]), seed=0, epochs=int(parts[5]),
                converged=parts[6] == "true",
                d_accuracy=float(parts[7]) if parts[7] else None,
                eval_accuracies=[],
                confidence=float(parts[8]),
                implausible_frac=float(parts[9]),
                wall_seconds=float(parts[10]),
            ))
        else:
            groups.append(GroupStats(
                optimizer=parts[0], dataset_size=int(parts[1]),
                batch_size=int(parts[2]), epochs_mean=float(parts[3]),
                epochs_std=float(parts[4]), converged_count=int(parts[5]),
            ))
    return SweepReport(rows=rows, groups=groups, spec=None)


def report_fingerprint(report):
    """sha256 over the deterministic report content.

    Wall-clock seconds are zeroed first: they are the one field that
    legitimately varies between identical reruns.
    """
    rows = []
    for r in report.rows:
        d = asdict(r)
        d["wall_seconds"] = 0.0
        rows.append(d)
    payload = {
        "spec": report.spec,
        "rows": rows,
        "groups": [asdict(g) for g in report.groups],
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def optimizer_trend(report):
    """Epoch-mean comparison of adam vs rmsprop at matched grid points.

    Non-convergent cells enter at their capped epoch count. Returns the
    per-point means plus overall means and the faster-optimizer verdict;
    informational, not a gate.
    """
    by_point = {}
    for row in report.rows:
        point = (row.dataset_size, row.batch_size)
        by_point.setdefault(point, {}).setdefault(row.optimizer, []).append(row.epochs)
    matched = []
    for (ds, bs), opts in sorted(by_point.items()):
        if "adam" in opts and "rmsprop" in opts:
            matched.append({
                "dataset_size": ds,
                "batch_size": bs,
                "adam_epochs_mean": float(np.mean(opts["adam"])),
                "rmsprop_epochs_mean": float(np.mean(opts["rmsprop"])),
                "adam_faster": bool(np.mean(opts["adam"]) < np.mean(opts["rmsprop"])),
            })
    if not matched:
        return {"matched_points": [], "adam_epochs_mean": None,
                "rmsprop_epochs_mean": None, "adam_faster_overall": None}
    adam_mean = float(np.mean([m["adam_epochs_mean"] for m in matched]))
    rms_mean = float(np.mean([m["rmsprop_epochs_mean"] for m in matched]))
    return {
        "matched_points": matched,
        "adam_epochs_mean": adam_mean,
        "rmsprop_epochs_mean": rms_mean,
        "adam_faster_overall": adam_mean < rms_mean,
        "adam_faster_points": sum(1 for m in matched if m["adam_faster"]),
        "matched_point_count": len(matched),
    }

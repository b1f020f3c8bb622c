"""Sweep runner for the depth / scale-count / hidden-width / noise experiments."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import hier
from .data import LabeledDataset, corrupt_features, load_cora, make_masks
from .hier import Dendrogram, girvan_newman, read_dendrogram, scales_at, select_scales
from .model import MultiscaleModel, TrainConfig, evaluate, save_checkpoint, train_two_stage

log = logging.getLogger(__name__)

SWEEPS = ("depth", "scales", "hidden", "noise", "single")
PAPER_SCALE_INDICES = (0, 200, 400)

DEFAULT_GRIDS = {
    "depth": (1, 2, 3, 4, 5),
    "scales": (3, 8, 16, 32, 64, 128, 176),
    "hidden": (5, 10, 15, 20, 25, 30, 35, 40, 45),
    "noise": (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9),
    "single": (None,),
}
GRID_RANGES = {"depth": (1, 5), "scales": (3, 176), "hidden": (5, 45), "noise": (0.1, 0.9)}

# fixed hyperparameters of each sweep: (depth, fc_hidden, scale indices or None for linear L)
SWEEP_DEFAULTS = {
    "depth": dict(depth=2, fc_hidden=30, scale_indices=PAPER_SCALE_INDICES),
    "scales": dict(depth=2, fc_hidden=7, scale_indices=None),
    "hidden": dict(depth=2, fc_hidden=30, scale_indices=PAPER_SCALE_INDICES),
    "noise": dict(depth=2, fc_hidden=30, scale_indices=PAPER_SCALE_INDICES),
    "single": dict(depth=2, fc_hidden=30, scale_indices=PAPER_SCALE_INDICES),
}

CSV_COLUMNS = ("sweep_value", "repeat", "accuracy", "mean", "std")
TIMING_COLUMNS = ("sweep_value", "repeat", "seconds")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    content: str
    cites: str
    dendrogram: str = "compute"
    sweep: str = "single"
    grid: tuple = ()
    scale_indices: tuple | None = PAPER_SCALE_INDICES
    n_scales: int | None = None
    depth: int = 2
    fc_hidden: int = 30
    conv_epochs: int = 300
    fc_epochs: int = 10
    fc_batch_size: int = 32
    lr: float = 0.01
    weight_decay: float = 5e-4
    head: str = "mlp"
    output_relu: bool = True
    repeats: int = 2
    seed: int = 0
    jobs: int = 1
    feature_cap: int | None = None
    row_normalize: bool = False
    train_per_class: int = 20
    test_size: int = 1000
    strict_cora: bool = False
    noise: float = 0.0

    @classmethod
    def for_sweep(cls, sweep: str, **overrides) -> ExperimentConfig:
        """Paper defaults for ``sweep``; explicit keyword arguments win."""
        if sweep not in SWEEPS:
            raise ConfigError(f"unknown sweep {sweep!r}")
        base = dict(SWEEP_DEFAULTS[sweep], grid=DEFAULT_GRIDS[sweep], sweep=sweep)
        base.update({k: v for k, v in overrides.items() if v is not None})
        if "n_scales" in overrides and overrides["n_scales"] is not None \
                and "scale_indices" not in overrides:
            base["scale_indices"] = None
        cfg = cls(**base)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.sweep not in SWEEPS:
            raise ConfigError(f"unknown sweep {self.sweep!r}")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.sweep in GRID_RANGES:
            lo, hi = GRID_RANGES[self.sweep]
            bad = [v for v in self.grid if not lo <= v <= hi]
            if bad:
                raise ConfigError(f"{self.sweep} grid values {bad} outside [{lo}, {hi}]")
            if not self.grid:
                raise ConfigError("empty grid")
        if self.sweep not in ("scales",) and self.scale_indices is None and self.n_scales is None:
            raise ConfigError("need scale indices or a scale count")
        if self.feature_cap is not None and self.feature_cap < 1:
            raise ConfigError("feature cap must be >= 1")
        if not 1 <= self.depth <= 5:
            raise ConfigError("depth outside [1, 5]")
        if self.fc_batch_size < 0:
            raise ConfigError("fc batch size must be >= 0")

    def digest(self) -> str:
        blob = json.dumps({k: v for k, v in asdict(self).items() if k != "jobs"}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def train_config(self, seed: int, **changes) -> TrainConfig:
        base = dict(depth=self.depth, fc_hidden=self.fc_hidden, conv_epochs=self.conv_epochs,
                    fc_epochs=self.fc_epochs, fc_batch_size=self.fc_batch_size, lr=self.lr,
                    weight_decay=self.weight_decay, head=self.head, output_relu=self.output_relu,
                    jobs=self.jobs, seed=seed)
        base.update(changes)
        return TrainConfig(**base)


@dataclass
class RunRecord:
    config_digest: str
    sweep_value: object
    accuracies: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std(self) -> float:
        """Population standard deviation over repeats."""
        return float(np.std(self.accuracies))


# --------------------------------------------------------------------------


def load_dataset(cfg: ExperimentConfig) -> LabeledDataset:
    if cfg.strict_cora:
        ds = load_cora(cfg.content, cfg.cites)
    else:
        ds = load_cora(cfg.content, cfg.cites, n_features=None, class_names=None)
    if ds.dropped_citations:
        log.info("dropped %d citations naming unknown papers", ds.dropped_citations)
    ds = make_masks(ds, cfg.train_per_class, seed=cfg.seed,
                    test_size=min(cfg.test_size, ds.n_nodes - cfg.train_per_class * ds.n_classes))
    if cfg.feature_cap is not None:
        ds = ds.cap_features(cfg.feature_cap)
    return ds


def load_or_compute_dendrogram(cfg: ExperimentConfig, ds: LabeledDataset) -> Dendrogram:
    if cfg.dendrogram == "compute":
        return girvan_newman(ds.graph)
    d = read_dendrogram(cfg.dendrogram)
    if d.base != ds.graph:
        raise ConfigError(f"{cfg.dendrogram} was not computed from this dataset's graph")
    return d


def _point_settings(cfg: ExperimentConfig, value):
    """(train-config changes, scale-count override, noise level) for one grid value."""
    if cfg.sweep == "depth":
        return {"depth": int(value)}, None, cfg.noise
    if cfg.sweep == "hidden":
        return {"fc_hidden": int(value)}, None, cfg.noise
    if cfg.sweep == "scales":
        return {}, int(value), cfg.noise
    if cfg.sweep == "noise":
        return {}, None, float(value)
    return {}, None, cfg.noise


def _scale_set(cfg: ExperimentConfig, d: Dendrogram, count: int | None):
    if count is not None:
        return select_scales(d, count)
    if cfg.scale_indices is not None:
        return scales_at(d, cfg.scale_indices)
    return select_scales(d, cfg.n_scales)


def _repeat_seed(seed: int, repeat: int, stream: str) -> int:
    # independent of the sweep value: grid points within a repeat share their
    # initial weights, so differences come from the swept setting
    key = f"{seed}|{repeat}|{stream}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def run_point(cfg: ExperimentConfig, ds: LabeledDataset, d: Dendrogram, value, repeat: int,
              checkpoint: str | None = None) -> float:
    changes, count, noise = _point_settings(cfg, value)
    scales = _scale_set(cfg, d, count)
    data = ds
    if noise > 0:
        data = corrupt_features(ds, noise, seed=_repeat_seed(cfg.seed, repeat, "noise"))
    if cfg.row_normalize:
        data = data.row_normalized()
    tcfg = cfg.train_config(_repeat_seed(cfg.seed, repeat, "model"), **changes)
    model = MultiscaleModel.build(scales.scales, data.n_features, data.n_classes, tcfg)
    train_two_stage(model, data, tcfg)
    if checkpoint:
        save_checkpoint(model, checkpoint)
    return evaluate(model, data, data.test_mask)


def run_sweep(cfg: ExperimentConfig, out_path=None, ds: LabeledDataset | None = None,
              dendrogram: Dendrogram | None = None) -> list[RunRecord]:
    """Train ``repeats`` seeded models per grid value.

    When ``out_path`` is given the CSV (and sidecars) are rewritten after every
    record and once more on the way out, so an aborted sweep leaves the
    finished repeats on disk.
    """
    cfg.validate()
    ds = ds if ds is not None else load_dataset(cfg)
    d = dendrogram if dendrogram is not None else load_or_compute_dendrogram(cfg, ds)
    header = run_header(cfg, ds, d)
    records: list[RunRecord] = []
    try:
        for value in cfg.grid:
            rec = RunRecord(cfg.digest(), value)
            records.append(rec)
            for r in range(cfg.repeats):
                t0 = time.perf_counter()
                acc = run_point(cfg, ds, d, value, r)
                rec.accuracies.append(acc)
                rec.seconds.append(time.perf_counter() - t0)
                log.info("%s=%s repeat %d: accuracy %.4f (%.1fs)",
                         cfg.sweep, value, r, acc, rec.seconds[-1])
            if out_path is not None:
                report(records, out_path, header)
    finally:
        # also on failure, so the finished repeats survive
        if out_path is not None:
            report(records, out_path, header)
    return records


def run_header(cfg: ExperimentConfig, ds: LabeledDataset, d: Dendrogram) -> list[str]:
    return [
        f"sweep {cfg.sweep} config {cfg.digest()} seed {cfg.seed} repeats {cfg.repeats}",
        f"dataset {ds.summary_line()}",
        f"dendrogram usable_snapshots {d.n_usable} policy {d.policy.value}",
        f"test protocol: {int(ds.test_mask.sum())} held-out nodes, "
        f"{cfg.train_per_class} training nodes per class",
        "std: population formula over repeats",
    ]


# --------------------------------------------------------------------------
# output


def format_value(v) -> str:
    if v is None:
        return "single"
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.6f}"


def report(records, out_path, header=()) -> None:
    """Write ``out_path`` (CSV), ``<stem>.dat`` (gnuplot) and ``<stem>.timing.csv``.

    The CSV holds only seed-determined numbers; wall-clock time lives in the
    timing sidecar so identical runs give byte-identical CSVs.
    """
    out = Path(out_path)
    rows = [",".join(CSV_COLUMNS)]
    timing = [",".join(TIMING_COLUMNS)]
    dat = [f"# {h}" for h in header] + ["# sweep_value mean std"]
    for rec in records:
        v = format_value(rec.sweep_value)
        for r, acc in enumerate(rec.accuracies):
            rows.append(f"{v},{r},{acc:.6f},{rec.mean:.6f},{rec.std:.6f}")
        for r, sec in enumerate(rec.seconds):
            timing.append(f"{v},{r},{sec:.6f}")
        if rec.accuracies:
            dat.append(f"{v} {rec.mean:.6f} {rec.std:.6f}")
    try:
        out.write_text("\n".join(rows) + "\n")
        out.with_suffix(".dat").write_text("\n".join(dat) + "\n")
        out.with_name(out.stem + ".timing.csv").write_text("\n".join(timing) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc


def read_results(path) -> dict:
    """Parse a results CSV back into ``{sweep_value: [accuracy, ...]}``."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ValueError(f"{path}: not a results file")
    out: dict = {}
    for line in lines[1:]:
        v, _, acc, _, _ = line.split(",")
        out.setdefault(v, []).append(float(acc))
    return out


def precompute_dendrogram(ds: LabeledDataset, out_path,
                          policy=hier.SnapshotPolicy.EVERY_REMOVAL) -> Dendrogram:
    if ds.graph.n_edges == 0:
        raise ConfigError("graph has no edges; nothing to decompose")
    d = girvan_newman(ds.graph, policy)
    hier.write_dendrogram(d, out_path)
    return d

"""Command-line pipeline: synth -> featurize -> train / tune / evaluate.

Every command reads a JSON config (``--config``), then applies explicit
flags on top.  Intermediate files live under ``--out`` unless overridden.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import boosting, dataio, evaluation, features, filtering, tuning
from .boosting import Hyperparams
from .dataio import SynthConfig
from .tuning import SearchSpace

log = logging.getLogger("neosleep")


@dataclass(frozen=True)
class PipelineConfig:
    out: str = "out"
    seed: int = 0
    records_dir: str | None = None
    features_path: str | None = None
    # synth
    n_records: int = 19
    record_seconds: float = 7200.0
    fs: float = 500.0
    wake_fraction: float = 0.4
    noise_level: float = 0.0
    artifact_fraction: float = 0.0
    # preprocessing / features
    low_hz: float = 0.3
    high_hz: float = 35.0
    taps: int | None = None
    dump_coefficients: str | None = None
    epoch_seconds: float = 30.0
    artifact_threshold: float = 0.05
    feature_mode: str = "all-14"
    # model
    n_estimators: int = 149
    max_depth: int = 10
    learning_rate: float = 0.104
    min_samples_leaf: int = 5
    # evaluation / search
    k: int = 5
    stratify: bool = True
    group_by_record: bool = False
    n_estimators_range: tuple[int, int] = (50, 300)
    max_depth_range: tuple[int, int] = (2, 12)
    learning_rate_range: tuple[float, float] = (0.01, 0.3)
    n_candidates: int = 50
    select_metric: str = "accuracy"

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    @property
    def records(self) -> Path:
        return Path(self.records_dir) if self.records_dir else self.out_dir / "records"

    @property
    def features_file(self) -> Path:
        return Path(self.features_path) if self.features_path else self.out_dir / "features.csv"

    @property
    def hyperparams(self) -> Hyperparams:
        return Hyperparams(self.n_estimators, self.max_depth, self.learning_rate, self.min_samples_leaf)

    def search_space(self, seed: int) -> SearchSpace:
        return SearchSpace(tuple(self.n_estimators_range), tuple(self.max_depth_range),
                           tuple(self.learning_rate_range), self.n_candidates, seed, self.min_samples_leaf)


_TUPLE_FIELDS = {"n_estimators_range", "max_depth_range", "learning_rate_range"}


def load_config(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ValueError(f"{path}: unknown config keys {unknown}")
    return {k: tuple(v) if k in _TUPLE_FIELDS else v for k, v in doc.items()}


def child_seed(master: int, stage: str) -> int:
    """Stable 64-bit seed for a named stage, independent of other stages."""
    digest = hashlib.sha256(f"{int(master)}/{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


# ---------------------------------------------------------------------------
# commands


def cmd_synth(cfg: PipelineConfig) -> None:
    synth = SynthConfig(cfg.n_records, cfg.record_seconds, cfg.fs, cfg.wake_fraction,
                        cfg.noise_level, child_seed(cfg.seed, "synth"), cfg.epoch_seconds,
                        cfg.artifact_fraction)
    records, truth = dataio.generate_synthetic(synth)
    for rec in records:
        dataio.save_record(rec, cfg.records)
    rows = [(rid, i, lab) for rid, labs in truth.items() for i, lab in enumerate(labs)]
    dataio.write_labels(cfg.out_dir / "truth.csv", rows)
    log.info("wrote %d records to %s", len(records), cfg.records)


def featurize_record(record, cfg: PipelineConfig, filt=None):
    """Filter, segment, reject artifacts and featurize one record."""
    if filt is None:
        filt = filtering.design_bandpass(record.fs, cfg.low_hz, cfg.high_hz, cfg.taps)
    clean = filtering.apply(filt, record.samples)
    epochs = dataio.segment(record, cfg.epoch_seconds, samples=clean)
    kept = dataio.label_and_filter(epochs, record, cfg.artifact_threshold)
    rows = []
    for ep in kept:
        try:
            rows.append((ep, features.featurize(ep)))
        except features.DegenerateSignalError as exc:
            log.warning("skipping degenerate epoch: %s", exc)
    return rows, len(epochs)


def cmd_featurize(cfg: PipelineConfig) -> features.FeatureTable:
    paths = sorted(p for p in cfg.records.glob(f"*{dataio.RECORD_SUFFIX}"))
    if not paths:
        raise FileNotFoundError(f"no record files in {cfg.records}")
    filters = {}
    rows, n_segments = [], 0
    for path in paths:
        rec = dataio.load_record(path)
        if rec.fs not in filters:
            filters[rec.fs] = filtering.design_bandpass(rec.fs, cfg.low_hz, cfg.high_hz, cfg.taps)
        rec_rows, n_seg = featurize_record(rec, cfg, filters[rec.fs])
        rows += rec_rows
        n_segments += n_seg
    if cfg.dump_coefficients:
        filtering.write_coefficients(next(iter(filters.values())), cfg.dump_coefficients)
    table = features.build_table(rows, cfg.feature_mode)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    features.write_table(table, cfg.features_file)
    dataio.write_labels(cfg.out_dir / "epochs.csv", [(ep.record_id, ep.index, ep.label) for ep, _ in rows])
    log.info("%d of %d segments kept -> %s", len(table), n_segments, cfg.features_file)
    return table


def cmd_train(cfg: PipelineConfig) -> boosting.GbtModel:
    table = features.read_table(cfg.features_file)
    model = boosting.train(table.X, table.labels, cfg.hyperparams, seed=child_seed(cfg.seed, "train"),
                           feature_names=table.feature_names)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    boosting.save(model, cfg.out_dir / "model.json")
    return model


def _groups(cfg, table):
    return table.record_ids if cfg.group_by_record else None


def cmd_tune(cfg: PipelineConfig):
    table = features.read_table(cfg.features_file)
    best, board = tuning.random_search(
        table.X, table.labels, cfg.search_space(child_seed(cfg.seed, "tune-sample")),
        k=cfg.k, seed=child_seed(cfg.seed, "tune-cv"), metric=cfg.select_metric,
        stratify=cfg.stratify, groups=_groups(cfg, table),
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    tuning.write_leaderboard(board, cfg.out_dir / "leaderboard.csv")
    tuning.write_best(best, cfg.out_dir / "best.json")
    return best, board


def cmd_evaluate(cfg: PipelineConfig) -> evaluation.CvResult:
    table = features.read_table(cfg.features_file)
    result = evaluation.cross_validate(
        table.X, table.labels, cfg.hyperparams, k=cfg.k, seed=child_seed(cfg.seed, "cv"),
        stratify=cfg.stratify, groups=_groups(cfg, table), feature_names=table.feature_names,
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    hp = cfg.hyperparams
    header = (f"# n_estimators={hp.n_estimators} max_depth={hp.max_depth} "
              f"learning_rate={hp.learning_rate!r} k={cfg.k} epochs={len(table)}\n")
    (cfg.out_dir / "metrics.txt").write_text(header + evaluation.format_report(result))
    evaluation.write_roc(result, cfg.out_dir / "roc.csv")
    return result


COMMANDS = {
    "synth": cmd_synth,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "tune": cmd_tune,
    "evaluate": cmd_evaluate,
}


# ---------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=S, help="JSON config file")
    common.add_argument("--seed", type=int, default=S, help="master seed")
    common.add_argument("--out", default=S, help="output directory")
    common.add_argument("--records", dest="records_dir", default=S)
    common.add_argument("--features", dest="features_path", default=S)
    common.add_argument("-v", "--verbose", action="store_true", default=S)

    p = argparse.ArgumentParser(prog="neosleep", parents=[common],
                                description="Single-channel EEG sleep-wake pipeline.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", parents=[common], help="write a seeded synthetic corpus")
    sp.add_argument("--n-records", type=int, default=S)
    sp.add_argument("--record-seconds", type=float, default=S)
    sp.add_argument("--fs", type=float, default=S)
    sp.add_argument("--wake-fraction", type=float, default=S)
    sp.add_argument("--noise-level", type=float, default=S)
    sp.add_argument("--artifact-fraction", type=float, default=S)
    sp.add_argument("--epoch-seconds", type=float, default=S)

    fp = sub.add_parser("featurize", parents=[common], help="filter, segment and featurize records")
    fp.add_argument("--low-hz", type=float, default=S)
    fp.add_argument("--high-hz", type=float, default=S)
    fp.add_argument("--taps", type=int, default=S)
    fp.add_argument("--dump-coefficients", default=S, metavar="PATH")
    fp.add_argument("--epoch-seconds", type=float, default=S)
    fp.add_argument("--artifact-threshold", type=float, default=S)
    fp.add_argument("--paper-13", dest="feature_mode", action="store_const", const="paper-13", default=S,
                    help="drop standard_deviation (13 feature columns)")

    def model_flags(parser):
        parser.add_argument("--n-estimators", type=int, default=S)
        parser.add_argument("--max-depth", type=int, default=S)
        parser.add_argument("--learning-rate", type=float, default=S)
        parser.add_argument("--min-samples-leaf", type=int, default=S)

    def cv_flags(parser):
        parser.add_argument("-k", "--folds", dest="k", type=int, default=S)
        parser.add_argument("--no-stratify", dest="stratify", action="store_false", default=S)
        parser.add_argument("--group-by-record", action="store_true", default=S)

    tp = sub.add_parser("train", parents=[common], help="fit one model on the whole feature table")
    model_flags(tp)

    up = sub.add_parser("tune", parents=[common], help="random-search CV over hyperparameters")
    cv_flags(up)
    up.add_argument("--min-samples-leaf", type=int, default=S)
    up.add_argument("--n-candidates", type=int, default=S)
    up.add_argument("--estimators-range", dest="n_estimators_range", type=int, nargs=2, default=S)
    up.add_argument("--depth-range", dest="max_depth_range", type=int, nargs=2, default=S)
    up.add_argument("--lr-range", dest="learning_rate_range", type=float, nargs=2, default=S)
    up.add_argument("--select", dest="select_metric", choices=["accuracy", "kappa"], default=S)

    ep = sub.add_parser("evaluate", parents=[common], help="k-fold cross-validated metrics and ROC")
    model_flags(ep)
    cv_flags(ep)
    return p


def build_config(ns: argparse.Namespace) -> PipelineConfig:
    values = vars(ns).copy()
    values.pop("command")
    values.pop("verbose", None)
    cfg = PipelineConfig()
    config_path = values.pop("config", None)
    if config_path:
        cfg = replace(cfg, **load_config(config_path))
    overrides = {k: tuple(v) if k in _TUPLE_FIELDS else v for k, v in values.items()}
    return replace(cfg, **overrides)


def main(argv=None) -> int:
    ns = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(ns)
        COMMANDS[ns.command](cfg)
    except Exception as exc:  # one machine-parsable line per failure
        print(json.dumps({"error": type(exc).__name__, "command": ns.command, "message": str(exc)}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

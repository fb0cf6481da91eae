"""Command-line entry point: ``tsrnet <command> [-c config.yaml] [--set key=value ...]``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .checkpoint import load_model, network_fingerprint
from .config import RunConfig, parse_config
from .errors import CheckpointError, ConfigError, TsrnetError
from .ingest import load_dataset, load_ptbxl_split, save_dataset, synth_dataset
from .ingest.ptbxl import REFERENCE_COUNTS
from .preprocess import preprocess_records
from .scoring import ScoreReport, score_split, trapezoid_auc
from .trainer import train, write_history

log = logging.getLogger("tsrnet")

COMMANDS = ("synth", "preprocess", "train", "score", "eval", "ablate")
DATA_ROOT_ENV = "TSRNET_DATA_ROOT"


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _synth_dir(cfg: RunConfig) -> Path:
    return Path(cfg.dataset.root) if cfg.dataset.root else Path(cfg.output_dir) / "data"


def load_split(cfg: RunConfig):
    if cfg.dataset.kind == "ptbxl":
        root = cfg.dataset.root or os.environ.get(DATA_ROOT_ENV)
        if not root:
            raise ConfigError(f"dataset.root is not set and ${DATA_ROOT_ENV} is empty")
        return load_ptbxl_split(root, cfg.normal_rule(), cfg.dataset.limit)
    directory = _synth_dir(cfg)
    if (directory / "manifest.json").exists():
        return load_dataset(directory)
    log.info("no synthetic dataset at %s, generating in memory", directory)
    return synth_dataset(cfg.synth_spec(), cfg.seed)


def _write_meta(out: Path, command: str, cfg: RunConfig, extra=None):
    # timestamps live here so the other artifacts stay byte-reproducible
    meta = {"command": command, "config_fingerprint": cfg.fingerprint(),
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S"), **(extra or {})}
    (out / f"{command}_meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True))


def cmd_synth(cfg: RunConfig) -> int:
    spec = cfg.synth_spec()
    split = synth_dataset(spec, cfg.seed)
    directory = _synth_dir(cfg)
    path = save_dataset(split, directory, spec)
    manifest = json.loads(path.read_text())
    manifest["config_fingerprint"] = cfg.fingerprint()
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True))
    print(f"wrote {len(split.train) + len(split.test)} records to {directory} {split.counts()}")
    return 0


def cmd_preprocess(cfg: RunConfig) -> int:
    out = _out(cfg)
    split = load_split(cfg)
    stft = cfg.stft_params()
    arrays = {}
    for part in ("train", "test"):
        records = getattr(split, part)
        if records:
            ecg, spec = preprocess_records(records, stft)
            arrays[f"{part}_ecg"], arrays[f"{part}_spec"] = ecg, spec
            arrays[f"{part}_ids"] = np.array([r.record_id for r in records])
            arrays[f"{part}_labels"] = np.array([r.label.value for r in records])
    np.savez(out / "preprocessed.npz", config_fingerprint=cfg.fingerprint(), **arrays)
    counts = split.counts()
    lines = [f"# config_fingerprint: {cfg.fingerprint()}", "subset\tcount\treference"]
    for k, v in counts.items():
        ref = REFERENCE_COUNTS[k] if split.provenance == "ptbxl" else ""
        lines.append(f"{k}\t{v}\t{ref}")
    (out / "split_counts.tsv").write_text("\n".join(lines) + "\n")
    print("\n".join(lines[1:]))
    return 0


def cmd_train(cfg: RunConfig) -> int:
    out = _out(cfg)
    split = load_split(cfg)
    result = train(split, cfg.network_config(), cfg.train_config(), cfg.stft_params(),
                   cfg.mask_config(), out_dir=out, fingerprint=cfg.fingerprint())
    write_history(out / "loss_history.tsv", result.state.history, cfg.fingerprint())
    _write_meta(out, "train", cfg)
    last = result.state.history[-1]
    print(f"trained {last['epoch']} epochs, final mean loss {last['mean_loss']:.5f}; "
          f"checkpoint {result.checkpoint}")
    return 0


def _checkpoint_path(cfg: RunConfig) -> Path:
    return Path(cfg.output_dir) / "model.ckpt"


def cmd_score(cfg: RunConfig) -> int:
    ckpt = _checkpoint_path(cfg)
    if not ckpt.exists():
        print(f"error: missing checkpoint {ckpt}; run `train` first", file=sys.stderr)
        return 1
    out = _out(cfg)
    split = load_split(cfg)
    split.check_test_mix()
    model, _ = load_model(ckpt)
    expected = cfg.network_config().for_inputs(
        model.cfg.n_leads, model.cfg.signal_length, model.cfg.spec_bins, model.cfg.spec_frames)
    if network_fingerprint(expected) != network_fingerprint(model.cfg):
        raise CheckpointError(f"{ckpt} was trained with a different network configuration")
    report = score_split(model, split, cfg.stft_params(), cfg.scoring_config(), cfg.fingerprint())
    path = report.write(out / "scores.tsv")
    _write_meta(out, "score", cfg, {"n_failed": len(report.failed)})
    print(f"AUC {report.auc:.4f} over {len(report.per_record)} records -> {path}")
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    out = Path(cfg.output_dir)
    scores = out / "scores.tsv"
    if not scores.exists():
        print(f"error: missing score report {scores}; run `score` first", file=sys.stderr)
        return 1
    report = ScoreReport.read(scores)
    trap = trapezoid_auc(report.roc_points)
    lines = [
        f"# config_fingerprint: {report.config_fingerprint}",
        f"auc_mann_whitney\t{report.auc!r}",
        f"auc_trapezoid\t{trap!r}",
        f"n_records\t{len(report.per_record)}",
    ]
    (out / "eval.tsv").write_text("\n".join(lines) + "\n")
    print("\n".join(lines[1:]))
    return 0


def run_ablation(cfg: RunConfig, split=None):
    """Train one model per modality and compare scoring with and without peak windows.

    Returns rows of (ablation, setting, auc).
    """
    split = load_split(cfg) if split is None else split
    split.check_test_mix()
    out = _out(cfg)
    stft, masks, tcfg = cfg.stft_params(), cfg.mask_config(), cfg.train_config()
    base_scoring = cfg.scoring_config()
    rows, combined = [], None
    for modality in ("time_only", "spec_only", "combined"):
        net = replace(cfg.network_config(), modality=modality)
        res = train(split, net, tcfg, stft, masks, out_dir=out / f"ablate_{modality}",
                    fingerprint=cfg.fingerprint())
        rep = score_split(res.model, split, stft, base_scoring, cfg.fingerprint())
        rows.append(("modality", modality, rep.auc))
        if modality == "combined":
            combined = res.model
    for peak_based in (False, True):
        scoring = replace(base_scoring, peak_based=peak_based)
        rep = score_split(combined, split, stft, scoring, cfg.fingerprint())
        rows.append(("peak_based_error", "on" if peak_based else "off", rep.auc))
    return rows


def cmd_ablate(cfg: RunConfig) -> int:
    rows = run_ablation(cfg)
    lines = [f"# config_fingerprint: {cfg.fingerprint()}", "ablation\tsetting\tauc"]
    lines += [f"{a}\t{s}\t{auc!r}" for a, s, auc in rows]
    (_out(cfg) / "ablation.tsv").write_text("\n".join(lines) + "\n")
    _write_meta(_out(cfg), "ablate", cfg)
    print("\n".join(lines[1:]))
    return 0


HANDLERS = {"synth": cmd_synth, "preprocess": cmd_preprocess, "train": cmd_train,
            "score": cmd_score, "eval": cmd_eval, "ablate": cmd_ablate}


def dispatch(command: str, cfg: RunConfig) -> int:
    if command not in HANDLERS:
        print(f"error: unknown command {command!r}", file=sys.stderr)
        return 2
    try:
        return HANDLERS[command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (TsrnetError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsrnet", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("-c", "--config", help="YAML run configuration")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key, dotted path (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return dispatch(args.command, cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: runs every probe end-to-end and emits audit reports.

Each command reads one declarative run-config file (YAML) plus flag
overrides; all randomness flows from the single top-level seed, which is
recorded in the report provenance together with config and dataset hashes.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path
from typing import Optional

import click
import yaml

from qabias import figures, report as report_mod
from qabias.bias import (
    accuracy_by_type,
    build_annotator_minisplits,
    inter_annotator_matrix,
    non_overlap_resplit_suite,
    select_top_annotators,
)
from qabias.data import (
    ByAnnotatorRule,
    DatasetHandle,
    RandomRule,
    Split,
    make_split,
    parse_dataset_file,
    write_canonical,
)
from qabias.errors import QABiasError
from qabias.experiments import (
    DatasetWithSplits,
    ablation_suite,
    cross_dataset_matrix,
    evaluate_split,
)
from qabias.scorer import ScorerConfig, load_scorer, save_scorer, train_scorer
from qabias.synth import SyntheticBiasConfig, generate_synthetic_dataset


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


def _merge(cfg: dict, seed: Optional[int], out: Optional[str]) -> dict:
    cfg = dict(cfg)
    if seed is not None:
        cfg["seed"] = seed
    if out is not None:
        cfg["out_dir"] = out
    cfg.setdefault("seed", 0)
    cfg.setdefault("out_dir", "qabias-out")
    return cfg


def _scorer_config(cfg: dict) -> ScorerConfig:
    sc = dict(cfg.get("scorer", {}))
    sc.setdefault("seed", cfg["seed"])
    encoder = sc.pop("encoder", "lexical")
    if encoder == "lexical":
        return ScorerConfig.lexical(**sc)
    return ScorerConfig(encoder=encoder, **sc)


def _load_datasets(cfg: dict) -> list[DatasetHandle]:
    specs = cfg.get("datasets", [])
    if not specs:
        raise click.ClickException("run config names no datasets")
    handles = []
    for spec in specs:
        result = parse_dataset_file(
            spec["path"],
            spec.get("format", "canonical_jsonl"),
            dataset_id=spec.get("dataset_id"),
            field_map=spec.get("field_map"),
        )
        for err in result.errors:
            click.echo(f"warning: {spec['path']}: line {err.line_no}: {err.message}",
                       err=True)
        handles.append(result.handle)
    return handles


def _split_pair(ds: DatasetHandle, cfg: dict) -> tuple[Split, Split]:
    rule_cfg = cfg.get("split", {"ratio": 0.9})
    if "ratio" in rule_cfg:
        rule = RandomRule(float(rule_cfg["ratio"]))
    else:
        rule = ByAnnotatorRule(
            frozenset(rule_cfg["train_annotators"]),
            frozenset(rule_cfg["valid_annotators"]),
        )
    return make_split(ds, rule, cfg["seed"])


def _provenance(cfg: dict, handles: list[DatasetHandle]) -> dict:
    cfg_hash = hashlib.sha256(
        json.dumps(cfg, sort_keys=True, default=str).encode()
    ).hexdigest()
    return {
        "seed": cfg["seed"],
        "config_hash": cfg_hash,
        "dataset_hashes": {h.dataset_id: h.content_hash() for h in handles},
    }


def _emit(report: report_mod.BiasReport, cfg: dict, formats: tuple[str, ...]) -> None:
    written = report_mod.emit_report(report, cfg["out_dir"], formats)
    for kind, path in written.items():
        click.echo(f"wrote {kind}: {path}")


_shared = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="Declarative run-config YAML."),
    click.option("--seed", type=int, default=None, help="Override the run seed."),
    click.option("--out", type=str, default=None, help="Output directory."),
    click.option("--format", "formats", multiple=True,
                 type=click.Choice(["json", "md", "csv"]), default=("json", "md", "csv")),
    click.option("--jobs", type=int, default=1, help="Parallel probe jobs."),
]


def shared_options(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Bias audit toolkit for A5 multiple-choice QA datasets."""


@main.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--fmt", type=click.Choice(["canonical_jsonl", "tvqa_raw", "movieqa_raw"]),
              default="canonical_jsonl")
@click.option("--dataset-id", default=None)
@click.option("--out", type=str, default=None, help="Write the canonical copy here.")
def ingest(path, fmt, dataset_id, out):
    """Load a dataset file and normalize it to the canonical format."""
    result = parse_dataset_file(path, fmt, dataset_id=dataset_id)
    for err in result.errors:
        click.echo(f"rejected line {err.line_no} ({err.field}): {err.message}", err=True)
    stats = result.handle.stats
    click.echo(
        f"{result.handle.dataset_id}: {stats.n_items} items, "
        f"{stats.n_annotators} annotators, avg Q len {stats.avg_question_len:.2f}, "
        f"avg A len {stats.avg_answer_len:.2f}, {stats.pct_why_how:.1f}% why/how, "
        f"{len(result.errors)} rejected records"
    )
    if out:
        write_canonical(result.handle, out)
        click.echo(f"wrote canonical dataset: {out}")


@main.command()
@shared_options
def synth(config_path, seed, out, formats, jobs):
    """Generate a planted-bias synthetic dataset."""
    cfg = _merge(_load_config(config_path), seed, out)
    syn = dict(cfg.get("synth", {}))
    syn.setdefault("seed", cfg["seed"])
    if "bias_qtypes" in syn and syn["bias_qtypes"] is not None:
        syn["bias_qtypes"] = frozenset(syn["bias_qtypes"])
    ds = generate_synthetic_dataset(SyntheticBiasConfig(**syn))
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{ds.dataset_id}.jsonl"
    write_canonical(ds, path)
    click.echo(f"wrote {len(ds)} items: {path}")


@main.command()
@shared_options
def split(config_path, seed, out, formats, jobs):
    """Build a train/valid split and write the id lists."""
    cfg = _merge(_load_config(config_path), seed, out)
    ds = _load_datasets(cfg)[0]
    train, valid = _split_pair(ds, cfg)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{ds.dataset_id}-splits.json"
    path.write_text(json.dumps({
        "provenance": train.provenance,
        "train": sorted(train.item_ids),
        "valid": sorted(valid.item_ids),
    }, indent=2))
    click.echo(f"wrote {len(train)} train / {len(valid)} valid ids: {path}")


@main.command()
@shared_options
def train(config_path, seed, out, formats, jobs):
    """Train a scorer and save its checkpoint plus training log."""
    cfg = _merge(_load_config(config_path), seed, out)
    ds = _load_datasets(cfg)[0]
    tr, _ = _split_pair(ds, cfg)
    scorer = train_scorer(_scorer_config(cfg), tr, ds)
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = out_dir / f"{ds.dataset_id}-scorer.json"
    save_scorer(scorer, ckpt)
    log_path = out_dir / f"{ds.dataset_id}-training-log.jsonl"
    with log_path.open("w") as f:
        for entry in scorer.training_log:
            f.write(json.dumps(entry) + "\n")
    click.echo(f"wrote checkpoint: {ckpt}")
    click.echo(f"wrote training log: {log_path}")


@main.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True), required=True)
@shared_options
def eval_cmd(checkpoint, config_path, seed, out, formats, jobs):
    """Evaluate a saved scorer on the configured validation split."""
    cfg = _merge(_load_config(config_path), seed, out)
    ds = _load_datasets(cfg)[0]
    _, valid = _split_pair(ds, cfg)
    scorer = load_scorer(checkpoint)
    result = evaluate_split(scorer, valid, ds)
    click.echo(
        f"accuracy {result.accuracy:.2f}% on {result.n_items} items "
        f"({result.tie_count} ties)"
    )
    out_dir = Path(cfg["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{ds.dataset_id}-eval.json"
    path.write_text(json.dumps(report_mod.eval_result_doc(result), indent=2))
    click.echo(f"wrote eval: {path}")


@main.command()
@shared_options
def ablate(config_path, seed, out, formats, jobs):
    """Run the qa / answer_only / frozen ablation battery."""
    cfg = _merge(_load_config(config_path), seed, out)
    ds = _load_datasets(cfg)[0]
    tr, va = _split_pair(ds, cfg)
    results = ablation_suite(ds, _scorer_config(cfg), tr, va)
    rep = report_mod.BiasReport(
        dataset_summaries=[report_mod.dataset_summary_doc(ds)],
        ablation={m: report_mod.eval_result_doc(r) for m, r in results.items()},
        provenance=_provenance(cfg, [ds]),
    )
    _emit(rep, cfg, formats)


@main.command()
@shared_options
def transfer(config_path, seed, out, formats, jobs):
    """Train per-dataset scorers and build the cross-dataset accuracy matrix."""
    cfg = _merge(_load_config(config_path), seed, out)
    handles = _load_datasets(cfg)
    triples = [DatasetWithSplits(h, *_split_pair(h, cfg)) for h in handles]
    tm = cross_dataset_matrix(triples, _scorer_config(cfg), jobs=jobs)
    rep = report_mod.BiasReport(
        dataset_summaries=[report_mod.dataset_summary_doc(h) for h in handles],
        transfer=report_mod.transfer_doc(tm),
        provenance=_provenance(cfg, handles),
    )
    _emit(rep, cfg, formats)
    if tm.errors:
        raise click.ClickException(f"{len(tm.errors)} matrix cell(s) failed")


@main.command("annotator-matrix")
@shared_options
def annotator_matrix(config_path, seed, out, formats, jobs):
    """Inter-annotator accuracy/shift matrix with heatmap."""
    cfg = _merge(_load_config(config_path), seed, out)
    ds = _load_datasets(cfg)[0]
    acfg = cfg.get("annotators", {})
    annots = select_top_annotators(ds, acfg.get("k", 10))
    minis = build_annotator_minisplits(
        ds, annots,
        acfg.get("per_annotator_train", 1980),
        acfg.get("per_annotator_valid", 220),
        cfg["seed"],
    )
    sm = inter_annotator_matrix(ds, minis, _scorer_config(cfg))
    rep = report_mod.BiasReport(
        dataset_summaries=[report_mod.dataset_summary_doc(ds)],
        shift_matrix=report_mod.shift_matrix_doc(sm),
        provenance=_provenance(cfg, [ds]),
    )
    _emit(rep, cfg, formats)
    fig_path = figures.render_heatmap(sm, Path(cfg["out_dir"]) / "annotator_heatmap.svg")
    click.echo(f"wrote heatmap: {fig_path}")
    if sm.errors:
        raise click.ClickException(f"{len(sm.errors)} matrix cell(s) failed")


@main.command()
@shared_options
def resplit(config_path, seed, out, formats, jobs):
    """Annotator-overlap baseline vs. leave-one-annotator-out re-splits."""
    cfg = _merge(_load_config(config_path), seed, out)
    ds = _load_datasets(cfg)[0]
    acfg = cfg.get("annotators", {})
    annots = select_top_annotators(ds, acfg.get("k", 10))
    rr = non_overlap_resplit_suite(
        ds, annots, _scorer_config(cfg),
        acfg.get("per_annotator_train", 1980),
        acfg.get("per_annotator_valid", 220),
        cfg["seed"],
    )
    rep = report_mod.BiasReport(
        dataset_summaries=[report_mod.dataset_summary_doc(ds)],
        resplit=report_mod.resplit_doc(rr),
        provenance=_provenance(cfg, [ds]),
    )
    _emit(rep, cfg, formats)


@main.command()
@shared_options
def qtype(config_path, seed, out, formats, jobs):
    """Per-question-type accuracy breakdown with bar chart."""
    cfg = _merge(_load_config(config_path), seed, out)
    ds = _load_datasets(cfg)[0]
    tr, va = _split_pair(ds, cfg)
    scorer = train_scorer(_scorer_config(cfg), tr, ds)
    result = evaluate_split(scorer, va, ds)
    per_type = accuracy_by_type(result, ds)
    rep = report_mod.BiasReport(
        dataset_summaries=[report_mod.dataset_summary_doc(ds)],
        type_accuracy={t: {"accuracy": a, "n": n} for t, (a, n) in per_type.items()},
        provenance=_provenance(cfg, [ds]),
    )
    _emit(rep, cfg, formats)
    fig_path = figures.render_type_bars(per_type, Path(cfg["out_dir"]) / "type_bars.svg")
    click.echo(f"wrote figure: {fig_path}")


@main.command("report")
@shared_options
def full_report(config_path, seed, out, formats, jobs):
    """Run the probes named in the run config and emit one combined report."""
    cfg = _merge(_load_config(config_path), seed, out)
    probes = cfg.get("probes", ["ablate", "qtype"])
    handles = _load_datasets(cfg)
    ds = handles[0]
    tr, va = _split_pair(ds, cfg)
    scfg = _scorer_config(cfg)
    rep = report_mod.BiasReport(
        dataset_summaries=[report_mod.dataset_summary_doc(h) for h in handles],
        provenance=_provenance(cfg, handles),
    )
    out_dir = Path(cfg["out_dir"])
    if "ablate" in probes:
        results = ablation_suite(ds, scfg, tr, va)
        rep.ablation = {m: report_mod.eval_result_doc(r) for m, r in results.items()}
    if "transfer" in probes:
        triples = [DatasetWithSplits(h, *_split_pair(h, cfg)) for h in handles]
        rep.transfer = report_mod.transfer_doc(
            cross_dataset_matrix(triples, scfg, jobs=jobs)
        )
    acfg = cfg.get("annotators", {})
    if "annotator-matrix" in probes or "resplit" in probes:
        annots = select_top_annotators(ds, acfg.get("k", 10))
    if "annotator-matrix" in probes:
        minis = build_annotator_minisplits(
            ds, annots,
            acfg.get("per_annotator_train", 1980),
            acfg.get("per_annotator_valid", 220), cfg["seed"],
        )
        sm = inter_annotator_matrix(ds, minis, scfg)
        rep.shift_matrix = report_mod.shift_matrix_doc(sm)
    if "resplit" in probes:
        rr = non_overlap_resplit_suite(
            ds, annots, scfg,
            acfg.get("per_annotator_train", 1980),
            acfg.get("per_annotator_valid", 220), cfg["seed"],
        )
        rep.resplit = report_mod.resplit_doc(rr)
    if "qtype" in probes:
        scorer = train_scorer(scfg, tr, ds)
        result = evaluate_split(scorer, va, ds)
        per_type = accuracy_by_type(result, ds)
        rep.type_accuracy = {
            t: {"accuracy": a, "n": n} for t, (a, n) in per_type.items()
        }
    _emit(rep, cfg, formats)
    if rep.shift_matrix is not None:
        from qabias.bias import ShiftMatrix  # local rebuild

        sm_doc = rep.shift_matrix
        sm = ShiftMatrix(
            tuple(sm_doc["annotators"]),
            tuple(tuple(r) for r in sm_doc["acc"]),
            tuple(tuple(r) for r in sm_doc["shift"]),
            {},
        )
        click.echo(f"wrote heatmap: "
                   f"{figures.render_heatmap(sm, out_dir / 'annotator_heatmap.svg')}")
    if rep.type_accuracy is not None:
        bars = {t: (e["accuracy"], e["n"]) for t, e in rep.type_accuracy.items()}
        click.echo(f"wrote figure: "
                   f"{figures.render_type_bars(bars, out_dir / 'type_bars.svg')}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--storage", type=str, default=None, help="Submission log directory.")
@click.option("--threshold", type=float, default=None, help="Flag threshold.")
@click.option("--retrain-every", type=int, default=None,
              help="Retrain after every N submissions (0 = manual only).")
def serve(host, port, storage, threshold, retrain_every):
    """Start the annotation gate service."""
    import uvicorn

    from qabias.service import GateSettings, create_app

    overrides = {}
    if storage is not None:
        overrides["storage_dir"] = Path(storage)
    if threshold is not None:
        overrides["flag_threshold"] = threshold
    if retrain_every is not None:
        overrides["retrain_every"] = retrain_every
    app = create_app(GateSettings.from_env(**overrides))
    uvicorn.run(app, host=host, port=port)


def entry() -> None:
    try:
        main(standalone_mode=True)
    except QABiasError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    entry()

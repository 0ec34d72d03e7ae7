"""Command-line pipeline: synth -> prep -> train -> generate -> score,
plus benchmarking, agreement, stats, and the review service.

Every stage writes a manifest (arguments, seeds, package version) next
to its artifacts so a run can be reproduced from the output directory
alone. Relative output paths resolve under PETSUMM_DATA_ROOT when set;
checkpoint references resolve under PETSUMM_CHECKPOINT_ROOT.
"""

from __future__ import annotations

import csv
import json
import os
import secrets
import sys
import time
from pathlib import Path

import click

from . import __version__
from .corpus import load_corpus, split_corpus, save_split, write_corpus
from .deauville import ds_agreement
from .errors import PetsummError
from .generation import DecodeConfig, batch_generate
from .metrics import default_registry, score_corpus, train_scorer
from .prompts import (DECODER_ONLY, ENCODER_DECODER, INFER, TRAIN,
                      FormattedExample, StyleTokenRegistry,
                      build_decoder_only_prompt, build_encoder_decoder_input)
from .stats import compare_models, paired_exceedance_test
from .synth import SynthConfig, synth_corpus
from .training import TrainConfig, load_checkpoint, train


def _resolve_out(path: str) -> Path:
    root = os.environ.get("PETSUMM_DATA_ROOT")
    p = Path(path)
    if root and not p.is_absolute():
        return Path(root) / p
    return p


def _resolve_checkpoint(path: str) -> Path:
    root = os.environ.get("PETSUMM_CHECKPOINT_ROOT")
    p = Path(path)
    if root and not p.is_absolute() and not p.exists():
        p = Path(root) / p
    # train writes under <out>/final; accept the parent dir too
    if (not (p / "model_config.json").exists()
            and (p / "final" / "model_config.json").exists()):
        return p / "final"
    return p


def _pick_seed(seed: int | None) -> int:
    return secrets.randbelow(2 ** 31) if seed is None else seed


def _json_safe(value):
    """NaN is not valid JSON; emit null instead."""
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, float) and value != value:
        return None
    return value


def _write_manifest(out_dir: Path, command: str, args: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "args": args,
        "version": __version__,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def _load_examples(path: Path) -> list[FormattedExample]:
    examples = []
    with path.open() as fh:
        for line in fh:
            if line.strip():
                examples.append(FormattedExample(**json.loads(line)))
    return examples


def _write_examples(path: Path, examples: list[FormattedExample]) -> None:
    with path.open("w") as fh:
        for ex in examples:
            fh.write(json.dumps({
                "input_text": ex.input_text, "target_text": ex.target_text,
                "arch": ex.arch, "style_token": ex.style_token,
                "report_id": ex.report_id, "truncated": ex.truncated,
            }) + "\n")


@click.group()
@click.version_option(__version__)
def main():
    """PET report impression workbench."""


@main.command("synth")
@click.option("--cases", type=int, default=200, show_default=True)
@click.option("--styles", type=int, default=2, show_default=True,
              help="number of physicians (styles split verbose/terse)")
@click.option("--ds-count", type=int, default=0, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=str)
def synth_cmd(cases, styles, ds_count, seed, out):
    """Write a synthetic two-style corpus with known ground truth."""
    seed = _pick_seed(seed)
    out_dir = _resolve_out(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = SynthConfig(n_reports=cases, n_physicians=styles, seed=seed,
                         ds_count=ds_count)
    reports, truth = synth_corpus(config)
    write_corpus(reports, out_dir / "corpus.jsonl")
    (out_dir / "truth.json").write_text(json.dumps({
        "styles": truth.styles, "ds_values": truth.ds_values}, indent=2))
    _write_manifest(out_dir, "synth", {
        "cases": cases, "styles": styles, "ds_count": ds_count, "seed": seed})
    click.echo(f"wrote {len(reports)} reports to {out_dir / 'corpus.jsonl'}")


@main.command("prep")
@click.option("--corpus", "corpus_path", required=True, type=str)
@click.option("--out", required=True, type=str)
@click.option("--arch", type=click.Choice([ENCODER_DECODER, DECODER_ONLY, "both"]),
              default="both", show_default=True)
@click.option("--mode", type=click.Choice([TRAIN, INFER]), default=TRAIN,
              show_default=True)
@click.option("--split", "split_sizes", type=str, default=None,
              help="train,val,test sizes; also writes split.json")
@click.option("--seed", type=int, default=None)
def prep_cmd(corpus_path, out, arch, mode, split_sizes, seed):
    """Build formatted examples and the style-token registry."""
    seed = _pick_seed(seed)
    out_dir = _resolve_out(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    loaded = load_corpus(_resolve_out(corpus_path))
    if loaded.issues:
        click.echo(f"skipped {len(loaded.issues)} bad records", err=True)
    reports = loaded.reports
    registry = StyleTokenRegistry()
    registry.register_all(sorted({r.physician_id for r in reports}))
    registry.save(out_dir / "registry.json")
    if split_sizes:
        sizes = tuple(int(s) for s in split_sizes.split(","))
        save_split(split_corpus(reports, sizes, seed), out_dir / "split.json")
    archs = [ENCODER_DECODER, DECODER_ONLY] if arch == "both" else [arch]
    build = {ENCODER_DECODER: build_encoder_decoder_input,
             DECODER_ONLY: build_decoder_only_prompt}
    for a in archs:
        examples = [build[a](r, registry, mode=mode) for r in reports]
        _write_examples(out_dir / f"examples.{a}.jsonl", examples)
        click.echo(f"wrote {len(examples)} {a} examples")
    _write_manifest(out_dir, "prep", {
        "corpus": str(corpus_path), "arch": arch, "mode": mode,
        "split": split_sizes, "seed": seed,
        "registry_hash": registry.content_hash()})


@main.command("train")
@click.option("--examples", "examples_path", required=True, type=str)
@click.option("--out", required=True, type=str)
@click.option("--arch", type=click.Choice([ENCODER_DECODER, DECODER_ONLY]),
              default=ENCODER_DECODER, show_default=True)
@click.option("--model-ref", default=None,
              help="checkpoint dir or fresh spec; default matches --arch")
@click.option("--adaptation", type=click.Choice(["full", "lora"]), default="full")
@click.option("--lora-rank", type=int, default=None)
@click.option("--steps", type=int, default=300, show_default=True)
@click.option("--batch-size", type=int, default=16, show_default=True)
@click.option("--lr", type=float, default=None, help="default 5e-5 full, 1e-4 lora")
@click.option("--d-model", type=int, default=128, show_default=True)
@click.option("--layers", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=None)
def train_cmd(examples_path, out, arch, model_ref, adaptation, lora_rank,
              steps, batch_size, lr, d_model, layers, seed):
    """Fine-tune a model on formatted examples."""
    seed = _pick_seed(seed)
    out_dir = _resolve_out(out)
    examples = _load_examples(_resolve_out(examples_path))
    if model_ref is None:
        model_ref = "tiny-seq2seq" if arch == ENCODER_DECODER else "tiny-causal"
    else:
        resolved = _resolve_checkpoint(model_ref)
        if resolved.exists():
            model_ref = str(resolved)
    if arch == ENCODER_DECODER:
        model_params = {"d_model": d_model, "n_encoder_layers": layers,
                        "n_decoder_layers": layers, "d_ff": 2 * d_model}
    else:
        model_params = {"d_model": d_model, "n_layers": layers,
                        "d_ff": 2 * d_model}
    config = TrainConfig(model_ref=model_ref, arch=arch, adaptation=adaptation,
                         lora_rank=lora_rank, learning_rate=lr,
                         batch_size=batch_size, max_steps=steps, seed=seed,
                         model_params=model_params)
    run = train(config, examples, out_dir=out_dir)
    _write_manifest(out_dir, "train", {
        "examples": str(examples_path), "config": config.to_dict()})
    click.echo(f"loss {run.initial_loss:.4f} -> {run.final_loss:.4f}; "
               f"checkpoint at {run.checkpoint_dir}")


@main.command("generate")
@click.option("--checkpoint", required=True, type=str)
@click.option("--examples", "examples_path", required=True, type=str)
@click.option("--out", required=True, type=str)
@click.option("--beams", type=int, default=4, show_default=True)
@click.option("--max-new-tokens", type=int, default=256, show_default=True)
@click.option("--length-penalty", type=float, default=1.0, show_default=True)
@click.option("--no-repeat-ngram", type=int, default=3, show_default=True)
def generate_cmd(checkpoint, examples_path, out, beams, max_new_tokens,
                 length_penalty, no_repeat_ngram):
    """Decode impressions for prepared inference examples."""
    out_dir = _resolve_out(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = load_checkpoint(_resolve_checkpoint(checkpoint))
    examples = _load_examples(_resolve_out(examples_path))
    config = DecodeConfig(num_beams=beams, max_new_tokens=max_new_tokens,
                          length_penalty=length_penalty,
                          no_repeat_ngram=no_repeat_ngram)
    results = batch_generate(bundle, examples, config)
    n_err = sum(1 for g in results if g.error)
    with (out_dir / "generations.jsonl").open("w") as fh:
        for g in results:
            fh.write(json.dumps({
                "report_id": g.report_id, "text": g.text, "score": g.score,
                "truncated": g.truncated, "finish_reason": g.finish_reason,
                "error": g.error}) + "\n")
    _write_manifest(out_dir, "generate", {
        "checkpoint": str(checkpoint), "examples": str(examples_path),
        "decode": {"num_beams": beams, "max_new_tokens": max_new_tokens,
                   "length_penalty": length_penalty,
                   "no_repeat_ngram": no_repeat_ngram}})
    click.echo(f"decoded {len(results)} examples ({n_err} failed)")
    if n_err == len(results):
        sys.exit(1)


def _read_generations(path: Path) -> dict[str, str]:
    out = {}
    with path.open() as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                if not rec.get("error"):
                    out[rec["report_id"]] = rec["text"]
    return out


@main.command("score")
@click.option("--corpus", "corpus_path", required=True, type=str)
@click.option("--generations", "generations_path", required=True, type=str)
@click.option("--out", required=True, type=str)
@click.option("--scorer", "scorer_ref", default=None,
              help="checkpoint for likelihood metrics; omit for lexical only")
@click.option("--train-scorer/--no-train-scorer", "fit_scorer", default=False,
              help="fit a fresh scorer on the corpus first")
@click.option("--seed", type=int, default=None)
def score_cmd(corpus_path, generations_path, out, scorer_ref, fit_scorer, seed):
    """Score generations against reference impressions."""
    seed = _pick_seed(seed)
    out_dir = _resolve_out(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = {r.report_id: r
               for r in load_corpus(_resolve_out(corpus_path)).reports}
    generations = _read_generations(_resolve_out(generations_path))
    ids = [rid for rid in generations if rid in reports]
    pairs = [(generations[rid], reports[rid].impression) for rid in ids]
    scorer = None
    if scorer_ref:
        scorer = load_checkpoint(_resolve_checkpoint(scorer_ref))
    elif fit_scorer:
        scorer = train_scorer(
            [(r.findings, r.impression) for r in reports.values()], seed=seed)
    registry = default_registry(scorer=scorer)
    table = score_corpus(pairs, registry)
    with (out_dir / "scores.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["report_id"] + table.metric_names)
        for rid, row in zip(ids, table.rows):
            writer.writerow([rid] + [row[m] for m in table.metric_names])
    (out_dir / "means.json").write_text(
        json.dumps(_json_safe(table.means()), indent=2))
    if table.gaps:
        (out_dir / "gaps.json").write_text(json.dumps(
            [{"row": i, "metric": m, "reason": r}
             for i, m, r in table.gaps], indent=2))
    _write_manifest(out_dir, "score", {
        "corpus": str(corpus_path), "generations": str(generations_path),
        "scorer": scorer_ref, "fit_scorer": fit_scorer, "seed": seed,
        "metrics": table.metric_names})
    click.echo(f"scored {len(pairs)} pairs on {len(table.metric_names)} metrics")


@main.command("benchmark")
@click.option("--scores", "scores_path", required=True, type=str,
              help="scores.csv from the score stage")
@click.option("--human", "human_path", required=True, type=str,
              help="CSV with report_id then one column per reader")
@click.option("--out", required=True, type=str)
def benchmark_cmd(scores_path, human_path, out):
    """Rank metrics by correlation with human quality scores."""
    from .stats import HumanScoreSet, inter_reader_rho, rank_metrics

    out_dir = _resolve_out(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with _resolve_out(scores_path).open() as fh:
        reader = csv.DictReader(fh)
        metric_names = [c for c in reader.fieldnames if c != "report_id"]
        metric_rows = list(reader)
    with _resolve_out(human_path).open() as fh:
        reader = csv.DictReader(fh)
        reader_names = [c for c in reader.fieldnames if c != "report_id"]
        human_rows = {row["report_id"]: row for row in reader}
    ids = [row["report_id"] for row in metric_rows
           if row["report_id"] in human_rows]
    metric_scores = {m: [float(row[m]) for row in metric_rows
                         if row["report_id"] in human_rows]
                     for m in metric_names}
    human = HumanScoreSet({name: [float(human_rows[rid][name]) for rid in ids]
                           for name in reader_names})
    ranked = rank_metrics(metric_scores, human)
    with (out_dir / "correlations.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "spearman_rho", "n"])
        for r in ranked:
            writer.writerow([r.name, f"{r.rho:.6f}", r.n])
    ceiling = inter_reader_rho(human) if len(reader_names) > 1 else None
    (out_dir / "summary.json").write_text(json.dumps({
        "inter_reader_rho": ceiling,
        "best_metric": ranked[0].name if ranked else None}, indent=2))
    _write_manifest(out_dir, "benchmark", {
        "scores": str(scores_path), "human": str(human_path)})
    click.echo(f"ranked {len(ranked)} metrics over {len(ids)} items")


@main.command("deauville")
@click.option("--corpus", "corpus_path", required=True, type=str)
@click.option("--generations", "generations_path", required=True, type=str)
@click.option("--out", required=True, type=str)
@click.option("--seed", type=int, default=None)
def deauville_cmd(corpus_path, generations_path, out, seed):
    """Five-point score agreement between references and generations."""
    seed = _pick_seed(seed)
    out_dir = _resolve_out(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = {r.report_id: r
               for r in load_corpus(_resolve_out(corpus_path)).reports}
    generations = _read_generations(_resolve_out(generations_path))
    ids = [rid for rid in generations if rid in reports]
    agreement = ds_agreement([reports[rid].impression for rid in ids],
                             [generations[rid] for rid in ids], seed=seed)
    (out_dir / "agreement.json").write_text(json.dumps(_json_safe({
        "n_total": agreement.n_total, "n_used": agreement.n_used,
        "n_ref_only": agreement.n_ref_only,
        "n_cand_only": agreement.n_cand_only,
        "n_neither": agreement.n_neither,
        "accuracy": agreement.accuracy,
        "accuracy_ci": [agreement.accuracy_lo, agreement.accuracy_hi],
        "kappa": agreement.kappa,
        "kappa_ci": [agreement.kappa_lo, agreement.kappa_hi],
        "confusion": agreement.confusion.tolist()}), indent=2))
    _write_manifest(out_dir, "deauville", {
        "corpus": str(corpus_path), "generations": str(generations_path),
        "seed": seed})
    click.echo(f"agreement over {agreement.n_used} double-scored cases")


@main.group("stats")
def stats_group():
    """Model comparison and significance testing."""


@stats_group.command("grid")
@click.option("--means", "means_paths", required=True, multiple=True, type=str,
              help="model=means.json, repeatable")
@click.option("--out", required=True, type=str)
def grid_cmd(means_paths, out):
    """Min-max normalized comparison grid across models."""
    out_dir = _resolve_out(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scores = {}
    for spec in means_paths:
        model, _, path = spec.partition("=")
        if not path:
            raise click.UsageError("--means expects model=means.json")
        scores[model] = json.loads(_resolve_out(path).read_text())
    common = set.intersection(*(set(v) for v in scores.values()))
    scores = {m: {k: v[k] for k in sorted(common)} for m, v in scores.items()}
    grid = compare_models(scores)
    with (out_dir / "grid.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["model"] + [
            c for m in grid.metrics for c in (m, f"{m}_marker")])
        writer.writeheader()
        for row in grid.as_rows():
            writer.writerow({k: row.get(k, "") for k in writer.fieldnames})
    _write_manifest(out_dir, "stats grid", {"means": list(means_paths)})
    click.echo(f"grid over {len(grid.models)} models, {len(grid.metrics)} metrics")


@stats_group.command("exceedance")
@click.option("--a", "path_a", required=True, type=str)
@click.option("--b", "path_b", required=True, type=str)
@click.option("--column", required=True, type=str)
@click.option("--trials", type=int, default=10000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=str)
def exceedance_cmd(path_a, path_b, column, trials, seed, out):
    """Paired bootstrap comparison of one metric column."""
    seed = _pick_seed(seed)
    out_dir = _resolve_out(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def read_column(path):
        with _resolve_out(path).open() as fh:
            rows = list(csv.DictReader(fh))
        return {row["report_id"]: float(row[column]) for row in rows}

    a, b = read_column(path_a), read_column(path_b)
    ids = sorted(set(a) & set(b))
    if not ids:
        raise click.UsageError("no shared report ids between the tables")
    result = paired_exceedance_test([a[i] for i in ids], [b[i] for i in ids],
                                    n_boot=trials, seed=seed)
    (out_dir / "exceedance.json").write_text(json.dumps({
        "column": column, "n": len(ids), "exceedance": result.exceedance,
        "significant": result.significant, "direction": result.direction,
        "mean_diff": result.mean_diff, "ci": [result.lo, result.hi],
        "n_boot": result.n_boot, "seed": result.seed}, indent=2))
    _write_manifest(out_dir, "stats exceedance", {
        "a": path_a, "b": path_b, "column": column, "trials": trials,
        "seed": seed})
    click.echo(f"exceedance {result.exceedance:.4f} "
               f"({'significant' if result.significant else 'not significant'})")


@main.command("serve")
@click.option("--config", "config_path", default=None, type=str)
@click.option("--host", default=None, type=str)
@click.option("--port", default=None, type=int)
@click.option("--data-dir", default=None, type=str)
@click.option("--token", default=None, type=str)
@click.option("--load-cases", "cases_path", default=None, type=str,
              help="JSONL of review cases to preload")
def serve_cmd(config_path, host, port, data_dir, token, cases_path):
    """Run the blinded review service."""
    from .readerstudy import ReviewCase, ServiceConfig, build_app

    config = ServiceConfig.load(config_path)
    if host:
        config.host = host
    if port:
        config.port = port
    if data_dir:
        config.data_dir = data_dir
    if token:
        config.token = token
    app = build_app(config)
    if cases_path:
        cases = []
        with _resolve_out(cases_path).open() as fh:
            for line in fh:
                if line.strip():
                    cases.append(ReviewCase(**json.loads(line)))
        app.state.study.add_cases(cases)
        click.echo(f"preloaded {len(cases)} cases")
    import uvicorn
    uvicorn.run(app, host=config.host, port=config.port)


def _cli_entry():
    try:
        main(standalone_mode=True)
    except PetsummError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    _cli_entry()

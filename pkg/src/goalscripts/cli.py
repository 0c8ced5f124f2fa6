"""Command-line surface: reproducible ingest/split/build/run/eval workflows.

Anything with more than a few knobs lives in a JSON config file; flags
override config values. Every command writes a frozen copy of the
effective config next to its outputs.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import click

from . import corpus as corpus_mod
from . import events as events_mod
from . import metrics as metrics_mod
from . import pipeline as pipeline_mod
from . import task as task_mod
from .scorers import (
    OracleOrderer,
    OracleRelevanceScorer,
    ScorerConfig,
    ScorerError,
    build_lexical_scorer,
    build_orderer,
    build_relevance_scorer,
)


class ConfigError(click.ClickException):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise ConfigError(f"config: file not found: {path}")
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _effective(config: dict, overrides: dict) -> dict:
    merged = dict(config)
    for key, value in overrides.items():
        if value is not None:
            merged[key] = value
    return merged


def _require(config: dict, key: str):
    if key not in config or config[key] is None:
        raise ConfigError(f"{key}: required but not set")
    return config[key]


def _freeze_config(config: dict, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as f:
        json.dump(config, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")


def _load_split_corpus(config: dict) -> corpus_mod.Corpus:
    corpus = corpus_mod.load_corpus(
        _require(config, "corpus"), language=config.get("language", "en")
    )
    split_path = config.get("split")
    if split_path:
        corpus = corpus_mod.load_split_manifest(corpus, split_path)
    else:
        corpus = corpus_mod.split_corpus(corpus, int(_require(config, "seed")))
    return corpus


def _scorer_config(config: dict, section: str, seed: int | None) -> ScorerConfig:
    raw = config.get(section)
    if raw is None:
        raise ConfigError(f"{section}: required but not set")
    return ScorerConfig(
        kind=_require(raw, "kind"),
        seed=raw.get("seed", seed),
        endpoint=raw.get("endpoint"),
        batch_size=int(raw.get("batch_size", 64)),
        language=raw.get("language", config.get("language", "")),
        parameters=raw.get("parameters", {}),
    )


@click.group()
def main():
    """Goal-oriented script construction toolkit."""


@main.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--language", default="en", show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Validated corpus file.")
def ingest(path, language, out):
    """Validate a corpus dump and print its statistics."""
    try:
        corpus = corpus_mod.load_corpus(path, language=language)
    except corpus_mod.CorpusError as e:
        raise click.ClickException(str(e))
    stats = corpus_mod.corpus_stats(corpus)
    if out:
        corpus_mod.save_corpus(corpus, out)
    click.echo(json.dumps(stats, sort_keys=True, indent=2))


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--language", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True, help="Split manifest path.")
def split(config_path, corpus_path, language, seed, out):
    """Hold out 10% of scripts as the test split (seeded, deterministic)."""
    config = _effective(
        _load_config(config_path),
        {"corpus": corpus_path, "language": language, "seed": seed},
    )
    corpus = corpus_mod.load_corpus(
        _require(config, "corpus"), language=config.get("language", "en")
    )
    try:
        corpus = corpus_mod.split_corpus(corpus, int(_require(config, "seed")))
    except corpus_mod.CorpusError as e:
        raise click.ClickException(str(e))
    corpus_mod.save_split_manifest(corpus, out)
    click.echo(f"wrote split manifest for {len(corpus.scripts)} scripts to {out}")


@main.command("build-tasks")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--split", "split_path", type=click.Path(), default=None)
@click.option("--language", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
def build_tasks(config_path, corpus_path, split_path, language, seed, out):
    """Build retrieval task instances from the test split."""
    config = _effective(
        _load_config(config_path),
        {"corpus": corpus_path, "split": split_path, "language": language, "seed": seed},
    )
    corpus = _load_split_corpus(config)
    tasks = task_mod.build_all_retrieval_tasks(corpus)
    task_mod.save_tasks(tasks, out)
    click.echo(f"wrote {len(tasks)} task instances to {out}")


@main.command("emit-training")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--corpus", "corpus_path", type=click.Path(), default=None)
@click.option("--split", "split_path", type=click.Path(), default=None)
@click.option("--language", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def emit_training(config_path, corpus_path, split_path, language, seed, out_dir):
    """Emit goal-step inference and step-ordering training files."""
    config = _effective(
        _load_config(config_path),
        {"corpus": corpus_path, "split": split_path, "language": language, "seed": seed},
    )
    corpus = _load_split_corpus(config)
    run_seed = int(_require(config, "seed"))
    os.makedirs(out_dir, exist_ok=True)
    pipeline_mod.save_training_pairs(
        pipeline_mod.emit_inference_training_data(corpus, run_seed),
        os.path.join(out_dir, "inference.jsonl"),
    )
    pipeline_mod.save_training_pairs(
        pipeline_mod.emit_ordering_training_data(corpus, run_seed),
        os.path.join(out_dir, "ordering.jsonl"),
    )
    _freeze_config(config, out_dir)
    click.echo(f"wrote training files to {out_dir}")


def _build_scorers(config: dict, task: task_mod.TaskInstance | None, seed: int):
    rel_cfg = _scorer_config(config, "relevance_scorer", seed)
    ord_cfg = _scorer_config(config, "ordering_scorer", seed)
    train_corpus = None
    if "lexical-tfidf" in (rel_cfg.kind,) or "position-stats" in (ord_cfg.kind,):
        train_corpus = _load_split_corpus(config)
    if rel_cfg.kind == "oracle":
        relevance = OracleRelevanceScorer(task.gold if task else ())
    else:
        relevance = build_relevance_scorer(rel_cfg, train_corpus)
    if ord_cfg.kind == "oracle":
        orderer = OracleOrderer(task.gold if task else ())
    else:
        orderer = build_orderer(ord_cfg, train_corpus)
    return relevance, orderer


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--tasks", "tasks_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--mode", type=click.Choice(["top-l", "threshold"]), default=None)
@click.option("--threshold", type=float, default=None)
def run(config_path, tasks_path, seed, jobs, out_dir, mode, threshold):
    """Construct scripts for every task; write constructed scripts,
    relevance rankings, and ordering-module outputs."""
    config = _effective(
        _load_config(config_path),
        {"tasks": tasks_path, "seed": seed, "mode": mode, "threshold": threshold},
    )
    config.setdefault("mode", "top-l")
    config.setdefault("threshold", pipeline_mod.DEFAULT_THRESHOLD)
    tasks = task_mod.load_tasks(_require(config, "tasks"))
    run_seed = int(_require(config, "seed"))
    prefilter_k = config.get("prefilter_k")

    # oracle scorers are per-task; others are shared across tasks
    rel_kind = _scorer_config(config, "relevance_scorer", run_seed).kind
    ord_kind = _scorer_config(config, "ordering_scorer", run_seed).kind
    shared = None
    if rel_kind != "oracle" and ord_kind != "oracle":
        shared = _build_scorers(config, None, run_seed)

    prefilter = None
    if prefilter_k:
        prefilter = build_lexical_scorer(_load_split_corpus(config))

    def construct_one(task: task_mod.TaskInstance):
        relevance, orderer = shared or _build_scorers(config, task, run_seed)
        ranked = pipeline_mod.retrieve_steps(task, relevance)
        script = pipeline_mod.construct(
            task, relevance, orderer, mode=config["mode"],
            threshold=float(config["threshold"]),
            prefilter=prefilter, prefilter_k=prefilter_k or 0,
        )
        if task.ordered and len(task.gold) >= 2:
            gold_ranked = [
                pipeline_mod.RankedCandidate(text=t, score=1.0, index=i)
                for i, t in enumerate(task.gold)
            ]
            model_order = [
                r.text for r in pipeline_mod.order_steps(task.goal, gold_ranked, orderer)
            ]
        else:
            model_order = list(task.gold)
        return ranked, script, model_order

    try:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(construct_one, tasks))
        else:
            results = [construct_one(t) for t in tasks]
    except (ScorerError, pipeline_mod.PipelineError) as e:
        raise click.ClickException(str(e))

    os.makedirs(out_dir, exist_ok=True)
    pipeline_mod.save_constructed([r[1] for r in results],
                                  os.path.join(out_dir, "constructed.jsonl"))
    with open(os.path.join(out_dir, "rankings.jsonl"), "w", encoding="utf-8") as f:
        for task, (ranked, _, _) in zip(tasks, results):
            rec = {"goal": task.goal, "ranked": [r.text for r in ranked]}
            f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    with open(os.path.join(out_dir, "gold_orderings.jsonl"), "w", encoding="utf-8") as f:
        for task, (_, _, model_order) in zip(tasks, results):
            rec = {"goal": task.goal, "ordered_gold": model_order}
            f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    _freeze_config(config, out_dir)
    click.echo(f"constructed {len(results)} scripts in {out_dir}")


@main.command()
@click.option("--tasks", "tasks_path", type=click.Path(exists=True), required=True)
@click.option("--run-dir", type=click.Path(exists=True), required=True)
@click.option("--ks", default="25,50", show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def eval(tasks_path, run_dir, ks, out_dir):
    """Evaluate a run directory against its task file."""
    tasks = task_mod.load_tasks(tasks_path)
    constructed = pipeline_mod.load_constructed(
        os.path.join(run_dir, "constructed.jsonl")
    )
    rankings = None
    rankings_path = os.path.join(run_dir, "rankings.jsonl")
    if os.path.exists(rankings_path):
        rankings = []
        with open(rankings_path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    rankings.append(json.loads(line)["ranked"])
    orderings = None
    orderings_path = os.path.join(run_dir, "gold_orderings.jsonl")
    if os.path.exists(orderings_path):
        orderings = []
        with open(orderings_path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    orderings.append(json.loads(line)["ordered_gold"])
    try:
        report = metrics_mod.evaluate_run(
            tasks,
            constructed,
            ks=tuple(int(k) for k in ks.split(",")),
            rankings=rankings,
            model_orderings=orderings,
        )
    except metrics_mod.MetricError as e:
        raise click.ClickException(str(e))
    os.makedirs(out_dir, exist_ok=True)
    metrics_mod.save_report(report, os.path.join(out_dir, "report.json"))
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as f:
        f.write(report.to_table() + "\n")
    click.echo(report.to_table())


@main.command("convert-esd")
@click.option("--input", "input_path", type=click.Path(exists=True), required=True)
@click.option("--pool", type=click.Choice(["representatives-only", "all-esds"]),
              default="representatives-only", show_default=True)
@click.option("--out", type=click.Path(), required=True)
def convert_esd(input_path, pool, out):
    """Convert an ESD-style corpus into retrieval task instances."""
    scenarios = task_mod.load_esd_scenarios(input_path)
    try:
        tasks = [task_mod.convert_esd(s, scenarios, pool=pool) for s in scenarios]
    except task_mod.TaskError as e:
        raise click.ClickException(str(e))
    task_mod.save_tasks(tasks, out)
    click.echo(f"converted {len(tasks)} scenarios to {out}")


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--ontology", "ontology_path", type=click.Path(), default=None)
@click.option("--events", "events_path", type=click.Path(), default=None)
@click.option("--goal", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--threshold", type=float, default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def events(config_path, ontology_path, events_path, goal, seed, threshold, out_dir):
    """Instantiate event templates and construct a narrative script."""
    config = _effective(
        _load_config(config_path),
        {"ontology": ontology_path, "events": events_path, "goal": goal,
         "seed": seed, "threshold": threshold},
    )
    config.setdefault("threshold", pipeline_mod.DEFAULT_THRESHOLD)
    try:
        ontology = events_mod.load_ontology(_require(config, "ontology"))
        instances = events_mod.load_events(_require(config, "events"))
        pool = events_mod.build_event_pool(instances, ontology)
        relevance, orderer = _build_scorers(config, None, int(_require(config, "seed")))
        script, event_types = events_mod.construct_narrative(
            _require(config, "goal"), pool, relevance, orderer,
            threshold=float(config["threshold"]),
        )
    except (events_mod.OntologyError, ScorerError) as e:
        raise click.ClickException(str(e))
    os.makedirs(out_dir, exist_ok=True)
    record = script.to_record()
    for step, etype in zip(record["steps"], event_types):
        step["event_type"] = etype
    with open(os.path.join(out_dir, "narrative.json"), "w", encoding="utf-8") as f:
        json.dump(record, f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    _freeze_config(config, out_dir)
    if not script.steps:
        click.echo("no steps above threshold (empty script)", err=True)
    click.echo(f"wrote narrative script with {len(script.steps)} steps to {out_dir}")


if __name__ == "__main__":
    sys.exit(main())

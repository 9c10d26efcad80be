"""Command-line surface for the full pipeline.

Commands: synthesize, build-graph, stats, embed, train, grid-search,
evaluate, inspect-attention, export-embeddings.  Every command resolves
its configuration (defaults < config file < flags, last wins), requires
an explicit --seed wherever randomness is involved, writes its outputs
deterministically, and records a run manifest (resolved config, input
hashes, seed, outputs, timings) next to them.

Errors exit nonzero with a single machine-parsable line:
``error[CODE] message``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .embeddings import (
    EmbeddingTable,
    load_embeddings,
    random_author_embeddings,
    save_embeddings,
)
from .graph import (
    GraphError,
    build_social_graph,
    load_graph,
    load_retweet_events,
    save_graph,
    stats as graph_stats,
)
from .jsonl import JsonlError
from .manifest import make_manifest, write_json_atomic
from .metrics import METRIC_FUNCS, per_class_report, significance_matrix
from .model import (
    FusionModel,
    ModelConfig,
    VARIANTS,
    frequency_baseline,
    load_checkpoint,
    save_checkpoint,
)
from .pca import pca_2d
from .rng import Rng
from .sgns import SkipgramConfig, node2vec, train_pv_dbow
from .synth import (
    PlantedSpec,
    SynthSpec,
    SynthSpecError,
    generate,
    generate_planted_signal,
    write_corpus_jsonl,
)
from .text import CorpusError, TASK_LABELS, Vocab, load_corpus, load_timelines, oov_rate
from .train import (
    GridPoint,
    MultiRunResult,
    TrainConfig,
    expand_grid,
    grid_search,
    multi_run,
    train_model,
)
from .metrics import ConfusionMatrix
from .walks import WalkConfig

REPORT_SCHEMA = 1


class CliError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


def _read_config_file(path) -> dict:
    """Flat key=value file; '#' starts a comment."""
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CliError("E_CONFIG", f"{path}:{lineno}: expected key=value")
                key, value = line.split("=", 1)
                out[key.strip()] = value.strip()
    except OSError as exc:
        raise CliError("E_INPUT", f"cannot read config file {path}: {exc}") from exc
    return out


def _resolve(args, names: dict) -> dict:
    """defaults < config file < explicit flags, last wins."""
    resolved = dict(names)
    if getattr(args, "config", None):
        file_conf = _read_config_file(args.config)
        unknown = set(file_conf) - set(names)
        if unknown:
            raise CliError("E_CONFIG", f"unknown config keys: {sorted(unknown)}")
        for key, raw in file_conf.items():
            caster = type(names[key]) if names[key] is not None else str
            try:
                resolved[key] = caster(raw) if caster is not bool else raw.lower() in ("1", "true", "yes")
            except ValueError as exc:
                raise CliError("E_CONFIG", f"bad value for {key}: {raw!r}") from exc
    for key in names:
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
    return resolved


def _require_seed(args) -> int:
    if getattr(args, "seed", None) is None:
        raise CliError("E_SEED", "an explicit --seed is required for this command")
    return int(args.seed)


def _outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _finish(command, args, config, inputs, outputs, seed, t0):
    path = os.path.join(args.out, "manifest.json") if os.path.isdir(args.out) else str(args.out) + ".manifest.json"
    manifest = make_manifest(
        command, config, inputs, outputs, seed, __version__, round(time.time() - t0, 3)
    )
    write_json_atomic(path, manifest)
    return manifest


def _load_graph_dir(path):
    edges = os.path.join(path, "graph.edges")
    meta = os.path.join(path, "graph.meta.json")
    for p in (edges, meta):
        if not os.path.exists(p):
            raise CliError("E_INPUT", f"graph file missing: {p}")
    return load_graph(edges, meta), [edges, meta]


# -------------------------------------------------------------------- commands


def cmd_synthesize(args) -> int:
    t0 = time.time()
    seed = _require_seed(args)
    out = _outdir(args.out)
    if args.kind == "partition":
        names = dict(
            n_users=2000, n_classes=3, homophily=0.9, text_signal=0.6,
            author_signal=0.9, intra_rate=0.02, inter_rate=0.004,
            tweets_per_user=2, communities_per_class=2, muted_communities=1,
            tokens_per_tweet=8, timeline_posts_per_user=2,
        )
        conf = _resolve(args, names)
        spec = SynthSpec(seed=seed, **conf)
        data = generate(spec)
        outputs = []
        for name, records in (
            ("corpus.jsonl", data.corpus),
            ("retweets.jsonl", data.events),
            ("timelines.jsonl", data.timelines),
        ):
            path = os.path.join(out, name)
            write_corpus_jsonl(records, path)
            outputs.append(path)
        truth_path = os.path.join(out, "truth.json")
        write_json_atomic(truth_path, {"task": data.task, **data.truth})
        outputs.append(truth_path)
    else:
        names = dict(n_targets=300, n_distractors=8, n_classes=2, dim=16,
                     beacon_scale=2.5, class_scale=1.0, noise_scale=0.15)
        conf = _resolve(args, names)
        spec = PlantedSpec(seed=seed, **conf)
        data = generate_planted_signal(spec)
        outputs = []
        for name, records in (("corpus.jsonl", data.corpus), ("retweets.jsonl", data.events)):
            path = os.path.join(out, name)
            write_corpus_jsonl(records, path)
            outputs.append(path)
        table = EmbeddingTable(spec.dim)
        for uid, vec in data.embeddings.items():
            table.add(uid, vec)
        emb_path = os.path.join(out, "embeddings.txt")
        save_embeddings(table, emb_path)
        outputs.append(emb_path)
        truth_path = os.path.join(out, "truth.json")
        write_json_atomic(truth_path, {"task": data.task, **data.truth})
        outputs.append(truth_path)
    conf["kind"] = args.kind
    _finish("synthesize", args, conf, [], outputs, seed, t0)
    print(f"wrote {len(outputs)} files to {out}")
    return 0


def _print_stats_block(s) -> None:
    print("nodes:      ", s.node_count)
    print("edges:      ", s.edge_count)
    print("density:    ", "undefined" if s.density is None else f"{s.density:.6f}")
    print("components: ", s.component_count)
    print("homophily:  ", "undefined" if s.homophily is None else f"{s.homophily:.4f}")


def cmd_build_graph(args) -> int:
    t0 = time.time()
    out = _outdir(args.out)
    corpus = load_corpus(args.corpus, args.task, seed=args.seed)
    events, errors = load_retweet_events(args.retweets)
    for err in errors:
        print(f"warning: {err}", file=sys.stderr)
    g = build_social_graph(corpus.author_labels(), events, external_threshold=args.external_threshold)
    edges_path = os.path.join(out, "graph.edges")
    meta_path = os.path.join(out, "graph.meta.json")
    save_graph(g, edges_path, meta_path)
    s = graph_stats(g)
    stats_path = os.path.join(out, "stats.json")
    write_json_atomic(stats_path, {"schema_version": REPORT_SCHEMA, **s.to_dict()})
    _print_stats_block(s)
    _finish(
        "build-graph", args,
        {"task": args.task, "external_threshold": args.external_threshold},
        [args.corpus, args.retweets], [edges_path, meta_path, stats_path], args.seed, t0,
    )
    return 0


def cmd_stats(args) -> int:
    t0 = time.time()
    g, graph_files = _load_graph_dir(args.graph)
    s = graph_stats(g)
    _print_stats_block(s)
    if args.json:
        write_json_atomic(args.json, {"schema_version": REPORT_SCHEMA, **s.to_dict()})
        manifest = make_manifest("stats", {}, graph_files, [args.json], None,
                                 __version__, round(time.time() - t0, 3))
        write_json_atomic(str(args.json) + ".manifest.json", manifest)
    return 0


def cmd_embed(args) -> int:
    t0 = time.time()
    seed = _require_seed(args)
    inputs = []
    if args.method == "n2v":
        if not args.graph:
            raise CliError("E_INPUT", "method n2v needs --graph")
        g, inputs = _load_graph_dir(args.graph)
        conf = _resolve(args, dict(
            dim=200, epochs=20, walk_length=80, walks_per_node=10,
            window=10, negatives=5, p=1.0, q=1.0, min_count=0, learning_rate=0.025,
        ))
        table = node2vec(
            g,
            WalkConfig(p=conf["p"], q=conf["q"], walk_length=conf["walk_length"],
                       walks_per_node=conf["walks_per_node"]),
            SkipgramConfig(window=conf["window"], negatives=conf["negatives"],
                           epochs=conf["epochs"], min_count=conf["min_count"],
                           learning_rate=conf["learning_rate"]),
            Rng(seed),
            dim=conf["dim"],
        )
    elif args.method == "pv":
        if not args.timelines:
            raise CliError("E_INPUT", "method pv needs --timelines")
        docs = load_timelines(args.timelines)
        inputs = [args.timelines]
        conf = _resolve(args, dict(
            dim=200, epochs=30, min_count=5, negatives=5, window=10, learning_rate=0.025,
        ))
        table = train_pv_dbow(
            docs,
            SkipgramConfig(window=conf["window"], negatives=conf["negatives"],
                           epochs=conf["epochs"], min_count=conf["min_count"],
                           learning_rate=conf["learning_rate"]),
            Rng(seed),
            dim=conf["dim"],
        )
    else:  # random
        if not args.corpus or not args.task:
            raise CliError("E_INPUT", "method random needs --corpus and --task")
        corpus = load_corpus(args.corpus, args.task, seed=seed)
        inputs = [args.corpus]
        conf = _resolve(args, dict(dim=200))
        table = random_author_embeddings(corpus.authors(), conf["dim"], Rng(seed))
    save_embeddings(table, args.out)
    conf["method"] = args.method
    _finish("embed", args, conf, inputs, [args.out], seed, t0)
    print(f"wrote {len(table)} vectors of dim {table.dim} to {args.out}")
    return 0


def _build_model_for_training(variant, task, corpus, conf, seed, author_table, graph, word_vectors):
    cfg = ModelConfig(
        variant=variant, task=task,
        word_dim=conf["word_dim"], text_hidden=conf["text_hidden"],
        author_dim=author_table.dim if author_table is not None else conf["author_dim"],
        gat_hidden=conf["gat_hidden"], gat_heads=conf["gat_heads"],
        classifier_hidden=conf["classifier_hidden"], max_tokens=conf["max_tokens"],
    )
    vocab = Vocab.from_corpus(corpus)
    model = FusionModel.build(
        cfg, vocab, Rng(seed).child("model"),
        word_vectors=word_vectors, author_table=author_table, graph=graph,
    )
    return model, vocab


MODEL_CONF_DEFAULTS = dict(
    word_dim=200, text_hidden=50, author_dim=200, gat_hidden=50, gat_heads=2,
    classifier_hidden=50, max_tokens=64,
    batch_size=16, dropout=0.0, l2=0.0, max_epochs=50, patience=5, lr=0.001,
)


def _train_inputs(args):
    inputs = [args.corpus]
    word_vectors = None
    if args.word_vectors:
        word_vectors = load_embeddings(args.word_vectors)
        inputs.append(args.word_vectors)
    graph = None
    if args.graph:
        graph, graph_files = _load_graph_dir(args.graph)
        inputs.extend(graph_files)
    author_table = None
    if args.author_embeddings:
        author_table = load_embeddings(args.author_embeddings)
        inputs.append(args.author_embeddings)
    return inputs, word_vectors, graph, author_table


def _frequency_run(corpus, seed) -> dict:
    labels = [ex.label for ex in corpus.split("train")]
    sampler = frequency_baseline(labels, Rng(seed).child("freq"), n_classes=corpus.n_classes)
    cm = ConfusionMatrix(corpus.n_classes)
    for ex in corpus.split("test"):
        cm.add(ex.label, sampler.sample())
    metric = METRIC_FUNCS[corpus.metric_name](cm)
    return {
        "seed": seed,
        "best_val_metric": None,
        "test_metric": metric,
        "best_epoch": 0,
        "epochs_trained": 0,
        "val_history": [],
        "per_class": per_class_report(cm, list(corpus.label_names)),
        "confusion": cm.counts.tolist(),
        "checkpoint_hash": None,
    }


def cmd_train(args) -> int:
    t0 = time.time()
    seed = _require_seed(args)
    out = _outdir(args.out)
    if args.variant not in VARIANTS:
        raise CliError("E_VARIANT", f"unknown variant {args.variant}; one of {VARIANTS}")
    corpus = load_corpus(args.corpus, args.task, seed=seed)
    inputs, word_vectors, graph, author_table = _train_inputs(args)
    conf = _resolve(args, dict(MODEL_CONF_DEFAULTS))
    if args.variant == "LING_RANDOM" and author_table is None:
        author_table = random_author_embeddings(
            corpus.authors(), conf["author_dim"], Rng(seed).child("authors")
        )
    seeds = [seed] if not args.seeds else [int(s) for s in args.seeds.split(",")]
    outputs = []

    if args.variant == "FREQUENCY":
        runs = [_frequency_run(corpus, s) for s in seeds]
        metrics = [r["test_metric"] for r in runs]
        result = {
            "schema_version": REPORT_SCHEMA,
            "variant": args.variant,
            "task": args.task,
            "metric_name": corpus.metric_name,
            "mean": float(np.mean(metrics)),
            "std": float(np.std(metrics, ddof=1)) if len(metrics) > 1 else 0.0,
            "test_metrics": metrics,
            "runs": runs,
        }
        runs_path = os.path.join(out, "runs.json")
        write_json_atomic(runs_path, result)
        outputs.append(runs_path)
        print(f"{args.variant} {corpus.metric_name}: mean {result['mean']:.4f}")
        _finish("train", args, {**conf, "variant": args.variant, "task": args.task,
                                "seeds": seeds}, inputs, outputs, seed, t0)
        return 0

    def run_one(run_seed: int):
        model, vocab = _build_model_for_training(
            args.variant, args.task, corpus, conf, run_seed, author_table, graph, word_vectors
        )
        tc = TrainConfig(
            batch_size=conf["batch_size"], dropout=conf["dropout"], l2=conf["l2"],
            max_epochs=conf["max_epochs"], patience=conf["patience"],
            seed=run_seed, lr=conf["lr"],
        )
        result = train_model(model, corpus, tc)
        ck_path = os.path.join(out, f"checkpoint_seed{run_seed}.zip")
        result.checkpoint_hash = save_checkpoint(
            model, ck_path, extra={"train_config": tc.to_dict()}
        )
        outputs.append(ck_path)
        return result

    print(f"training {args.variant} on {args.task}; "
          f"val OOV rate {oov_rate(corpus.split('val'), Vocab.from_corpus(corpus)):.3f}")
    if len(seeds) == 1:
        result = run_one(seeds[0])
        run_path = os.path.join(out, "runresult.json")
        write_json_atomic(run_path, {
            "schema_version": REPORT_SCHEMA, "variant": args.variant,
            "task": args.task, "metric_name": corpus.metric_name, **result.to_dict(),
        })
        outputs.append(run_path)
        print(f"{args.variant} {corpus.metric_name}: test {result.test_metric:.4f} "
              f"(best val {result.best_val_metric:.4f} at epoch {result.best_epoch})")
    else:
        mr = multi_run(run_one, seeds)
        runs_path = os.path.join(out, "runs.json")
        write_json_atomic(runs_path, {
            "schema_version": REPORT_SCHEMA, "variant": args.variant,
            "task": args.task, "metric_name": corpus.metric_name, **mr.to_dict(),
        })
        outputs.append(runs_path)
        print(f"{args.variant} {corpus.metric_name}: mean {mr.mean:.4f} +- {mr.std:.4f} over {len(seeds)} seeds")
    _finish("train", args, {**conf, "variant": args.variant, "task": args.task, "seeds": seeds},
            inputs, outputs, seed, t0)
    return 0


def cmd_grid_search(args) -> int:
    t0 = time.time()
    seed = _require_seed(args)
    out = _outdir(args.out)
    corpus = load_corpus(args.corpus, args.task, seed=seed)
    inputs, word_vectors, graph, author_table = _train_inputs(args)
    conf = _resolve(args, dict(MODEL_CONF_DEFAULTS))

    def parse_list(text, caster):
        return tuple(caster(x) for x in text.split(","))

    grid_kwargs = {}
    if args.batch_sizes:
        grid_kwargs["batch_sizes"] = parse_list(args.batch_sizes, int)
    if args.dropouts:
        grid_kwargs["dropouts"] = parse_list(args.dropouts, float)
    if args.l2s:
        grid_kwargs["l2s"] = parse_list(args.l2s, float)
    if args.gat_hiddens:
        grid_kwargs["gat_hiddens"] = parse_list(args.gat_hiddens, int)
    if args.gat_head_counts:
        grid_kwargs["gat_heads"] = parse_list(args.gat_head_counts, int)

    if args.variant == "LING_RANDOM" and author_table is None:
        author_table = random_author_embeddings(
            corpus.authors(), conf["author_dim"], Rng(seed).child("authors")
        )

    def run_point(point: GridPoint):
        point_conf = dict(conf)
        point_conf["batch_size"] = point.batch_size
        point_conf["dropout"] = point.dropout
        point_conf["l2"] = point.l2
        if point.gat_hidden is not None:
            point_conf["gat_hidden"] = point.gat_hidden
            point_conf["gat_heads"] = point.gat_heads
        model, _ = _build_model_for_training(
            args.variant, args.task, corpus, point_conf, seed, author_table, graph, word_vectors
        )
        tc = TrainConfig(
            batch_size=point.batch_size, dropout=point.dropout, l2=point.l2,
            max_epochs=conf["max_epochs"], patience=conf["patience"], seed=seed, lr=conf["lr"],
        )
        return train_model(model, corpus, tc)

    best_point, best_result, leaderboard = grid_search(run_point, args.variant, **grid_kwargs)
    board_path = os.path.join(out, "leaderboard.json")
    write_json_atomic(board_path, {
        "schema_version": REPORT_SCHEMA,
        "variant": args.variant,
        "task": args.task,
        "metric_name": corpus.metric_name,
        "best_config": best_point.to_dict(),
        "best_val_metric": best_result.best_val_metric,
        "best_test_metric": best_result.test_metric,
        "leaderboard": leaderboard,
    })
    print(f"best config: {best_point.to_dict()} "
          f"(val {best_result.best_val_metric:.4f}, test {best_result.test_metric:.4f})")
    _finish("grid-search", args, {**conf, "variant": args.variant, "grid": grid_kwargs,
                                  "task": args.task}, inputs, [board_path], seed, t0)
    return 0


def cmd_evaluate(args) -> int:
    t0 = time.time()
    outputs = []
    if args.runs:
        runsets = {}
        inputs = []
        for item in args.runs:
            if "=" not in item:
                raise CliError("E_INPUT", f"--runs expects NAME=FILE, got {item!r}")
            name, path = item.split("=", 1)
            with open(path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
            if "test_metrics" not in payload:
                raise CliError("E_INPUT", f"{path}: not a multi-run result (no test_metrics)")
            runsets[name] = payload["test_metrics"]
            inputs.append(path)
        if len(runsets) < 2:
            raise CliError("E_INPUT", "need at least two --runs entries to compare")
        report = {
            "schema_version": REPORT_SCHEMA,
            "models": {
                name: {"mean": float(np.mean(v)), "std": float(np.std(v, ddof=1))}
                for name, v in runsets.items()
            },
            "significance": significance_matrix(runsets, alpha=args.alpha),
        }
        write_json_atomic(args.out, report)
        outputs.append(args.out)
        for name, others in report["significance"]["improves_over"].items():
            marker = ", ".join(others) if others else "(none)"
            print(f"{name}: improves over {marker}")
        manifest_conf = {"alpha": args.alpha}
    else:
        if not args.checkpoint or not args.corpus or not args.task:
            raise CliError("E_INPUT", "evaluate needs --checkpoint/--corpus/--task or --runs")
        graph = None
        inputs = [args.checkpoint, args.corpus]
        if args.graph:
            graph, graph_files = _load_graph_dir(args.graph)
            inputs.extend(graph_files)
        model = load_checkpoint(args.checkpoint, graph=graph)
        if model.cfg.task != args.task:
            raise CliError("E_DIM", f"checkpoint was trained for task {model.cfg.task}, not {args.task}")
        corpus = load_corpus(args.corpus, args.task, seed=args.seed)
        cm = model.evaluate(corpus.split(args.split))
        metric = METRIC_FUNCS[corpus.metric_name](cm)
        report = {
            "schema_version": REPORT_SCHEMA,
            "variant": model.cfg.variant,
            "task": args.task,
            "split": args.split,
            "metric_name": corpus.metric_name,
            "metric": metric,
            "per_class": per_class_report(cm, list(corpus.label_names)),
            "confusion": cm.counts.tolist(),
        }
        write_json_atomic(args.out, report)
        outputs.append(args.out)
        print(f"{model.cfg.variant} {corpus.metric_name} on {args.split}: {metric:.4f}")
        manifest_conf = {"split": args.split, "task": args.task}
    _finish("evaluate", args, manifest_conf, inputs, outputs, args.seed, t0)
    return 0


def cmd_inspect_attention(args) -> int:
    t0 = time.time()
    graph, graph_files = _load_graph_dir(args.graph)
    model = load_checkpoint(args.checkpoint, graph=graph)
    if model.cfg.variant != "LING_GAT":
        raise CliError("E_VARIANT",
                       f"attention inspection needs a LING_GAT checkpoint, got {model.cfg.variant}")
    records = []
    for author in args.authors.split(","):
        author = author.strip()
        rec = model.author_attention(author)
        records.append(rec.to_dict())
    payload = {"schema_version": REPORT_SCHEMA, "records": records}
    write_json_atomic(args.out, payload)
    for rec in records:
        top = rec["heads"][0][0]
        print(f"{rec['target']}: top neighbor {top['neighbor']} (weight {top['weight']:.4f})")
    _finish("inspect-attention", args, {"authors": args.authors},
            [args.checkpoint, *graph_files], [args.out], None, t0)
    return 0


def cmd_export_embeddings(args) -> int:
    t0 = time.time()
    table = load_embeddings(args.embeddings)
    save_embeddings(table, args.out)
    outputs = [args.out]
    if args.pca2d:
        ids = table.ids()
        matrix = np.stack([table.vectors[i].data for i in ids])
        proj, _, _ = pca_2d(matrix)
        path = str(args.out) + ".2d.txt"
        with open(path, "w", encoding="utf-8") as fh:
            for uid, row in zip(ids, proj):
                fh.write(f"{uid} {float(row[0])!r} {float(row[1])!r}\n")
        outputs.append(path)
    _finish("export-embeddings", args, {"pca2d": bool(args.pca2d)},
            [args.embeddings], outputs, None, t0)
    print(f"exported {len(table)} vectors" + (" (+2d projection)" if args.pca2d else ""))
    return 0


# ---------------------------------------------------------------------- parser


def _add_common_model_flags(p):
    for name in ("word_dim", "text_hidden", "author_dim", "gat_hidden", "gat_heads",
                 "classifier_hidden", "max_tokens", "batch_size", "max_epochs", "patience"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--l2", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--config", help="flat key=value config file")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="socialtext", description=__doc__)
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="generate a synthetic corpus + retweet graph")
    p.add_argument("--kind", choices=("partition", "planted"), default="partition")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    for name, caster in (
        ("n_users", int), ("n_classes", int), ("homophily", float), ("text_signal", float),
        ("author_signal", float), ("intra_rate", float), ("inter_rate", float),
        ("tweets_per_user", int), ("communities_per_class", int), ("muted_communities", int),
        ("tokens_per_tweet", int), ("timeline_posts_per_user", int),
        ("n_targets", int), ("n_distractors", int), ("dim", int),
        ("beacon_scale", float), ("class_scale", float), ("noise_scale", float),
    ):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=caster)
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("build-graph", help="build the retweet graph and its statistics")
    p.add_argument("--corpus", required=True)
    p.add_argument("--retweets", required=True)
    p.add_argument("--task", required=True, choices=sorted(TASK_LABELS))
    p.add_argument("--out", required=True)
    p.add_argument("--external-threshold", type=int, default=100)
    p.add_argument("--seed", type=int, help="only needed when the corpus lacks split fields")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("stats", help="print statistics of a stored graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--json", help="also write the statistics to this JSON file")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("embed", help="pretrain author embeddings (n2v | pv | random)")
    p.add_argument("--method", required=True, choices=("n2v", "pv", "random"))
    p.add_argument("--graph")
    p.add_argument("--timelines")
    p.add_argument("--corpus")
    p.add_argument("--task", choices=sorted(TASK_LABELS))
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    for name, caster in (
        ("dim", int), ("epochs", int), ("walk_length", int), ("walks_per_node", int),
        ("window", int), ("negatives", int), ("min_count", int),
        ("p", float), ("q", float), ("learning_rate", float),
    ):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=caster)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train", help="train one variant (one seed or a seed list)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--task", required=True, choices=sorted(TASK_LABELS))
    p.add_argument("--variant", required=True)
    p.add_argument("--graph")
    p.add_argument("--author-embeddings", dest="author_embeddings")
    p.add_argument("--word-vectors", dest="word_vectors")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", help="comma-separated seed list for the multi-run protocol")
    _add_common_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("grid-search", help="exhaustive hyperparameter search")
    p.add_argument("--corpus", required=True)
    p.add_argument("--task", required=True, choices=sorted(TASK_LABELS))
    p.add_argument("--variant", required=True)
    p.add_argument("--graph")
    p.add_argument("--author-embeddings", dest="author_embeddings")
    p.add_argument("--word-vectors", dest="word_vectors")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--batch-sizes")
    p.add_argument("--dropouts")
    p.add_argument("--l2s")
    p.add_argument("--gat-hiddens")
    p.add_argument("--gat-head-counts")
    _add_common_model_flags(p)
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("evaluate", help="metric report for a checkpoint, or significance over run sets")
    p.add_argument("--checkpoint")
    p.add_argument("--corpus")
    p.add_argument("--task", choices=sorted(TASK_LABELS))
    p.add_argument("--graph")
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--runs", action="append", help="NAME=runs.json (repeatable)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect-attention", help="dump attention records for authors")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--authors", required=True, help="comma-separated author ids")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inspect_attention)

    p = sub.add_parser("export-embeddings", help="re-export vectors, optionally with a 2-D projection")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pca2d", action="store_true")
    p.set_defaults(func=cmd_export_embeddings)

    return top


ERROR_CODES = {
    CorpusError: "E_PARSE",
    JsonlError: "E_PARSE",
    GraphError: "E_GRAPH",
    SynthSpecError: "E_SPEC",
    FileNotFoundError: "E_INPUT",
    IsADirectoryError: "E_INPUT",
    PermissionError: "E_INPUT",
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error[{exc.code}] {exc}", file=sys.stderr)
        return 1
    except tuple(ERROR_CODES) as exc:
        code = next(code for cls, code in ERROR_CODES.items() if isinstance(exc, cls))
        print(f"error[{code}] {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error[E_VALUE] {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

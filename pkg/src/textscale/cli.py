"""Command-line interface.

Subcommands mirror the pipeline stages: ingest a corpus, extract topics
(lsa / lda), fit tree regressors over exported features, run wordscores,
evaluate score tables, generate demo data, and serve the HTTP API.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from textscale import corpus as corpus_mod
from textscale import evaluate as ev
from textscale import lda as lda_mod
from textscale import lsa as lsa_mod
from textscale import trees as trees_mod
from textscale import wordscores as ws_mod
from textscale.synth import make_two_pole_corpus

C_MODE_FLAGS = {"x3": "x_over_3", "sqrt": "sqrt_x", "all": "all_x"}
METHOD_FLAGS = {"tree": "single_tree", "rf": "random_forest",
                "erf": "extreme_forest", "ada": "adaboost_r2"}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textscale",
        description="Supervised text scaling: score documents from pre-scored training documents.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a term matrix from text files")
    p.add_argument("--input", required=True, help="directory of <entity>_<year>.txt files or a .jsonl file")
    p.add_argument("--variant", choices=["A", "B"], default="A")
    p.add_argument("--stoplist", help="stoplist file (required for variant B)")
    p.add_argument("--min-max-count", type=int, default=2,
                   help="variant B: drop words never reaching this count in any document")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("lsa", help="TF-IDF + truncated SVD topic extraction")
    p.add_argument("--matrix", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oversample", type=int, default=10)
    p.add_argument("--power-iters", type=int, default=4)
    p.add_argument("--method", choices=["randomized", "exact", "auto"], default="randomized")
    p.add_argument("--out", required=True, help="factor file")
    p.add_argument("--features-out", help="also write the topic-document feature table")
    p.set_defaults(func=_cmd_lsa)

    p = sub.add_parser("lda", help="online variational Bayes topic model")
    p.add_argument("--matrix", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--alpha", choices=["sym", "asym"], default="sym")
    p.add_argument("--eta", type=float)
    p.add_argument("--passes", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--kappa", type=float, default=0.7)
    p.add_argument("--tau0", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--theta-out", help="also write the document-topic feature table")
    p.set_defaults(func=_cmd_lda)

    p = sub.add_parser("trees", help="fit a tree regressor over exported features")
    p.add_argument("--features", required=True, help="feature table from lsa/lda")
    p.add_argument("--scores", required=True, help="training scores CSV (entity,year,score)")
    p.add_argument("--train-years", help="comma-separated years to use from the scores CSV")
    p.add_argument("--method", choices=list(METHOD_FLAGS), required=True)
    p.add_argument("--n", type=int, default=10000, help="tree count")
    p.add_argument("--c", choices=list(C_MODE_FLAGS), default="all",
                   help="feature subset size per node")
    p.add_argument("--l", type=int, default=5, help="minimum leaf size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--predict-out", help="also score every feature row to this CSV")
    p.set_defaults(func=_cmd_trees)

    p = sub.add_parser("wordscores", help="score virgin documents from training scores")
    p.add_argument("--matrix", required=True)
    p.add_argument("--train-scores", required=True, help="CSV entity,year,score")
    p.add_argument("--train-years", help="comma-separated years to use as training")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=_cmd_wordscores)

    p = sub.add_parser("eval", help="evaluation utilities")
    esub = p.add_subparsers(dest="eval_command", required=True)

    e = esub.add_parser("corr", help="Pearson correlation of two score tables")
    e.add_argument("--a", required=True)
    e.add_argument("--b", required=True)
    e.set_defaults(func=_cmd_eval_corr)

    e = esub.add_parser("summary", help="per-year summary statistics")
    e.add_argument("--scores", required=True)
    e.set_defaults(func=_cmd_eval_summary)

    e = esub.add_parser("discrep", help="largest discrepancies between two tables")
    e.add_argument("--a", required=True)
    e.add_argument("--b", required=True)
    e.add_argument("--top", type=int, default=10)
    e.set_defaults(func=_cmd_eval_discrep)

    e = esub.add_parser("overlap", help="confidence-interval overlap counts")
    e.add_argument("--scores", required=True)
    e.set_defaults(func=_cmd_eval_overlap)

    e = esub.add_parser("dmeans", help="difference-of-means z test")
    e.add_argument("--mean1", type=float, required=True)
    e.add_argument("--se1", type=float, required=True)
    e.add_argument("--n1", type=int, required=True)
    e.add_argument("--mean2", type=float, required=True)
    e.add_argument("--se2", type=float, required=True)
    e.add_argument("--n2", type=int, required=True)
    e.set_defaults(func=_cmd_eval_dmeans)

    e = esub.add_parser("grid", help="run a batch grid from a JSON spec list")
    e.add_argument("--matrix-a", required=True, help="corpus A matrix file")
    e.add_argument("--matrix-b", help="corpus B matrix file")
    e.add_argument("--specs", required=True, help="JSON list of batch specs")
    e.add_argument("--train-scores", required=True)
    e.add_argument("--train-years", help="comma-separated years")
    e.add_argument("--reference", required=True, help="reference score table CSV")
    e.add_argument("--out", help="write the rendered report here (default: stdout)")
    e.add_argument("--tables-dir", help="write every batch's score table into this directory")
    e.set_defaults(func=_cmd_eval_grid)

    p = sub.add_parser("demo", help="generate a synthetic demo corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-train", type=int, default=36)
    p.add_argument("--n-virgin", type=int, default=96)
    p.add_argument("--tokens", type=int, default=1000)
    p.set_defaults(func=_cmd_demo)

    p = sub.add_parser("serve", help="run the HTTP scoring service")
    p.add_argument("--data", help="data directory (default: env TEXTSCALE_DATA or ./textscale-data)")
    p.add_argument("--host", default=None, help="listen address (default: env TEXTSCALE_HOST or 127.0.0.1)")
    p.add_argument("--port", type=int, default=None, help="port (default: env TEXTSCALE_PORT or 8000)")
    p.add_argument("--workers", type=int, default=None, help="job workers (default: env TEXTSCALE_WORKERS or 1)")
    p.add_argument("--ui", help="serve a built web UI from this directory at /ui (default: env TEXTSCALE_UI)")
    p.set_defaults(func=_cmd_serve)

    return parser


def _cmd_ingest(args) -> int:
    path = Path(args.input)
    if path.is_dir():
        docs = corpus_mod.load_corpus_dir(path)
    else:
        docs = corpus_mod.load_corpus_jsonl(path)
    stoplist = corpus_mod.load_stoplist(args.stoplist) if args.stoplist else frozenset()
    config = corpus_mod.CorpusVariantConfig(
        variant=args.variant, stoplist=stoplist, min_max_in_doc_count=args.min_max_count
    )
    matrix = corpus_mod.build_corpus(docs, config)
    corpus_mod.save_matrix(matrix, args.out)
    print(f"wrote {matrix.n_words} words x {matrix.n_docs} documents "
          f"({matrix.nnz} entries) to {args.out}")
    return 0


def _cmd_lsa(args) -> int:
    matrix = corpus_mod.load_matrix(args.matrix)
    model = lsa_mod.LsaTopicModel(
        k=args.k, seed=args.seed, oversample=args.oversample,
        power_iters=args.power_iters, svd_method=args.method,
    ).fit(matrix)
    lsa_mod.save_factors(model.factors_, args.out)
    if args.features_out:
        features = trees_mod.DocFeatures(doc_keys=matrix.doc_keys,
                                         x=model.topic_docs_.features())
        trees_mod.save_features(features, args.features_out)
    print(f"wrote rank-{args.k} factors to {args.out}")
    return 0


def _cmd_lda(args) -> int:
    matrix = corpus_mod.load_matrix(args.matrix)
    alpha_mode = "symmetric" if args.alpha == "sym" else "asymmetric_normalized"
    config = lda_mod.LdaConfig(
        k=args.k, alpha_mode=alpha_mode, eta=args.eta, passes=args.passes,
        batch_size=args.batch_size, kappa=args.kappa, tau0=args.tau0, seed=args.seed,
    )
    model = lda_mod.fit_lda(matrix, config)
    lda_mod.save_lda_model(model, args.out)
    if args.theta_out:
        theta = lda_mod.infer_theta(model, matrix)
        features = trees_mod.DocFeatures(doc_keys=matrix.doc_keys, x=theta.features())
        trees_mod.save_features(features, args.theta_out)
    print(f"wrote {args.k}-topic model to {args.out}")
    return 0


def _cmd_trees(args) -> int:
    features = trees_mod.load_features(args.features)
    training = ws_mod.read_training_csv(args.scores, years=_parse_years(args.train_years))
    X = features.rows_for(training.doc_keys)
    config = trees_mod.EnsembleConfig(
        method=METHOD_FLAGS[args.method], n_trees=args.n,
        c_mode=C_MODE_FLAGS[args.c], min_leaf=args.l, seed=args.seed,
    )
    if config.method == "single_tree":
        tree = trees_mod.fit_tree(
            X, training.scores, min_leaf=config.min_leaf, c_mode=config.c_mode,
            rng=np.random.default_rng(config.seed),
        )
        model = trees_mod.EnsembleModel(config=config, trees=[tree])
    elif config.method == "adaboost_r2":
        model = trees_mod.fit_adaboost_r2(X, training.scores, config)
    else:
        model = trees_mod.fit_forest(X, training.scores, config,
                                     extreme=config.method == "extreme_forest")
    trees_mod.save_ensemble(model, args.out)
    if args.predict_out:
        preds = model.predict(features.x)
        table = ev.ScoreTable.from_pairs(zip(features.doc_keys, preds))
        table.to_csv(args.predict_out)
    print(f"wrote {len(model.trees)}-tree {args.method} model to {args.out}")
    return 0


def _cmd_wordscores(args) -> int:
    matrix = corpus_mod.load_matrix(args.matrix)
    years = _parse_years(args.train_years)
    training_all = ws_mod.read_training_csv(args.train_scores, years=years)
    in_matrix = set(matrix.doc_keys)
    kept = [(k, s) for k, s in zip(training_all.doc_keys, training_all.scores) if k in in_matrix]
    dropped = len(training_all.doc_keys) - len(kept)
    if dropped:
        print(f"note: {dropped} training rows have no matching document and were dropped",
              file=sys.stderr)
    training = ws_mod.TrainingSet(doc_keys=[k for k, _ in kept],
                                  scores=np.array([s for _, s in kept]))
    model = ws_mod.fit_wordscores(matrix, training)
    scores, unscorable = ws_mod.score_all(model, matrix)
    if unscorable:
        print(f"note: {len(unscorable)} documents had no scored tokens and were skipped",
              file=sys.stderr)
    rescaled = ws_mod.rescale(scores, model)
    ws_mod.write_scores_csv(rescaled, args.out)
    print(f"scored {len(rescaled)} documents from {len(training.doc_keys)} "
          f"training documents into {args.out}")
    return 0


def _parse_years(raw):
    if not raw:
        return None
    return {int(y) for y in str(raw).split(",") if y.strip()}


def _cmd_eval_corr(args) -> int:
    r = ev.pearson(ev.ScoreTable.from_csv(args.a), ev.ScoreTable.from_csv(args.b))
    print(f"{r:.6f}")
    return 0


def _cmd_eval_summary(args) -> int:
    table = ev.ScoreTable.from_csv(args.scores)
    print(f"{'year':>6} {'n':>6} {'mean':>12} {'std':>12} {'min':>12} {'max':>12}")
    for label, s in ev.summary_by_year(table).items():
        print(f"{label:>6} {s.n:>6} {s.mean:>12.6f} {s.std:>12.6f} {s.min:>12.6f} {s.max:>12.6f}")
    return 0


def _cmd_eval_discrep(args) -> int:
    a = ev.ScoreTable.from_csv(args.a)
    b = ev.ScoreTable.from_csv(args.b)
    positive, negative = ev.discrepancies(a, b, args.top)
    print("largest positive differences")
    for d in positive:
        print(f"  {d.key.entity}{d.key.year}: {d.a:.4f} vs {d.b:.4f} (delta {d.delta:+.4f})")
    print("largest negative differences")
    for d in negative:
        print(f"  {d.key.entity}{d.key.year}: {d.a:.4f} vs {d.b:.4f} (delta {d.delta:+.4f})")
    return 0


def _cmd_eval_overlap(args) -> int:
    table = ev.ScoreTable.from_csv(args.scores)
    stats = ev.ci_overlap_stats(table)
    for key, count in stats.per_key.items():
        print(f"{key.entity},{key.year},{count}")
    print(f"mean overlap count: {stats.mean:.4f}")
    return 0


def _cmd_eval_dmeans(args) -> int:
    out = ev.diff_of_means(
        ev.GroupStats(mean=args.mean1, std_error=args.se1, n=args.n1),
        ev.GroupStats(mean=args.mean2, std_error=args.se2, n=args.n2),
    )
    print(f"z = {out.z:.4f}")
    print(f"p (two-sided) = {out.p:.6g}")
    print(f"p (one-sided) = {out.p_one_sided:.6g}")
    return 0


def _cmd_eval_grid(args) -> int:
    matrices = {"A": corpus_mod.load_matrix(args.matrix_a)}
    if args.matrix_b:
        matrices["B"] = corpus_mod.load_matrix(args.matrix_b)
    with open(args.specs, encoding="utf-8") as fh:
        spec_dicts = json.load(fh)
    specs = [ev.BatchSpec.from_dict(d) for d in spec_dicts]
    reference = ev.ScoreTable.from_csv(args.reference)
    years = _parse_years(args.train_years)
    training_table = ev.ScoreTable.from_csv(args.train_scores)
    training = ev.training_from_table(
        training_table, years=years, restrict_to=matrices["A"].doc_keys
    )
    report = ev.run_batch_grid(matrices, specs, training, reference)
    rendered = report.render()
    if args.out:
        Path(args.out).write_text(rendered, encoding="utf-8")
    else:
        print(rendered, end="")
    if args.tables_dir:
        out_dir = Path(args.tables_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, res in enumerate(report.results):
            res.table.to_csv(out_dir / f"batch_{i:03d}.csv")
    return 0


def _cmd_demo(args) -> int:
    out_dir = Path(args.out_dir)
    corpus_dir = out_dir / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    synth = make_two_pole_corpus(n_train=args.n_train, n_virgin=args.n_virgin,
                                 tokens_per_doc=args.tokens, seed=args.seed)
    for doc in synth.docs:
        (corpus_dir / f"{doc.key.entity}_{doc.key.year}.txt").write_text(
            doc.text, encoding="utf-8"
        )
    matrix = corpus_mod.build_corpus(synth.docs)
    corpus_mod.save_matrix(matrix, out_dir / "matrix.txt")
    with open(out_dir / "train_scores.csv", "w", encoding="utf-8") as fh:
        fh.write("entity,year,score\n")
        for key, score in zip(synth.training.doc_keys, synth.training.scores):
            fh.write(f"{key.entity},{key.year},{score:.17g}\n")
    synth.latent.to_csv(out_dir / "latent.csv")
    print(f"wrote demo corpus ({len(synth.docs)} documents) under {out_dir}")
    return 0


def _cmd_serve(args) -> int:
    import os

    import uvicorn

    from textscale.service import create_app

    data = args.data or os.environ.get("TEXTSCALE_DATA") or "./textscale-data"
    host = args.host or os.environ.get("TEXTSCALE_HOST") or "127.0.0.1"
    port = args.port or int(os.environ.get("TEXTSCALE_PORT") or 8000)
    workers = args.workers or int(os.environ.get("TEXTSCALE_WORKERS") or 1)
    app = create_app(data_dir=data, worker_count=workers, ui_dir=args.ui)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

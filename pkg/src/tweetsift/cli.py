"""Command line interface for the pipeline stages."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except Exception as exc:  # surface a one-line error, not a stack trace
        if args.verbose:
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tweetsift",
        description="Crisis tweet acquisition, embedding, sifting, and mapping.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging and tracebacks")
    sub = parser.add_subparsers(required=True, metavar="command")

    p = sub.add_parser("ingest", help="acquire tweets from a stream or replay file")
    p.add_argument("--config", required=True, help="key/value stream config file")
    p.add_argument("--replay", help="line-delimited record file instead of the live endpoint")
    p.add_argument("--out", required=True, help="corpus store directory")
    p.add_argument("--max-records", type=int, default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("preprocess", help="clean a text store line by line")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_preprocess)

    embed = sub.add_parser("embed", help="train or query the embedding model")
    embed_sub = embed.add_subparsers(required=True, metavar="action")

    p = embed_sub.add_parser("train")
    p.add_argument("--in", dest="input", required=True, help="clean store")
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--dim", type=int, default=100)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--buckets", type=int, default=2_000_000)
    p.add_argument("--subsample", type=float, default=1e-4)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--backend", choices=["auto", "compiled", "python"], default="auto")
    p.set_defaults(func=cmd_embed_train)

    p = embed_sub.add_parser("nn")
    p.add_argument("--model", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_embed_nn)

    p = embed_sub.add_parser("sv")
    p.add_argument("--model", required=True)
    p.add_argument("--text", required=True)
    p.set_defaults(func=cmd_embed_sv)

    al = sub.add_parser("al", help="seed selection and offline labeling loops")
    al_sub = al.add_subparsers(required=True, metavar="action")

    p = al_sub.add_parser("seed")
    p.add_argument("--corpus", required=True)
    p.add_argument("--tags", required=True, help="comma-separated hashtags")
    p.add_argument("--n", type=int, default=50)
    p.set_defaults(func=cmd_al_seed)

    p = al_sub.add_parser("run")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--truth", required=True, help="tweet_id<TAB>positive|negative oracle file")
    p.add_argument("--tags", required=True, help="seed hashtags, comma-separated")
    p.add_argument("--strategy", choices=["uncertain", "random"], default="uncertain")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--batch", type=int, default=5)
    p.add_argument("--seed-positive", type=int, default=50)
    p.add_argument("--seed-negative", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labels-out", help="append-only labels store to write")
    p.set_defaults(func=cmd_al_run)

    ev = sub.add_parser("eval", help="protocol experiments and curve plots")
    ev_sub = ev.add_subparsers(required=True, metavar="action")

    p = ev_sub.add_parser("run")
    p.add_argument("--dataset", required=True, help="dataset CSV (tweet_id,class,v0..)")
    p.add_argument("--positive", required=True, help="positive class name")
    p.add_argument("--batch", type=int, default=5)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--out", required=True, help="results CSV")
    p.set_defaults(func=cmd_eval_run)

    p = ev_sub.add_parser("plot")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="SVG path")
    p.set_defaults(func=cmd_eval_plot)

    viz = sub.add_parser("viz", help="hashtag map layout")
    viz_sub = viz.add_subparsers(required=True, metavar="action")

    p = viz_sub.add_parser("layout")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--min-freq", type=int, default=10)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--lr", type=float, default=200.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_viz_layout)

    p = sub.add_parser("serve", help="run the labeling/map HTTP service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--layout", help="layout CSV (default <corpus>/layout.csv)")
    p.add_argument("--state", help="session state directory")
    p.add_argument("--ui", help="static UI bundle directory")
    p.set_defaults(func=cmd_serve)

    synth = sub.add_parser("synth", help="synthetic desk-scale corpus and dataset")
    synth_sub = synth.add_subparsers(required=True, metavar="action")

    p = synth_sub.add_parser("corpus")
    p.add_argument("--out", required=True, help="replay file to write")
    p.add_argument("--truth-out", help="ground-truth TSV for the eval tweets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-per-class", type=int, default=1000)
    p.add_argument("--eval-per-class", type=int, default=200)
    p.set_defaults(func=cmd_synth_corpus)

    p = synth_sub.add_parser("dataset")
    p.add_argument("--workdir", required=True, help="directory for pipeline artifacts")
    p.add_argument("--out", required=True, help="dataset CSV to write")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth_dataset)

    return parser


def cmd_ingest(args) -> int:
    from .ingest import CorpusStore, acquire_stream, load_stream_config

    config = load_stream_config(args.config)
    with CorpusStore(args.out) as store:
        report = acquire_stream(
            config, store.persist, replay=args.replay, max_records=args.max_records
        )
    print(
        f"stored {report.stored}, skipped {report.skipped}, "
        f"duplicates {report.duplicates}, requests {report.requests}, "
        f"reconnects {report.reconnects}"
    )
    return 0


def cmd_preprocess(args) -> int:
    from .preprocess import clean_store

    lines = clean_store(args.input, args.out)
    print(f"cleaned {lines} lines -> {args.out}")
    return 0


def cmd_embed_train(args) -> int:
    from .embedding import EmbeddingConfig, save_model, train
    from .embedding.trainer import KERNEL_BACKEND

    config = EmbeddingConfig(
        dim=args.dim,
        window=args.window,
        negatives=args.negatives,
        epochs=args.epochs,
        learning_rate=args.lr,
        min_count=args.min_count,
        bucket_count=args.buckets,
        subsample_threshold=args.subsample,
        seed=args.seed,
    )
    backend = None if args.backend == "auto" else args.backend
    model = train(args.input, config, backend=backend)
    save_model(model, args.out)
    print(
        f"trained dim={config.dim} vocab={len(model.vocab)} "
        f"backend={args.backend if backend else KERNEL_BACKEND} -> {args.out}"
    )
    return 0


def cmd_embed_nn(args) -> int:
    from .embedding import load_model

    model = load_model(args.model)
    for word, score in model.nearest_neighbors(args.word, args.k):
        print(f"{score:+.4f}  {word}")
    return 0


def cmd_embed_sv(args) -> int:
    from .embedding import load_model
    from .preprocess import clean_text, tokenize

    model = load_model(args.model)
    vector = model.sentence_vector(tokenize(clean_text(args.text)))
    print(" ".join(f"{x:.6f}" for x in vector))
    return 0


def cmd_al_seed(args) -> int:
    from .active_learning import seed_candidates
    from .ingest import CorpusStore

    tags = [t.strip() for t in args.tags.split(",") if t.strip()]
    with CorpusStore(args.corpus) as store:
        found = seed_candidates(store, tags, args.n)
    for tweet in found:
        print(f"{tweet.id}\t{tweet.text}")
    print(f"# {len(found)} candidates", file=sys.stderr)
    return 0


def _load_truth(path) -> dict[str, int]:
    from .active_learning import LABEL_VALUES

    truth = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            tweet_id, _, label = line.partition("\t")
            truth[tweet_id] = LABEL_VALUES[label.strip()]
    return truth


def cmd_al_run(args) -> int:
    from .active_learning import (
        ALConfig,
        LabelStore,
        LabeledExample,
        run_loop,
        seed_candidates,
    )
    from .embedding import load_model
    from .ingest import CorpusStore
    from .preprocess import clean_text, tokenize

    model = load_model(args.model)
    truth = _load_truth(args.truth)
    tags = [t.strip() for t in args.tags.split(",") if t.strip()]

    vectors: dict[str, np.ndarray] = {}
    with CorpusStore(args.corpus) as store:
        matched = [t.id for t in seed_candidates(store, tags, args.seed_positive)]
        texts = store.iter_texts()
        for tweet, text in zip(store.iter_tweets(), texts):
            if tweet.id in truth:
                vectors[tweet.id] = model.sentence_vector(
                    tokenize(clean_text(text))
                ).astype(np.float64)

    matched = [tid for tid in matched if tid in truth]
    rng = np.random.default_rng(args.seed)
    rest = sorted(set(vectors) - set(matched))
    fill = [rest[i] for i in rng.choice(len(rest), size=min(args.seed_negative, len(rest)), replace=False)]
    initial_ids = matched + fill
    initial = [
        LabeledExample(tweet_id=tid, vector=vectors[tid], label=truth[tid])
        for tid in initial_ids
    ]
    pool = {tid: vec for tid, vec in vectors.items() if tid not in set(initial_ids)}

    store_out = LabelStore(args.labels_out) if args.labels_out else None
    if store_out:
        for ex in initial:
            store_out.append(ex.tweet_id, ex.label, "seed")

    def oracle(tid):
        if store_out:
            store_out.append(tid, truth[tid], "al")
        return truth[tid]

    config = ALConfig(budget=args.budget, batch_size=args.batch, seed=args.seed)

    def observer(iteration, state):
        positives = sum(ex.label for ex in state.labeled.values())
        print(
            f"iteration {iteration}: labeled={len(state.labeled)} "
            f"positives={positives} budget={state.remaining_budget}"
        )

    run_loop(initial, pool, config, args.strategy, oracle, observer=observer)
    if store_out:
        store_out.close()
    return 0


def cmd_eval_run(args) -> int:
    from .eval_harness import SplitSpec, dataset_from_csv, run_experiment, write_results

    dataset = dataset_from_csv(args.dataset, args.positive)
    results = []
    al_convs, base_convs = [], []
    for i in range(args.seeds):
        seed = args.base_seed + i
        result = run_experiment(dataset, SplitSpec(seed=seed), batch_size=args.batch)
        results.append((str(seed), result))
        al_convs.append(result.al_convergence)
        base_convs.append(result.baseline_convergence)
    write_results(args.out, results)
    print(
        f"{args.seeds} run(s) -> {args.out}; convergence iterations: "
        f"uncertain median {np.median(al_convs):.1f}, "
        f"random median {np.median(base_convs):.1f}"
    )
    return 0


def cmd_eval_plot(args) -> int:
    from .eval_harness import plot_results

    plot_results(args.input, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_viz_layout(args) -> int:
    from .embedding import load_model
    from .ingest import CorpusStore
    from .layout import build_layout, corpus_fingerprint, save_layout
    from .tsne import TsneConfig

    model = load_model(args.model)
    config = TsneConfig(
        perplexity=args.perplexity,
        iterations=args.iterations,
        learning_rate=args.lr,
        seed=args.seed,
    )
    with CorpusStore(args.corpus) as store:
        layout = build_layout(
            store,
            model,
            config,
            min_frequency=args.min_freq,
            fingerprint=corpus_fingerprint(args.corpus),
        )
    save_layout(layout, args.out)
    print(f"{len(layout.points)} tags -> {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .embedding import load_model
    from .service import LoopService, serve_forever

    model = load_model(args.model)
    service = LoopService(
        args.corpus,
        model,
        state_dir=args.state,
        layout_path=args.layout,
    )
    serve_forever(service, port=args.port, ui_dir=args.ui)
    return 0


def cmd_synth_corpus(args) -> int:
    from .synthetic import SyntheticSpec, generate_corpus

    spec = SyntheticSpec(
        seed=args.seed,
        train_tweets_per_class=args.train_per_class,
        eval_tweets_per_class=args.eval_per_class,
    )
    corpus = generate_corpus(spec)
    with open(args.out, "w", encoding="utf-8") as f:
        for record in corpus.records:
            f.write(record + "\n")
    if args.truth_out:
        with open(args.truth_out, "w", encoding="utf-8") as f:
            for tweet_id, label in sorted(corpus.truth.items()):
                f.write(f"{tweet_id}\t{label}\n")
    print(f"{len(corpus.records)} records -> {args.out}")
    return 0


def cmd_synth_dataset(args) -> int:
    from .eval_harness import dataset_to_csv
    from .synthetic import SyntheticSpec, build_artifacts

    artifacts = build_artifacts(args.workdir, SyntheticSpec(seed=args.seed))
    dataset_to_csv(artifacts.dataset, args.out)
    print(
        f"dataset with {len(artifacts.dataset.items)} items -> {args.out}; "
        f"model and corpus under {args.workdir}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())

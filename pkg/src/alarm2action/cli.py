"""Command-line interface.

Subcommands cover the full pipeline: synthesize a corpus, ingest and
clean raw logs, sequence responses into documents, fit the next-alarm
chain, train and evaluate the classifier, render report figures, and run
the recommendation service.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import ingest, markov, report, sequencer, synth, trainer, vocab as vocab_mod
from .errors import Alarm2ActionError
from .rnn import ModelConfig


def _turbine_files(directory, prefix: str) -> list[tuple[str, Path]]:
    """(turbine_id, path) pairs for files named <prefix>_<id>.csv."""
    directory = Path(directory)
    pairs = []
    for path in sorted(directory.glob(f"{prefix}_*.csv")):
        turbine_id = path.stem[len(prefix) + 1:]
        if turbine_id:
            pairs.append((turbine_id, path))
    return pairs


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    if args.spec:
        spec = synth.load_scenario(args.spec)
    elif args.preset == "learnable":
        spec = synth.learnable_scenario(
            num_classes=args.classes, n_turbines=args.turbines,
            days=args.days, fault_rate=args.rate, seed=args.seed,
        )
    else:
        spec = synth.ambiguous_scenario(
            num_pairs=max(1, args.classes // 2), n_turbines=args.turbines,
            days=args.days, fault_rate=args.rate, seed=args.seed,
        )
    if args.chatter is not None:
        spec = replace(spec, chatter_prob=args.chatter)
    if args.false_rate is not None:
        spec = replace(spec, false_alarm_rate=args.false_rate)
    if args.flood is not None:
        spec = replace(spec, flood_prob=args.flood)

    bundle = synth.generate_corpus(spec)
    synth.write_corpus(bundle, args.out)
    stats = synth.corpus_stats(bundle)
    print(f"wrote corpus to {args.out}: {stats['faults']} faults, "
          f"{stats['alarms']} alarms, {len(stats['labels'])} labels")
    if args.verify:
        problems = synth.verify_corpus(bundle)
        if problems:
            for p in problems[:20]:
                print(f"VIOLATION: {p}", file=sys.stderr)
            print(f"{len(problems)} violations", file=sys.stderr)
            return 1
        print("verified: all cascades in-window, all floods satisfy 10-in-10-min")
    return 0


# ---------------------------------------------------------------------------
# ingest


def cmd_ingest(args) -> int:
    cfg = ingest.CleaningConfig(
        chatter_window_s=args.chatter_window,
        min_response_count=args.min_count,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    alarm_files = _turbine_files(args.alarms, "alarms")
    response_files = _turbine_files(args.responses, "responses")
    if not alarm_files or not response_files:
        print("no alarms_*.csv / responses_*.csv files found", file=sys.stderr)
        return 1

    alarms_in = alarms_out = 0
    for turbine_id, path in alarm_files:
        events = ingest.parse_alarm_log(path, turbine_id, cfg)
        kept = ingest.remove_chattering(events, cfg)
        alarms_in += len(events)
        alarms_out += len(kept)
        ingest.write_event_csv(out / f"alarms_{turbine_id}.csv", kept)

    # Infrequent responses are counted fleet-wide so a rare repair on one
    # turbine is treated the same as one split across turbines.
    by_turbine = {}
    all_responses = []
    for turbine_id, path in response_files:
        events = ingest.parse_response_log(path, turbine_id, cfg)
        by_turbine[turbine_id] = events
        all_responses.extend(events)
    _kept, dropped_labels = ingest.filter_infrequent_responses(all_responses, cfg)
    responses_out = 0
    for turbine_id, events in by_turbine.items():
        kept = [ev for ev in events if ev.text not in dropped_labels]
        responses_out += len(kept)
        ingest.write_event_csv(out / f"responses_{turbine_id}.csv", kept)

    summary = {
        "turbines": sorted(tid for tid, _ in alarm_files),
        "alarms_in": alarms_in,
        "alarms_out": alarms_out,
        "chattering_removed": alarms_in - alarms_out,
        "responses_in": len(all_responses),
        "responses_out": responses_out,
        "infrequent_removed": len(all_responses) - responses_out,
        "dropped_labels": sorted(dropped_labels),
        "config": {
            "chatter_window_s": cfg.chatter_window_s,
            "min_response_count": cfg.min_response_count,
            "noise_chars": cfg.noise_chars,
        },
    }
    (out / "cleaning_report.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )
    print(f"cleaned {alarms_in} alarms -> {alarms_out} "
          f"({summary['chattering_removed']} chattering), "
          f"{len(all_responses)} responses -> {responses_out} "
          f"({summary['infrequent_removed']} infrequent)")
    return 0


# ---------------------------------------------------------------------------
# sequence


def cmd_sequence(args) -> int:
    in_dir = Path(args.in_dir)
    out = Path(args.out or args.in_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = sequencer.SequencerConfig(
        mem_days=args.mem, target_len=args.target_len, seed=args.seed
    )

    alarm_files = dict(_turbine_files(in_dir, "alarms"))
    response_files = dict(_turbine_files(in_dir, "responses"))
    docs = []
    for turbine_id in sorted(alarm_files):
        resp_path = response_files.get(turbine_id)
        if resp_path is None:
            continue
        alarms = ingest.parse_alarm_log(alarm_files[turbine_id], turbine_id)
        responses = ingest.parse_response_log(resp_path, turbine_id)
        pairs = sequencer.build_pairs(alarms, responses, cfg)
        docs.extend(sequencer.pad_or_truncate(doc, cfg) for doc in pairs)

    if not docs:
        print("no documents produced", file=sys.stderr)
        return 1
    sequencer.write_dataset(docs, out / "dataset.jsonl")

    if args.holdout_turbine:
        eligible = [i for i, d in enumerate(docs)
                    if d.turbine_id != args.holdout_turbine]
        holdout_idx = [i for i in range(len(docs)) if i not in set(eligible)]
        if not eligible:
            print("holdout turbine owns every document", file=sys.stderr)
            return 1
        tr, va, te = sequencer.split_indices(len(eligible), cfg)
        train_idx = [eligible[i] for i in tr]
        val_idx = [eligible[i] for i in va]
        test_idx = [eligible[i] for i in te]
        sequencer.write_split(out / "split.json", train_idx, val_idx, test_idx,
                              cfg, holdout_turbine=args.holdout_turbine,
                              holdout_indices=holdout_idx)
    else:
        train_idx, val_idx, test_idx = sequencer.split_indices(len(docs), cfg)
        sequencer.write_split(out / "split.json", train_idx, val_idx, test_idx, cfg)

    print(f"{len(docs)} documents -> train {len(train_idx)}, "
          f"validation {len(val_idx)}, test {len(test_idx)}")
    return 0


# ---------------------------------------------------------------------------
# markov


def cmd_markov_fit(args) -> int:
    sequences = []
    for turbine_id, path in _turbine_files(args.alarms, "alarms"):
        events = ingest.parse_alarm_log(path, turbine_id)
        if events:
            sequences.append([ev.text for ev in events])
    model = markov.fit_transitions(sequences, alpha=args.alpha)
    markov.save_markov(model, args.out)
    print(f"{len(model.states)} states, "
          f"{len(model.absorbing_states)} absorbing -> {args.out}")
    return 0


def cmd_markov_next(args) -> int:
    model = markov.load_markov(args.model)
    for state, prob in markov.predict_next(model, args.current, args.k):
        print(f"{prob:.6f}\t{state}")
    return 0


def cmd_markov_score(args) -> int:
    model = markov.load_markov(args.model)
    logprob = markov.sequence_logprob(model, args.tokens)
    print(f"{logprob:.6f}")
    return 0


# ---------------------------------------------------------------------------
# train / eval / report


def cmd_train(args) -> int:
    docs = sequencer.read_dataset(args.data)
    split = sequencer.split_from_file(args.split, docs)

    vocab_path = (Path(args.vocab) if args.vocab
                  else Path(args.out).parent / "vocab.json")
    if vocab_path.exists():
        vocab = vocab_mod.load_vocab(vocab_path)
    else:
        vocab = vocab_mod.build_vocab(split.train)
        vocab_mod.save_vocab(vocab, vocab_path, embed_dim=args.embed_dim)
        print(f"built vocabulary: {len(vocab)} tokens, "
              f"{vocab.num_classes} labels -> {vocab_path}")

    seq_len = len(docs[0].alarm_tokens)
    mcfg = ModelConfig(
        vocab_size=len(vocab),
        num_classes=vocab.num_classes,
        embed_dim=args.embed_dim,
        hidden_dim=args.hidden_dim,
        bidirectional=args.bidirectional,
        seq_len=seq_len,
    )
    tcfg = trainer.TrainerConfig(
        epochs=args.epochs, batch_size=args.batch_size,
        learning_rate=args.lr, clip_threshold=args.clip, seed=args.seed,
    )

    embedding = None
    if args.embedding_file:
        init = vocab_mod.EmbeddingInit(dim=args.embed_dim, mode="from_file",
                                       file=args.embedding_file)
        embedding = init.realize(vocab, np.random.default_rng([args.seed, 2]))

    def progress(stats):
        print(f"epoch {stats.epoch:3d}  loss {stats.train_loss:.4f}  "
              f"train acc {stats.train_acc:.3f}  val acc {stats.val_acc:.3f}")

    result, _train_set, _val_set, test_set = trainer.train_on_split(
        split, vocab, mcfg, tcfg, embedding=embedding,
        callback=progress if args.progress else None,
    )

    fingerprint = vocab.fingerprint()
    extra = {
        "trainer": tcfg.to_dict(),
        "best_epoch": result.best_epoch,
        "best_val_acc": result.best_val_acc,
        "data_fingerprint": result.data_fingerprint,
    }
    trainer.save_model(args.out, result.final_params, mcfg, fingerprint,
                       extra={**extra, "checkpoint": "final"}, adam=result.adam)
    best_path = args.best_out or str(Path(args.out).with_suffix(".best.npz"))
    trainer.save_model(best_path, result.best_params, mcfg, fingerprint,
                       extra={**extra, "checkpoint": "best"})
    if args.history:
        trainer.write_history(args.history, result.history)

    last = result.history[-1]
    print(f"final: train acc {last.train_acc:.3f}, val acc {last.val_acc:.3f} "
          f"(best epoch {result.best_epoch}: {result.best_val_acc:.3f})")
    if len(test_set):
        test_report = trainer.evaluate(result.best_params, mcfg, test_set)
        print(f"test acc (best checkpoint): {test_report.accuracy:.3f} "
              f"({test_report.correct}/{test_report.total})")
    return 0


def cmd_eval(args) -> int:
    vocab = vocab_mod.load_vocab(args.vocab)
    params, mcfg, _meta = trainer.load_model(
        args.model, expected_vocab_fingerprint=vocab.fingerprint()
    )
    docs = sequencer.read_dataset(args.data)
    split = sequencer.split_from_file(args.split, docs)
    partitions = {
        "train": split.train,
        "validation": split.validation,
        "test": split.test,
        "all": split.train + split.validation + split.test,
    }
    selected = partitions[args.partition]
    ds = trainer.encode_documents(selected, vocab)
    result = trainer.evaluate(params, mcfg, ds)
    payload = result.to_dict(labels=list(vocab.labels))
    payload["partition"] = args.partition
    if args.report:
        Path(args.report).write_text(
            json.dumps(payload, indent=2) + "\n", encoding="utf-8"
        )
    if result.accuracy is None:
        print(f"{args.partition}: 0 examples (accuracy undefined)")
    else:
        print(f"{args.partition}: accuracy {result.accuracy:.4f} "
              f"({result.correct}/{result.total})")
    return 0


def cmd_report(args) -> int:
    history = trainer.read_history(args.history) if args.history else None
    confusion = labels = None
    if args.eval:
        payload = json.loads(Path(args.eval).read_text(encoding="utf-8"))
        confusion = np.array(payload["confusion"], dtype=np.int64)
        labels = payload["labels"]
    docs = sequencer.read_dataset(args.data) if args.data else None
    written = report.render_report(args.out, history=history,
                                   confusion=confusion, labels=labels, docs=docs)
    if not written:
        print("nothing to render; pass --history, --eval and/or --data",
              file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# serve


def cmd_serve(args) -> int:
    import uvicorn

    from .service import RecommendationService, create_app, load_service_config

    config = load_service_config(args.config)
    overrides = {
        name: getattr(args, name)
        for name in ("db_path", "model_path", "vocab_path", "dataset_path",
                     "split_path", "markov_path", "static_dir", "host",
                     "port", "token")
        if getattr(args, name) is not None
    }
    if overrides:
        config = replace(config, **overrides)
    service = RecommendationService.from_config(config)
    app = create_app(service)
    print(f"serving on http://{config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alarm2action",
        description="Predict wind-turbine repair actions from alarm sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", help="scenario spec JSON (overrides --preset)")
    p.add_argument("--preset", choices=["learnable", "ambiguous"],
                   default="learnable")
    p.add_argument("--classes", type=int, default=8)
    p.add_argument("--turbines", type=int, default=40)
    p.add_argument("--days", type=int, default=60)
    p.add_argument("--rate", type=float, default=10.0,
                   help="faults per turbine per 30 days")
    p.add_argument("--chatter", type=float, default=None)
    p.add_argument("--false-rate", type=float, default=None, dest="false_rate")
    p.add_argument("--flood", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="clean raw alarm/response logs")
    p.add_argument("--alarms", required=True, help="directory of alarms_*.csv")
    p.add_argument("--responses", required=True,
                   help="directory of responses_*.csv")
    p.add_argument("--chatter-window", type=float, default=60.0)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sequence", help="pair responses with alarm windows")
    p.add_argument("--in", dest="in_dir", required=True,
                   help="directory of cleaned CSVs")
    p.add_argument("--mem", type=int, default=20, help="window length in days")
    p.add_argument("--target-len", type=int, default=75)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--holdout-turbine", default=None)
    p.add_argument("--out", default=None, help="defaults to --in")
    p.set_defaults(func=cmd_sequence)

    p = sub.add_parser("markov", help="next-alarm transition model")
    msub = p.add_subparsers(dest="markov_command", required=True)
    m = msub.add_parser("fit", help="fit transitions from cleaned alarms")
    m.add_argument("--alarms", required=True)
    m.add_argument("--alpha", type=float, default=0.0)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_markov_fit)
    m = msub.add_parser("next", help="top-k next alarms")
    m.add_argument("--model", required=True)
    m.add_argument("--current", required=True)
    m.add_argument("-k", type=int, default=3)
    m.set_defaults(func=cmd_markov_next)
    m = msub.add_parser("score", help="log-probability of a sequence")
    m.add_argument("--model", required=True)
    m.add_argument("tokens", nargs="+")
    m.set_defaults(func=cmd_markov_score)

    p = sub.add_parser("train", help="train the classifier")
    p.add_argument("--data", required=True, help="dataset.jsonl")
    p.add_argument("--split", required=True, help="split.json")
    p.add_argument("--vocab", default=None,
                   help="loaded if present, else built from the train split"
                        " (default: vocab.json beside --out)")
    p.add_argument("--bidirectional", action="store_true")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--clip", type=float, default=1.0)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embed-dim", type=int, default=300)
    p.add_argument("--hidden-dim", type=int, default=300)
    p.add_argument("--embedding-file", default=None)
    p.add_argument("--history", default=None, help="write history CSV here")
    p.add_argument("--progress", action="store_true",
                   help="print one line per epoch")
    p.add_argument("--out", required=True, help="final checkpoint path")
    p.add_argument("--best-out", default=None,
                   help="best-validation checkpoint (default: <out>.best.npz)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--partition", default="test",
                   choices=["train", "validation", "test", "all"])
    p.add_argument("--report", default=None, help="write JSON report here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="render figures and CSV summaries")
    p.add_argument("--history", default=None, help="history CSV from train")
    p.add_argument("--eval", default=None, help="JSON report from eval")
    p.add_argument("--data", default=None, help="dataset.jsonl")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="run the recommendation service")
    p.add_argument("--config", default=None, help="service config JSON")
    p.add_argument("--db-path", default=None)
    p.add_argument("--model-path", default=None)
    p.add_argument("--vocab-path", default=None)
    p.add_argument("--dataset-path", default=None)
    p.add_argument("--split-path", default=None)
    p.add_argument("--markov-path", default=None)
    p.add_argument("--static-dir", default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--token", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (Alarm2ActionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

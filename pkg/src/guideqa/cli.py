"""Operator command line: ingest, generate, train, eval, serve, chat.

Exit codes: 0 success, 1 validation or parse failure, 2 runtime error.
Every failure prints one machine-parsable line: ``error: <Type>: <message>``.
All commands are deterministic; no randomness exists anywhere in the
pipeline, so identical inputs produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from pathlib import Path

from . import classify, dialogue, evaluation, gen, service
from . import kb as kb_module
from .data import default_kb_path, default_templates_path
from .errors import GuideQAError, ValidationFailure


def _env(name, default=None):
    return os.environ.get(name, default)


def _add_kb_flag(parser, required_default=True):
    parser.add_argument("--kb", default=_env("GUIDEQA_KB"),
                        help="knowledge file (default: $GUIDEQA_KB or the bundled sample)")
    del required_default


def _add_templates_flag(parser):
    parser.add_argument("--templates", default=_env("GUIDEQA_TEMPLATES"),
                        help="template file (default: $GUIDEQA_TEMPLATES or the bundled sample)")


def _resolve(path, fallback):
    return Path(path) if path else fallback()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="guideqa",
                                     description="User-guide question answering engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a knowledge file")
    p.add_argument("kb_file")

    p = sub.add_parser("generate", help="generate the training corpus from templates")
    _add_kb_flag(p)
    _add_templates_flag(p)
    p.add_argument("--out", required=True, help="corpus output path (JSON Lines)")

    p = sub.add_parser("train", help="train the intent model from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="model output path")
    p.add_argument("--alpha", type=float, default=classify.PIPELINE_ALPHA,
                   help=f"additive smoothing (default {classify.PIPELINE_ALPHA})")

    p = sub.add_parser("eval", help="replay a corpus or labeled question file")
    p.add_argument("--model", required=True)
    _add_kb_flag(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--corpus")
    group.add_argument("--labeled")
    p.add_argument("--threshold", type=float,
                   default=float(_env("GUIDEQA_THRESHOLD", dialogue.DEFAULT_THRESHOLD)))
    _add_templates_flag(p)
    p.add_argument("--json-out", help="also write the JSON report to this path")

    p = sub.add_parser("serve", help="run the REST service")
    _add_kb_flag(p)
    _add_templates_flag(p)
    p.add_argument("--model", help="pre-trained model file (trains at boot when omitted)")
    p.add_argument("--addr", default=_env("GUIDEQA_ADDR", "127.0.0.1:8080"))
    p.add_argument("--data-dir", default=_env("GUIDEQA_DATA_DIR", "./guideqa_data"))
    p.add_argument("--threshold", type=float,
                   default=float(_env("GUIDEQA_THRESHOLD", dialogue.DEFAULT_THRESHOLD)))
    p.add_argument("--admin-token", default=_env("GUIDEQA_ADMIN_TOKEN"))
    p.add_argument("--cors-origins", default=_env("GUIDEQA_CORS_ORIGINS", "*"),
                   help="comma-separated origin allowlist")

    p = sub.add_parser("chat", help="interactive terminal chat with feedback capture")
    _add_kb_flag(p)
    _add_templates_flag(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data-dir", default=_env("GUIDEQA_DATA_DIR", "./guideqa_data"))
    p.add_argument("--threshold", type=float,
                   default=float(_env("GUIDEQA_THRESHOLD", dialogue.DEFAULT_THRESHOLD)))
    return parser


def cmd_ingest(args) -> int:
    knowledge = kb_module.load_guide(args.kb_file)
    kinds = Counter(entity.kind.value for entity in knowledge.entities)
    parts = [f"{kinds.get(kind, 0)} {kind}s" for kind in
             ("parameter", "term", "component", "relationship")]
    print(f"knowledge base OK: version {knowledge.version}, "
          f"{', '.join(parts)}, {len(knowledge.sections)} sections")
    return 0


def cmd_generate(args) -> int:
    knowledge = kb_module.load_guide(_resolve(args.kb, default_kb_path))
    templates = gen.parse_templates(_resolve(args.templates, default_templates_path))
    corpus = gen.generate_dataset(templates, knowledge)
    gen.write_corpus(corpus.examples, args.out)
    print(f"generated {len(corpus.examples)} examples across "
          f"{len(corpus.per_intent_counts)} intents -> {args.out}")
    flagged = len({question for question, _ in corpus.lint_report})
    print(f"lint: {len(corpus.examples) - flagged} clean, {flagged} flagged")
    for issue, count in sorted(Counter(issue for _, issue in corpus.lint_report).items()):
        print(f"  {issue}: {count}")
    return 0


def cmd_train(args) -> int:
    examples = gen.read_corpus(args.corpus)
    model = classify.train(examples, alpha=args.alpha)
    classify.save_model(model, args.out)
    hits = sum(classify.predict(model, ex.question).top_intent is ex.intent for ex in examples)
    print(f"trained on {model.example_count} examples ({len(model.intents)} intents), "
          f"vocabulary {len(model.vocabulary)} -> {args.out}")
    print(f"self-replay accuracy: {hits}/{len(examples)} ({100.0 * hits / len(examples):.2f}%)")
    return 0


def cmd_eval(args) -> int:
    knowledge = kb_module.load_guide(_resolve(args.kb, default_kb_path))
    templates = gen.parse_templates(_resolve(args.templates, default_templates_path))
    fingerprint = None
    if args.corpus:
        examples = gen.read_corpus(args.corpus)
        fingerprint = classify.corpus_fingerprint(examples)
    model = classify.load_model(args.model, expected_fingerprint=fingerprint)
    if args.corpus:
        report = evaluation.replay_training(model, knowledge, examples,
                                            threshold=args.threshold, templates=templates)
    else:
        report = evaluation.replay_labeled(model, knowledge, args.labeled,
                                           threshold=args.threshold, templates=templates)
    print(report.render_table())
    document = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.json_out:
        Path(args.json_out).write_text(document + "\n", encoding="utf-8")
        print(f"json report -> {args.json_out}")
    else:
        print()
        print(document)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    state = service.bootstrap_state(
        kb_path=_resolve(args.kb, default_kb_path),
        templates_path=_resolve(args.templates, default_templates_path),
        data_dir=args.data_dir,
        model_path=args.model,
        threshold=args.threshold,
        admin_token=args.admin_token,
    )
    origins = [origin.strip() for origin in args.cors_origins.split(",") if origin.strip()]
    app = service.create_app(state, cors_origins=origins or ["*"])
    host, _, port = args.addr.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="warning")
    return 0


def cmd_chat(args) -> int:
    knowledge = kb_module.load_guide(_resolve(args.kb, default_kb_path))
    templates = gen.parse_templates(_resolve(args.templates, default_templates_path))
    model = classify.load_model(args.model)
    store = dialogue.FeedbackStore(args.data_dir)
    print("Ask about the tool (blank line or 'quit' to exit).")
    while True:
        try:
            question = input("you> ")
        except EOFError:
            break
        question = question.strip()
        if not question or question.lower() in ("quit", "exit"):
            break
        response = dialogue.respond(model, knowledge, templates, question,
                                    threshold=args.threshold, store=store)
        print(response.answer_text)
        for suggestion in response.suggestions:
            print(f"  try: {suggestion}")
        try:
            vote = input("Was this answer helpful? [y/n/skip] ").strip().lower()
        except EOFError:
            break
        if vote in ("y", "yes"):
            dialogue.record_feedback(store, response.feedback_id, "yes")
        elif vote in ("n", "no"):
            dialogue.record_feedback(store, response.feedback_id, "no")
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "serve": cmd_serve,
    "chat": cmd_chat,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ValidationFailure as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except GuideQAError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

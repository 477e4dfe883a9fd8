"""Command line surface: train, eval, simulate, teach, export.

Every subcommand exits 0 on success and 2 with a one-line diagnostic on
stderr for anything the user can fix (missing file, malformed manifest, bad
flag combination).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .benchmark import golden_longrun_condition
from .engine import Engine
from .errors import KgclError
from .evaluation import EvalMatrix, SplitMetrics, evaluate_split
from .kb import KnowledgeBase, Triple, read_triple_file
from .longrun import LongrunConfig, run_longrun
from .model import load_params, save_params
from .scheduler import Condition, ConditionKind
from .training import TrainConfig, TrainReport, run_curriculum
from .world import WorldSpec, generate_world, load_sessions


# ----------------------------------------------------------------------
# report (de)serialization shared by train, simulate and export
# ----------------------------------------------------------------------

def _matrix_to_json(matrix: EvalMatrix) -> dict:
    return {
        "protocol": matrix.protocol,
        "rows": [
            {str(j): {"mrr": cell.mrr, "hits10": cell.hits10} for j, cell in row.items()}
            for row in matrix.rows
        ],
    }


def _matrix_from_json(doc: dict) -> EvalMatrix:
    matrix = EvalMatrix(protocol=doc["protocol"])
    for row in doc["rows"]:
        matrix.add_row({int(j): SplitMetrics(**cell) for j, cell in row.items()})
    return matrix


def _report_to_json(report: TrainReport) -> dict:
    return dataclasses.asdict(report)


def _write_curriculum_artifacts(out_dir: Path, matrix: EvalMatrix, reports: list[TrainReport]) -> None:
    (out_dir / "eval_matrix_hits10.csv").write_text(matrix.to_grid_csv("hits10"), encoding="utf-8")
    (out_dir / "eval_matrix_mrr.csv").write_text(matrix.to_grid_csv("mrr"), encoding="utf-8")
    (out_dir / "eval_report.csv").write_text(matrix.to_report_csv(), encoding="utf-8")
    for report in reports:
        (out_dir / f"report_sess_{report.session_index}.csv").write_text(report.to_csv(), encoding="utf-8")


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def _cmd_train(args: argparse.Namespace) -> int:
    kb, datasets = load_sessions(args.sessions)
    config = TrainConfig(
        dim=args.dim,
        learning_rate=args.learning_rate,
        max_epochs=args.max_epochs,
        patience=args.patience,
        replay_fraction=args.replay_fraction,
        seed=args.seed,
    )
    params, matrix, reports = run_curriculum(datasets, args.mode, config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_params(params, out_dir / "checkpoint.kge")
    kb.save(out_dir / "kb.kgkb")
    _write_curriculum_artifacts(out_dir, matrix, reports)
    run = {
        "kind": "curriculum",
        "mode": args.mode,
        "config": dataclasses.asdict(config),
        "eval_matrix": _matrix_to_json(matrix),
        "reports": [_report_to_json(r) for r in reports],
    }
    (out_dir / "run.json").write_text(json.dumps(run, indent=2) + "\n", encoding="utf-8")
    final = matrix.rows[-1]
    print(f"trained {len(datasets)} sessions in {args.mode} mode -> {out_dir}")
    for j in sorted(final):
        print(f"  dev split {j}: mrr={final[j].mrr:.4f} hits@10={final[j].hits10:.4f}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    params = load_params(args.checkpoint)
    kb = KnowledgeBase.load(args.kb)
    rows = read_triple_file(args.split)
    v = kb.vocabulary
    triples = []
    for h, r, t in rows:
        if not (v.has_entity(h) and v.has_relation(r) and v.has_entity(t)):
            print(f"error: split references names missing from the knowledge base: {(h, r, t)}", file=sys.stderr)
            return 2
        triples.append(Triple(v.entity_id(h), v.relation_id(r), v.entity_id(t)))
    filtered = args.protocol == "filtered"
    metrics = evaluate_split(params, triples, kb, filtered=filtered)
    print("metric,protocol,value")
    print(f"mrr,{args.protocol},{metrics.mrr:.6f}")
    print(f"hits@10,{args.protocol},{metrics.hits10:.6f}")
    return 0


def _condition_from_json(doc: dict) -> Condition:
    kind = ConditionKind(doc.pop("kind", "quota"))
    return Condition(kind=kind, **doc)


def _load_simulate_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise KgclError(f"cannot read config {path}: {exc}")


def _cmd_simulate(args: argparse.Namespace) -> int:
    doc = _load_simulate_config(args.config)
    world_spec = WorldSpec(**doc.get("world", {}))
    train = TrainConfig(**doc.get("train", {}))
    condition = (
        _condition_from_json(dict(doc["condition"])) if "condition" in doc else golden_longrun_condition()
    )
    config = LongrunConfig(
        train=train,
        condition=condition,
        questions_per_detection=doc.get("questions_per_detection", 2),
        heldout_fraction=doc.get("heldout_fraction", 0.1),
        seed=doc.get("seed", args.seed),
    )
    world = generate_world(world_spec)
    result = run_longrun(world, config, cycles=args.cycles)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "timeline.csv").write_text(result.timeline_csv(), encoding="utf-8")
    result.engine.kb.save(out_dir / "kb.kgkb")
    save_params(result.engine.params, out_dir / "checkpoint.kge")
    world.kb.export_triples(out_dir / "world.tsv")
    run = {
        "kind": "longrun",
        "cycles": args.cycles,
        "timeline": [
            {
                "cycle": m.cycle,
                "kb_triples": m.kb_triples,
                "heldout_mrr": m.heldout.mrr,
                "heldout_hits10": m.heldout.hits10,
            }
            for m in result.timeline
        ],
    }
    (out_dir / "run.json").write_text(json.dumps(run, indent=2) + "\n", encoding="utf-8")
    last = result.timeline[-1]
    print(
        f"simulated {args.cycles} cycles -> {out_dir} "
        f"(kb={last.kb_triples} triples, heldout hits@10={last.heldout.hits10:.4f})"
    )
    return 0


def _teach_engine(args: argparse.Namespace) -> Engine:
    from .acquisition import TemplateRegistry

    kb = KnowledgeBase.load(args.kb) if args.kb else KnowledgeBase()
    condition = Condition(kind=ConditionKind.QUOTA, quota=args.quota)
    engine = Engine(
        kb=kb,
        train_config=TrainConfig(seed=args.seed),
        condition=condition,
        registry=TemplateRegistry.from_file(args.templates) if args.templates else None,
        questions_per_detection=args.questions,
        seed=args.seed,
    )
    if args.import_file:
        engine.import_triples(args.import_file)
    if args.relations:
        engine.register_relations([r.strip() for r in args.relations.split(",") if r.strip()])
    return engine


def _teach_one_question(engine: Engine, question, stdin, stdout) -> None:
    print(question.text, file=stdout)
    print("answer (yes/no)> ", end="", flush=True, file=stdout)
    answer = stdin.readline().strip().lower()
    if answer not in ("yes", "no"):
        print(f"ignoring unrecognized answer {answer!r}; question stays pending", file=stdout)
        return
    correction = None
    if answer == "no":
        print("correct tail> ", end="", flush=True, file=stdout)
        correction = stdin.readline().strip()
        if not correction:
            print("a 'no' needs the correct tail; question stays pending", file=stdout)
            return
    _, _ = engine.answer_question(question.question_id, answer, correction)
    print(engine.acks[-1], file=stdout)
    sessions_before = engine.session_index
    engine.maybe_train()
    if engine.session_index > sessions_before:
        print(f"[trained session {engine.session_index - 1}]", file=stdout)


def _cmd_teach(args: argparse.Namespace) -> int:
    engine = _teach_engine(args)
    if args.serve:
        from .service import serve

        print(f"serving teaching API on http://{args.host}:{args.port}")
        serve(engine, host=args.host, port=args.port, console_dir=args.console_dir)
        return 0

    stdin, stdout = sys.stdin, sys.stdout

    def drain_questions() -> None:
        while True:
            q = engine.next_question()
            if q is None:
                return
            _teach_one_question(engine, q, stdin, stdout)

    for label in args.detect or []:
        engine.inject_detection(label)
        drain_questions()
    if not args.detect:
        while True:
            print("detect> ", end="", flush=True, file=stdout)
            label = stdin.readline()
            if not label:
                break
            label = label.strip()
            if not label:
                continue
            engine.inject_detection(label)
            drain_questions()
    if args.out:
        engine.kb.save(args.out)
        print(f"knowledge base saved to {args.out}")
    stats = engine.stats()
    print(f"done: {stats['triples']} triples, {stats['entities']} entities")
    return 0


def _cmd_export(args: argparse.Namespace) -> int:
    if args.run:
        run_path = Path(args.run) / "run.json"
        doc = json.loads(run_path.read_text(encoding="utf-8"))
        out_dir = Path(args.out or args.run)
        out_dir.mkdir(parents=True, exist_ok=True)
        if doc["kind"] == "curriculum":
            matrix = _matrix_from_json(doc["eval_matrix"])
            reports = [TrainReport(**r) for r in doc["reports"]]
            _write_curriculum_artifacts(out_dir, matrix, reports)
            print(f"exported curriculum CSV reports -> {out_dir}")
        elif doc["kind"] == "longrun":
            lines = ["cycle,metric,value"]
            for m in doc["timeline"]:
                lines.append(f"{m['cycle']},kb_triples,{m['kb_triples']}")
                lines.append(f"{m['cycle']},heldout_mrr,{m['heldout_mrr']:.6f}")
                lines.append(f"{m['cycle']},heldout_hits10,{m['heldout_hits10']:.6f}")
            (out_dir / "timeline.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
            print(f"exported long-run timeline -> {out_dir}")
        else:
            print(f"error: unknown run kind {doc['kind']!r}", file=sys.stderr)
            return 2
        return 0
    if args.kb and args.triples:
        kb = KnowledgeBase.load(args.kb)
        count = kb.export_triples(args.triples)
        print(f"exported {count} triples -> {args.triples}")
        return 0
    print("error: export needs either --run or (--kb and --triples)", file=sys.stderr)
    return 2


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgcl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the session curriculum from a manifest")
    p.add_argument("--sessions", required=True, help="session manifest (JSON)")
    p.add_argument("--mode", choices=("classical", "continual"), default="continual")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--max-epochs", type=int, default=500)
    p.add_argument("--patience", type=int, default=50)
    p.add_argument("--replay-fraction", type=float, default=0.3)
    p.add_argument("--out-dir", default="run")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a triple file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--kb", required=True, help="knowledge base snapshot (vocabulary + filter facts)")
    p.add_argument("--split", required=True, help="triple file to rank")
    p.add_argument("--protocol", choices=("filtered", "raw"), default="filtered")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("simulate", help="run the explore/train loop against a generated world")
    p.add_argument("--config", help="JSON config (world, train, condition sections)")
    p.add_argument("--cycles", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default="simrun")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("teach", help="interactive acquisition loop (or --serve for the HTTP API)")
    p.add_argument("--kb", help="knowledge base snapshot to start from")
    p.add_argument("--import-file", help="triple file imported before teaching starts")
    p.add_argument("--relations", help="comma-separated relation names to register")
    p.add_argument("--questions", type=int, default=2, help="questions per detection")
    p.add_argument("--quota", type=int, default=10, help="train after this many new facts")
    p.add_argument("--templates", help="question template file (relation<TAB>question<TAB>correction-prompt)")
    p.add_argument("--detect", action="append", help="scripted detection label (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="save the knowledge base here when done")
    p.add_argument("--serve", action="store_true", help="serve the teaching API instead of stdin")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--console-dir", help="static console bundle to serve at /")
    p.set_defaults(func=_cmd_teach)

    p = sub.add_parser("export", help="re-emit CSV reports from a run directory")
    p.add_argument("--run", help="run directory containing run.json")
    p.add_argument("--out", help="destination directory (defaults to the run directory)")
    p.add_argument("--kb", help="knowledge base snapshot to dump as a triple file")
    p.add_argument("--triples", help="triple file destination for --kb")
    p.set_defaults(func=_cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KgclError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: missing field {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

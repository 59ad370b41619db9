"""Command-line driver for the whole workflow.

Every step runs headlessly against a file-backed project: ingest a corpus,
train groups and context models, browse groups, expand a seed set, score
against a gold dataset, train the certainty MLP, export validated sets,
or serve the HTTP API.  JSON output uses the same serializer as the
service, so equivalent requests produce identical bytes.

Exit codes: 0 success, 1 usage error, 2 data or state error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .contexts import ContextType
from .errors import NotFoundError, TermsetError
from .eval import format_report, run_benchmark
from .expansion import dumps_payload
from .mlp import MLPConfig, load_trainset, train_traced
from .project import (
    DEFAULT_CONTEXTS,
    GroupSettings,
    Project,
    TrainSettings,
)

DEFAULT_DATA_ROOT = "data"
DATA_ROOT_ENV = "TERMSET_DATA_ROOT"


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="termset", description=__doc__.split("\n\n")[0])
    parser.add_argument(
        "--data-root",
        default=os.environ.get(DATA_ROOT_ENV, DEFAULT_DATA_ROOT),
        help=f"project storage directory (env {DATA_ROOT_ENV})",
    )
    parser.add_argument(
        "--project", default="p0001", help="project id (default p0001)"
    )
    parser.add_argument(
        "--output",
        choices=("table", "json"),
        default="table",
        help="output format",
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("ingest", help="parse and cache a corpus file")
    p.add_argument("path")
    p.add_argument(
        "--conllu", action="store_true", help="input is CoNLL-U, not plain text"
    )
    p.add_argument("--name", default=None, help="project display name")

    p = sub.add_parser("train", help="group terms and train context models")
    p.add_argument(
        "--contexts",
        default=",".join(c.value for c in DEFAULT_CONTEXTS),
        help="comma-separated context types",
    )
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--min-count", type=int, default=None)
    p.add_argument("--subsample", type=float, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--min-term-freq", type=int, default=None)
    p.add_argument(
        "--quiet", action="store_true", help="suppress PROGRESS lines"
    )

    p = sub.add_parser("groups", help="list term groups")
    p.add_argument("--filter", default="")
    p.add_argument("--offset", type=int, default=0)
    p.add_argument("--limit", type=int, default=50)

    p = sub.add_parser("expand", help="expand a seed set")
    p.add_argument("--category", required=True)
    p.add_argument(
        "--seed", required=True, help='comma-separated seed terms, e.g. "java,python"'
    )
    p.add_argument("--k", type=int, default=50)
    p.add_argument("--pool-size", type=int, default=500)

    p = sub.add_parser("eval", help="score rankings against a gold dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--n", default="10,20,50", help="comma-separated cutoffs")

    p = sub.add_parser("mlp-train", help="train the certainty combiner")
    p.add_argument("--data", required=True, help="labeled feature CSV")
    p.add_argument("--hidden", type=int, default=8)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("export", help="write a saved validated set as CSV")
    p.add_argument("--category", required=True)
    p.add_argument("--out", default=None, help="output file (default stdout)")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--ui", default=None, help="static UI directory")

    return parser


def _open(args) -> Project:
    root = Path(args.data_root) / "projects" / args.project
    if not (root / "project.json").exists():
        raise NotFoundError(
            f"no project {args.project!r} under {args.data_root!r}"
        )
    return Project.open(root)


def _emit(args, payload: dict, table: str) -> None:
    if args.output == "json":
        sys.stdout.write(dumps_payload(payload) + "\n")
    else:
        print(table)


def _cmd_ingest(args) -> int:
    project = Project.open_or_create(args.data_root, args.project, args.name)
    data = Path(args.path).read_bytes()
    info = project.ingest(data, "conllu" if args.conllu else "text")
    _emit(
        args,
        info,
        f"ingested {info['sentences']} sentences "
        f"from {info['documents']} document(s) [{info['format']}]",
    )
    return 0


def _cmd_train(args) -> int:
    project = _open(args)
    try:
        contexts = [
            ContextType(n.strip())
            for n in args.contexts.split(",")
            if n.strip()
        ]
    except ValueError:
        valid = ", ".join(c.value for c in ContextType)
        print(
            f"error: unknown context type in {args.contexts!r}; "
            f"valid: {valid}",
            file=sys.stderr,
        )
        return 1
    overrides = {
        key: getattr(args, key)
        for key in (
            "dim", "epochs", "seed", "min_count", "subsample", "window",
            "workers",
        )
        if getattr(args, key) is not None
    }
    train_settings = TrainSettings.from_dict(overrides)
    group_settings = GroupSettings.from_dict(
        {"min_term_freq": args.min_term_freq}
        if args.min_term_freq is not None
        else None
    )

    def sgns_progress(pairs: int, alpha: float, loss: float) -> None:
        print(f"PROGRESS {pairs} {alpha:.6g} {loss:.6g}")

    def stage(fraction: float, message: str) -> None:
        print(f"[{fraction:5.1%}] {message}", file=sys.stderr)

    outcome = project.run_training(
        contexts,
        train_settings,
        group_settings,
        progress=None if args.output == "json" else stage,
        sgns_progress=None if args.quiet or args.output == "json" else sgns_progress,
    )
    table = (
        f"{outcome['groups']} term groups; trained: "
        + ", ".join(outcome["trained"])
    )
    if outcome["skipped"]:
        table += "; skipped: " + ", ".join(
            f"{k} ({v})" for k, v in outcome["skipped"].items()
        )
    _emit(args, outcome, table)
    return 0


def _cmd_groups(args) -> int:
    project = _open(args)
    payload = project.groups_payload(args.filter, args.offset, args.limit)
    lines = [f"{'id':>6}  {'freq':>6}  expression (members)"]
    for g in payload["groups"]:
        members = " | ".join(t["surface"] for t in g["members"])
        lines.append(f"{g['id']:>6}  {g['frequency']:>6}  {members}")
    lines.append(
        f"-- {len(payload['groups'])} of {payload['total']} group(s)"
    )
    _emit(args, payload, "\n".join(lines))
    return 0


def _cmd_expand(args) -> int:
    project = _open(args)
    terms = [t.strip() for t in args.seed.split(",") if t.strip()]
    if not terms:
        print("error: --seed must name at least one term", file=sys.stderr)
        return 1
    seed_ids = project.resolve_terms(terms)
    payload = project.expand_session(
        args.category, seed_ids, args.k, args.pool_size
    )
    lines = [
        f"category: {payload['category']}  session: {payload['session_id']}"
        f"  scorer: {payload['scorer']}",
        f"{'certainty':>9}  {'seed':>4}  {'id':>6}  expression",
    ]
    for item in payload["items"]:
        mark = "yes" if item["seed"] else ""
        lines.append(
            f"{item['certainty']:>9.4f}  {mark:>4}  "
            f"{item['group_id']:>6}  {item['canonical']}"
        )
    _emit(args, payload, "\n".join(lines))
    return 0


def _cmd_eval(args) -> int:
    project = _open(args)
    try:
        ns = [int(n) for n in args.n.split(",") if n.strip()]
    except ValueError:
        print(f"error: bad cutoff list {args.n!r}", file=sys.stderr)
        return 1
    if not ns:
        print("error: --n must list at least one cutoff", file=sys.stderr)
        return 1
    report = run_benchmark(project, args.dataset, ns)
    _emit(args, report, format_report(report))
    return 0


def _cmd_mlp_train(args) -> int:
    project = _open(args)
    data = load_trainset(args.data)
    config = MLPConfig(
        hidden=args.hidden, lr=args.lr, epochs=args.epochs, seed=args.seed
    )
    trace = train_traced(data, config)
    project.set_mlp(trace.model)
    summary = {
        "epochs_run": trace.stopped_epoch,
        "train_loss": trace.train_losses[-1] if trace.train_losses else None,
        "dev_loss": min(trace.dev_losses) if trace.dev_losses else None,
    }
    table = f"saved mlp.json after {summary['epochs_run']} epoch(s)"
    if summary["train_loss"] is not None:
        table += f"; train loss {summary['train_loss']:.4f}"
    if summary["dev_loss"] is not None:
        table += f"; best dev loss {summary['dev_loss']:.4f}"
    _emit(args, summary, table)
    return 0


def _cmd_export(args) -> int:
    project = _open(args)
    csv_text = project.validated_csv_for(args.category)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(csv_text)
    return 0


def _cmd_serve(args) -> int:
    from .service import load_service_config, run

    ui = args.ui
    if ui is None and Path("frontend/dist").is_dir():
        ui = "frontend/dist"
    config = load_service_config(
        args.config,
        data_root=args.data_root,
        port=args.port,
        host=args.host,
        ui_dir=ui,
    )
    run(config)
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "train": _cmd_train,
    "groups": _cmd_groups,
    "expand": _cmd_expand,
    "eval": _cmd_eval,
    "mlp-train": _cmd_mlp_train,
    "export": _cmd_export,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (TermsetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Operator command line: run the service, manage users, validate and load
questionnaires, bulk-ingest CSV fixtures, train offline, export series.

Exit codes: 0 success, 1 validation failure, 2 usage error. Diagnostics go to
standard error; questionnaire DSL problems print as file:line: message.
"""

from __future__ import annotations

import argparse
import csv
import getpass
import sys
import time
from pathlib import Path

from . import quest
from .auth import AuthGuard
from .core import Sample, SierraError, SubjectRecord
from .crypto import BadMasterKey, MissingMasterKey, load_master_key
from .ml import data as ml_data
from .ml import network
from .store import MAX_BATCH, SampleBatch, Store
from .service import ServiceConfig, compose_service

PROG = "sierra"


def _err(message: str) -> int:
    print(f"{PROG}: {message}", file=sys.stderr)
    return 1


def _master_key_or_none():
    try:
        return load_master_key()
    except (MissingMasterKey, BadMasterKey):
        return None


def _open_store(args) -> Store:
    return Store(Path(args.data_dir), master_key=_master_key_or_none())


# ---------------------------------------------------------------------------
# subcommands

def cmd_serve(args) -> int:
    device_keys = {}
    for pair in args.device_key or []:
        device, sep, key = pair.partition("=")
        if not sep or not device or not key:
            print(f"{PROG}: --device-key expects DEVICE=KEY, got {pair!r}", file=sys.stderr)
            return 2
        device_keys[device] = key
    cfg = ServiceConfig(
        addr=args.addr,
        data_dir=args.data_dir,
        session_ttl_ms=int(args.session_ttl_hours * 3600 * 1000),
        device_keys=device_keys,
    )
    try:
        handle = compose_service(cfg)
        handle.start()
    except SierraError as exc:
        return _err(str(exc))
    print(f"listening on {args.addr}, data in {args.data_dir}", file=sys.stderr)
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        handle.stop()
    return 0


def cmd_useradd(args) -> int:
    password = args.password or getpass.getpass("password: ")
    guard = AuthGuard(Path(args.data_dir) / "users.jsonl")
    try:
        user = guard.create_user(args.username, password, args.role, args.subject)
    except (SierraError, ValueError) as exc:
        return _err(str(exc))
    print(f"created {user.role} user {user.username!r}")
    return 0


def cmd_quest_validate(args) -> int:
    path = Path(args.file)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        return _err(str(exc))
    try:
        qdef = quest.parse_questionnaire(text)
    except quest.ParseError as exc:
        print(f"{path}:{exc.line}: {exc.message}", file=sys.stderr)
        return 1
    likert = sum(1 for it in qdef.items if it.kind == "likert")
    print(f"{qdef.id} version {qdef.version}: {len(qdef.items)} items ({likert} scored), score {qdef.score_mode}")
    return 0


def cmd_quest_load(args) -> int:
    path = Path(args.file)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        return _err(str(exc))
    store = _open_store(args)
    try:
        qdef = store.save_questionnaire(text)
    except quest.ParseError as exc:
        print(f"{path}:{exc.line}: {exc.message}", file=sys.stderr)
        return 1
    print(f"loaded {qdef.id} version {qdef.version} into {args.data_dir}")
    return 0


def cmd_ingest(args) -> int:
    path = Path(args.file)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        return _err(str(exc))
    rows = list(csv.reader(text.splitlines()))
    if not rows or [c.strip() for c in rows[0]] != ["channel", "t_ms", "value"]:
        return _err(f"{path}: expected header 'channel,t_ms,value'")
    samples = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 3:
            return _err(f"{path}:{lineno}: expected 3 cells")
        try:
            samples.append(Sample(row[0].strip(), int(row[1]), float(row[2])))
        except ValueError:
            return _err(f"{path}:{lineno}: malformed row {row!r}")

    store = _open_store(args)
    if not store.has_subject(args.subject):
        try:
            store.put_subject(SubjectRecord(id=args.subject, cohort="", phi={}))
            print(f"registered new subject {args.subject!r}", file=sys.stderr)
        except SierraError as exc:
            return _err(str(exc))

    total_accepted, total_rejected, duplicates = 0, 0, 0
    seq_no = args.seq_start
    for start in range(0, len(samples), MAX_BATCH):
        chunk = tuple(samples[start:start + MAX_BATCH])
        receipt = store.ingest_batch(
            SampleBatch(device=args.device, subject=args.subject, seq_no=seq_no, samples=chunk)
        )
        seq_no += 1
        if receipt.duplicate_batch:
            duplicates += 1
        total_accepted += receipt.accepted
        total_rejected += len(receipt.rejected)
        for index, reason in receipt.rejected:
            print(f"{path}:{start + index + 2}: rejected ({reason})", file=sys.stderr)
    print(f"accepted {total_accepted}, rejected {total_rejected}, duplicate batches {duplicates}")
    return 1 if total_rejected else 0


def cmd_export(args) -> int:
    store = _open_store(args)
    try:
        ts = store.query_series(args.subject, args.channel, args.t0, args.t1)
    except SierraError as exc:
        return _err(str(exc))
    out = csv.writer(sys.stdout)
    out.writerow(["channel", "t_ms", "value"])
    for t_ms, value in ts.points:
        out.writerow([args.channel, t_ms, repr(value)])
    return 0


def cmd_train(args) -> int:
    path = Path(args.dataset)
    try:
        text = path.read_text("utf-8")
    except OSError as exc:
        return _err(str(exc))
    try:
        dataset = ml_data.load_csv(text, args.task)
    except SierraError as exc:
        return _err(str(exc))
    try:
        layers = [int(v) for v in args.layers.split(",")]
    except ValueError:
        print(f"{PROG}: --layers expects integers like 2,8,2", file=sys.stderr)
        return 2
    if layers[0] != dataset.features.shape[1]:
        return _err(f"first layer is {layers[0]} but the dataset has {dataset.features.shape[1]} features")
    if args.task == "classification" and layers[-1] != dataset.n_classes:
        return _err(f"last layer is {layers[-1]} but the dataset has {dataset.n_classes} classes")
    try:
        model = network.init_mlp(layers, args.activation, args.task, args.seed)
        cfg = network.TrainConfig(
            learning_rate=args.lr,
            epochs=args.epochs,
            batch_size=args.batch_size,
            momentum=args.momentum,
            seed=args.seed,
        )
        trained, history = network.train(model, dataset.features, dataset.labels, cfg)
    except (SierraError, ValueError) as exc:
        return _err(str(exc))
    print(f"final_loss={history[-1]:.12f}")
    if args.task == "classification":
        acc = float((network.predict(trained, dataset.features) == dataset.labels).mean())
        print(f"train_accuracy={acc:.6f}")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG, description="Remote health monitoring platform operations."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--addr", default="127.0.0.1:8760")
    p.add_argument("--data-dir", default="data")
    p.add_argument("--session-ttl-hours", type=float, default=12.0)
    p.add_argument("--device-key", action="append", metavar="DEVICE=KEY")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("useradd", help="create a dashboard user")
    p.add_argument("username")
    p.add_argument("--role", required=True, choices=["admin", "expert", "subject"])
    p.add_argument("--subject", help="linked subject id (required for subject role)")
    p.add_argument("--password", help="password (prompted when omitted)")
    p.add_argument("--data-dir", default="data")
    p.set_defaults(func=cmd_useradd)

    p = sub.add_parser("quest", help="questionnaire tools")
    quest_sub = p.add_subparsers(dest="quest_command", required=True)
    pv = quest_sub.add_parser("validate", help="parse a questionnaire file")
    pv.add_argument("file")
    pv.set_defaults(func=cmd_quest_validate)
    pl = quest_sub.add_parser("load", help="parse and persist a questionnaire")
    pl.add_argument("file")
    pl.add_argument("--data-dir", default="data")
    pl.set_defaults(func=cmd_quest_load)

    p = sub.add_parser("ingest", help="bulk-ingest a channel,t_ms,value CSV")
    p.add_argument("--file", required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--device", required=True)
    p.add_argument("--seq-start", type=int, default=1)
    p.add_argument("--data-dir", default="data")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("export", help="dump a series window as CSV")
    p.add_argument("--subject", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--t0", type=int, required=True)
    p.add_argument("--t1", type=int, required=True)
    p.add_argument("--data-dir", default="data")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("train", help="train an MLP on a CSV dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--layers", required=True, help="comma-separated sizes, e.g. 2,8,2")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--activation", default="tanh", choices=["relu", "tanh"])
    p.add_argument("--task", default="classification", choices=["classification", "regression"])
    p.set_defaults(func=cmd_train)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SierraError as exc:
        return _err(str(exc))


if __name__ == "__main__":
    sys.exit(main())

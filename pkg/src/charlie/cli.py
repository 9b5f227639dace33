"""Command line interface: `agent <command>`."""
from __future__ import annotations

import argparse
import os
import sys

from .config import AgentConfig, dump_config, load_config
from .kb import KnowledgeBase
from .policy import Constraint, Obligation, PolicyRule, PolicyStore
from .provenance import generate_private_key, save_key_file
from .terms import Dataset
from .trust import TrustAssertion, TrustStore


def _cmd_init(args) -> int:
    directory = os.path.abspath(args.dir)
    os.makedirs(directory, exist_ok=True)
    key_file = os.path.join(directory, "agent.key")
    kb_file = os.path.join(directory, "agent.trig")
    config_file = os.path.join(directory, "agent.cfg")
    if os.path.exists(config_file) and not args.force:
        print(f"refusing to overwrite {config_file} (use --force)", file=sys.stderr)
        return 1
    save_key_file(key_file, generate_private_key())
    KnowledgeBase(Dataset()).persist(kb_file)
    config = AgentConfig(
        webid=args.webid or f"http://{args.host}:{args.port}/profile#me",
        display_name=args.name,
        listen_host=args.host,
        listen_port=args.port,
        key_file="agent.key",
        kb_file="agent.trig",
        contacts=args.contact or [],
    )
    with open(config_file, "w", encoding="utf-8") as fh:
        fh.write(dump_config(config))
    print(f"initialized agent '{args.name}' in {directory}")
    return 0


def _cmd_serve(args) -> int:
    from .runtime import Agent
    from .server import AgentServer

    config = load_config(args.config)
    server = AgentServer(Agent(config))
    server.start()
    print(f"{config.display_name} listening on http://{config.listen_host}:{server.port}")
    try:
        import time

        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.close()
    return 0


def _cmd_demo(args) -> int:
    from .demo import run_schedule_demo

    if args.scenario != "schedule":
        print(f"unknown demo scenario {args.scenario!r}", file=sys.stderr)
        return 2
    return run_schedule_demo(gating=args.gating, workdir=args.dir)


def _cmd_keys_generate(args) -> int:
    seed = bytes.fromhex(args.seed) if args.seed else None
    save_key_file(args.out, generate_private_key(seed))
    print(f"wrote {args.out}")
    return 0


def _cmd_kb(args) -> int:
    config = load_config(args.config)
    kb = KnowledgeBase.load(config.kb_file)
    if args.kb_command == "export":
        from .serializer import serialize

        text = serialize(kb.dataset, "trig")
        if args.out and args.out != "-":
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    # import: merge an RDF file into the KB (syntax from the extension,
    # TriG when the extension is unknown, e.g. process substitution)
    from .parser import parse, syntax_for_path

    try:
        syntax = syntax_for_path(args.infile)
    except ValueError:
        syntax = "trig"
    with open(args.infile, "r", encoding="utf-8") as fh:
        incoming = parse(fh.read(), syntax, "")
    kb.add_quads(incoming)
    kb.persist(config.kb_file)
    print(f"imported {len(incoming)} quads into {config.kb_file}")
    return 0


def _cmd_policy_add(args) -> int:
    config = load_config(args.config)
    kb = KnowledgeBase.load(config.kb_file)
    store = PolicyStore.from_dataset(kb.dataset)
    constraints = []
    if args.not_after:
        constraints.append(Constraint("not-after", args.not_after))
    if args.purpose:
        constraints.append(Constraint("purpose-equals", args.purpose))
    obligations = []
    if args.delete_after:
        obligations.append(Obligation("delete-after", args.delete_after))
    if args.no_resharing:
        obligations.append(Obligation("no-resharing"))
    policy = PolicyRule(
        uid=args.uid,
        rule_kind=args.kind,
        action=args.action,
        target=args.target,
        assignee=args.assignee,
        constraints=tuple(constraints),
        obligations=tuple(obligations),
    )
    store.upsert(policy)
    kb.replace_graph(
        "urn:charlie:policies",
        Dataset(q for q in store.to_dataset()),
    )
    kb.persist(config.kb_file)
    print(f"added {args.kind} {args.uid}")
    return 0


def _cmd_trust_add(args) -> int:
    config = load_config(args.config)
    kb = KnowledgeBase.load(config.kb_file)
    store = TrustStore.from_dataset(kb.dataset)
    store.upsert(
        TrustAssertion(
            source=args.source,
            scope=args.scope,
            min_provenance=args.min,
            granted=not args.refuse,
            decided_by="user",
        )
    )
    kb.replace_graph("urn:charlie:trust", Dataset(q for q in store.to_dataset()))
    kb.persist(config.kb_file)
    verb = "refused" if args.refuse else "granted"
    print(f"trust {verb}: {args.source} for {args.scope}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agent", description="Semi-autonomous personal agent"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="create a fresh agent directory")
    p_init.add_argument("--dir", default=".")
    p_init.add_argument("--name", required=True, help="display name")
    p_init.add_argument("--host", default="127.0.0.1")
    p_init.add_argument("--port", type=int, default=8700)
    p_init.add_argument("--webid", default="")
    p_init.add_argument("--contact", action="append", help="known WebID (repeatable)")
    p_init.add_argument("--force", action="store_true")
    p_init.set_defaults(fn=_cmd_init)

    p_serve = sub.add_parser("serve", help="run the agent HTTP server")
    p_serve.add_argument("--config", required=True)
    p_serve.set_defaults(fn=_cmd_serve)

    p_demo = sub.add_parser("demo", help="run a built-in scenario")
    p_demo.add_argument("scenario", choices=["schedule"])
    p_demo.add_argument("--gating", action="store_true",
                        help="leave permissions/trust ungranted so the flow pauses")
    p_demo.add_argument("--dir", default=None, help="keep fixture state here")
    p_demo.set_defaults(fn=_cmd_demo)

    p_kb = sub.add_parser("kb", help="export or import the knowledge base")
    kb_sub = p_kb.add_subparsers(dest="kb_command", required=True)
    p_export = kb_sub.add_parser("export")
    p_export.add_argument("--config", required=True)
    p_export.add_argument("--out", default="-")
    p_export.set_defaults(fn=_cmd_kb)
    p_import = kb_sub.add_parser("import")
    p_import.add_argument("--config", required=True)
    p_import.add_argument("--in", dest="infile", required=True)
    p_import.set_defaults(fn=_cmd_kb)

    p_policy = sub.add_parser("policy", help="manage usage policies")
    policy_sub = p_policy.add_subparsers(dest="policy_command", required=True)
    p_padd = policy_sub.add_parser("add")
    p_padd.add_argument("--config", required=True)
    p_padd.add_argument("--uid", required=True)
    p_padd.add_argument("--kind", choices=["permission", "prohibition"], default="permission")
    p_padd.add_argument("--action", choices=["read", "use", "share"], default="read")
    p_padd.add_argument("--target", required=True)
    p_padd.add_argument("--assignee", required=True)
    p_padd.add_argument("--purpose", default="")
    p_padd.add_argument("--not-after", default="")
    p_padd.add_argument("--delete-after", default="")
    p_padd.add_argument("--no-resharing", action="store_true")
    p_padd.set_defaults(fn=_cmd_policy_add)

    p_trust = sub.add_parser("trust", help="manage trust assertions")
    trust_sub = p_trust.add_subparsers(dest="trust_command", required=True)
    p_tadd = trust_sub.add_parser("add")
    p_tadd.add_argument("--config", required=True)
    p_tadd.add_argument("--source", required=True)
    p_tadd.add_argument("--scope", default="urn:charlie:trust:allTopics")
    p_tadd.add_argument("--min", choices=["any", "signed", "signed-by-source"], default="signed")
    p_tadd.add_argument("--refuse", action="store_true")
    p_tadd.set_defaults(fn=_cmd_trust_add)

    p_keys = sub.add_parser("keys", help="key management")
    keys_sub = p_keys.add_subparsers(dest="keys_command", required=True)
    p_kgen = keys_sub.add_parser("generate")
    p_kgen.add_argument("--out", required=True)
    p_kgen.add_argument("--seed", default="", help="64 hex chars for a fixed key")
    p_kgen.set_defaults(fn=_cmd_keys_generate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())

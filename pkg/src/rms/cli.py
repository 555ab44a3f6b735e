"""Command-line interface: ``rms check | project | simulate | verify | fmt``.

Exit status: 0 success, 1 typing or property rejection, 2 parse or
validation error, 3 I/O error. Diagnostics go to standard error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import kernel as k
from .parser import ParseError, format_source, parse, parse_script, pretty, pretty_math
from .projection import Undefined, participants, project, well_formed
from .semantics import (ScriptError, format_step, format_trace_entry, network_steps, normalize,
                        run_random, select, session_status)
from .typecheck import type_network, type_session
from .verify import ExploreConfig, check_fidelity, check_progress, check_subject_reduction

EXIT_OK, EXIT_REJECTED, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3
PROPERTIES = ("sr", "fidelity", "progress")

_STR = {"type": "string"}
_STR_OR_NULL = {"type": ["string", "null"]}
_CONDITION = {
    "type": "object",
    "required": ["participant", "condition", "holds", "locus", "detail"],
    "properties": {"participant": _STR_OR_NULL, "condition": _STR, "holds": {"type": "boolean"},
                   "locus": _STR, "detail": _STR},
}
_TYPING = {
    "type": "object",
    "required": ["outcome", "session", "pair", "participants", "conditions"],
    "properties": {
        "outcome": {"enum": ["accepted", "rejected"]},
        "session": _STR_OR_NULL,
        "pair": _STR_OR_NULL,
        "participants": {"type": "array", "items": {
            "type": "object", "required": ["participant", "type"],
            "properties": {"participant": _STR, "type": _STR}}},
        "conditions": {"type": "array", "items": _CONDITION},
    },
}
_VERIFY = {
    "type": "object",
    "required": ["property", "verdict", "states", "transitions", "complete", "detail", "counterexample"],
    "properties": {
        "property": _STR, "verdict": {"enum": ["holds", "violated", "inconclusive"]},
        "states": {"type": "integer"}, "transitions": {"type": "integer"},
        "complete": {"type": "boolean"}, "detail": _STR,
        "counterexample": {"type": "array", "items": _STR},
    },
}

#: JSON Schema of the ``--json`` output of each subcommand.
SCHEMAS = {
    "check": {
        "type": "object",
        "required": ["command", "outcome", "wellformed", "sessions"],
        "properties": {
            "command": {"const": "check"},
            "outcome": {"enum": ["accepted", "rejected"]},
            "wellformed": {"type": "object", "additionalProperties": {
                "type": "object", "required": ["ok", "failures"],
                "properties": {"ok": {"type": "boolean"},
                               "failures": {"type": "array", "items": _STR}}}},
            "sessions": {"type": "array", "items": _TYPING},
        },
    },
    "project": {
        "type": "object",
        "required": ["command", "global", "projections"],
        "properties": {
            "command": {"const": "project"}, "global": _STR,
            "projections": {"type": "array", "items": {
                "type": "object", "required": ["participant", "defined", "type", "reason"],
                "properties": {"participant": _STR, "defined": {"type": "boolean"},
                               "type": _STR_OR_NULL, "reason": _STR_OR_NULL}}},
        },
    },
    "simulate": {
        "type": "object",
        "required": ["command", "steps", "final", "error"],
        "properties": {
            "command": {"const": "simulate"},
            "steps": {"type": "array", "items": {
                "type": "object",
                "required": ["n", "rule", "label", "participants", "session", "state"],
                "properties": {"n": {"type": "integer"}, "rule": _STR, "label": _STR,
                               "participants": {"type": "array", "items": _STR},
                               "session": _STR_OR_NULL, "state": _STR}}},
            "final": {"type": "array", "items": {
                "type": "object", "required": ["session", "status", "state"],
                "properties": {"session": _STR_OR_NULL, "status": {"enum": ["terminal", "stuck", "live"]},
                               "state": _STR}}},
            "error": _STR_OR_NULL,
        },
    },
    "verify": {
        "type": "object",
        "required": ["command", "outcome", "sessions", "properties"],
        "properties": {
            "command": {"const": "verify"},
            "outcome": {"enum": ["holds", "violated", "inconclusive", "rejected"]},
            "sessions": {"type": "array", "items": _TYPING},
            "properties": {"type": "array", "items": _VERIFY},
        },
    },
    "fmt": {
        "type": "object", "required": ["command", "text"],
        "properties": {"command": {"const": "fmt"}, "text": _STR},
    },
}


class _Exit(Exception):
    def __init__(self, code: int):
        self.code = code


class _Out:
    def __init__(self, stdout, stderr):
        self.stdout, self.stderr = stdout, stderr
        env = os.environ.get("RMS_COLOR")
        self.color = env != "0" and (env == "1" or (hasattr(stdout, "isatty") and stdout.isatty()))

    def paint(self, text: str, ok: bool | None) -> str:
        if not self.color or ok is None:
            return text
        return f"\033[{'32' if ok else '31'}m{text}\033[0m"

    def print(self, text: str = ""):
        print(text, file=self.stdout)

    def error(self, text: str):
        print(f"rms: {text}", file=self.stderr)

    def json(self, doc: dict):
        print(json.dumps(doc, indent=2, ensure_ascii=False), file=self.stdout)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rms", description="Reversible multiparty sessions with checkpoints.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", help="input .rms file")
        p.add_argument("--json", action="store_true", help="emit a machine-readable report")
        return p

    add("check", "type check every session against its global pair")
    p = add("project", "project a global type onto its participants")
    p.add_argument("--type", required=True, dest="gtype", metavar="NAME", help="declared global type")
    p.add_argument("--on", metavar="P", help="only this participant")
    p.add_argument("--ascii", action="store_true", help="print projections in input syntax")
    p = add("simulate", "run the network under a scheduler")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--script", metavar="S", help="file of comm/choose/roll directives")
    mode.add_argument("--seed", type=int, help="random scheduler seed")
    mode.add_argument("--interactive", action="store_true", help="choose each step from a menu")
    p.add_argument("--steps", type=int, default=None, metavar="K", help="maximum number of steps")
    p = add("verify", "explore the state space and check properties")
    p.add_argument("--depth", type=int, default=12, metavar="K")
    p.add_argument("--props", default=",".join(PROPERTIES), help="comma list of sr,fidelity,progress")
    p.add_argument("--max-states", type=int, default=100_000)
    p.add_argument("--no-admission", action="store_true", help="explore even if typing rejects a session")
    add("fmt", "print the file in canonical form")
    return ap


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


def run(argv, stdin=None, stdout=None, stderr=None) -> int:
    out = _Out(stdout or sys.stdout, stderr or sys.stderr)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    if args.command == "verify":
        props = [x.strip() for x in args.props.split(",") if x.strip()]
        bad = [x for x in props if x not in PROPERTIES]
        if bad or not props:
            out.error(f"unknown property {bad[0] if bad else '(none)'}; choose from {','.join(PROPERTIES)}")
            return EXIT_INPUT
        if args.depth < 1:
            out.error("--depth must be at least 1")
            return EXIT_INPUT
        args.props = props
    if args.command == "simulate" and args.steps is not None and args.steps < 0:
        out.error("--steps must be non-negative")
        return EXIT_INPUT
    try:
        sf = _load(args.file, out)
        handler = {"check": _check, "project": _project, "simulate": _simulate,
                   "verify": _verify, "fmt": _fmt}[args.command]
        return handler(args, sf, out, stdin or sys.stdin)
    except _Exit as exc:
        return exc.code


def _read(path: str, out: _Out) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        out.error(f"cannot read {path}: {exc.strerror or exc}")
        raise _Exit(EXIT_IO) from None


def _load(path: str, out: _Out):
    text = _read(path, out)
    try:
        return parse(text)
    except ParseError as exc:
        out.error(f"{path}:{exc}")
    except k.ValidationError as exc:
        out.error(f"{path}: {exc}")
    raise _Exit(EXIT_INPUT)


def _pairs(sf, out: _Out, names) -> list:
    missing = [n for n in names if n not in sf.pairs]
    if missing:
        out.error(f"session {missing[0]} has no global pair (write 'session {missing[0]} : < [] ; G > {{...}}')")
        raise _Exit(EXIT_REJECTED)
    return [sf.pairs[n] for n in names]


# ---------------------------------------------------------------------------


def _check(args, sf, out, stdin) -> int:
    wf_doc, wf_ok = {}, True
    for name, g in sf.globals.items():
        wf = well_formed(g)
        wf_ok &= wf.ok
        wf_doc[name] = {"ok": wf.ok, "failures": wf.diagnostics()}
    names = sf.session_names()
    gps = _pairs(sf, out, names)
    report = type_network(sf.network(), gps)
    ok = wf_ok and report.accepted
    outcome = "accepted" if ok else "rejected"
    if args.json:
        out.json({"command": "check", "outcome": outcome, "wellformed": wf_doc,
                  "sessions": [s.to_dict() for s in report.sessions]})
    else:
        for name, doc in wf_doc.items():
            if not doc["ok"]:
                out.print(out.paint(f"global {name} is not well formed", False))
                for f in doc["failures"]:
                    out.print(f"  {f}")
        for s in report.sessions:
            out.print(out.paint(s.render(), s.accepted))
        out.print(out.paint(outcome, ok))
    if not ok:
        for s in report.sessions:
            for c in s.failures():
                out.error(f"{s.session}: {c}")
    return EXIT_OK if ok else EXIT_REJECTED


def _project(args, sf, out, stdin) -> int:
    if args.gtype not in sf.globals:
        out.error(f"no global type named {args.gtype}")
        return EXIT_INPUT
    g = sf.globals[args.gtype]
    targets = [args.on] if args.on else sorted(participants(g))
    show = pretty if args.ascii else pretty_math
    rows, ok = [], True
    for p in targets:
        t = project(g, p)
        if isinstance(t, Undefined):
            ok = False
            rows.append({"participant": p, "defined": False, "type": None, "reason": str(t)})
        else:
            rows.append({"participant": p, "defined": True, "type": show(t), "reason": None})
    if args.json:
        out.json({"command": "project", "global": args.gtype, "projections": rows})
    else:
        for r in rows:
            text = r["type"] if r["defined"] else r["reason"]
            out.print(text if args.on else f"{r['participant']} : {text}")
    for r in rows:
        if not r["defined"]:
            out.error(f"projection of {args.gtype} onto {r['participant']} is {r['reason']}")
    return EXIT_OK if ok else EXIT_REJECTED


def _simulate(args, sf, out, stdin) -> int:
    network = sf.network()
    names = sf.session_names()
    multi = len(names) > 1
    steps, error = [], None

    def emit(ns):
        steps.append(ns)
        if not args.json:
            out.print(format_trace_entry(len(steps), ns.step, names[ns.index] if multi else None))

    current = network
    if args.interactive:
        current = _interactive(current, names, args.steps, out, stdin, emit)
    elif args.seed is not None or (args.script is None and not sf.script):
        run = run_random(network, args.seed or 0, 100 if args.steps is None else args.steps, names)
        for ns in run.steps:
            emit(ns)
        current = run.final
    else:
        if args.script is not None:
            try:
                directives = parse_script(_read(args.script, out))
            except ParseError as exc:
                out.error(f"{args.script}:{exc}")
                return EXIT_INPUT
        else:
            directives = sf.script
        for d in directives:
            if args.steps is not None and len(steps) >= args.steps:
                break
            try:
                ns = select(current, names, d)
            except ScriptError as exc:
                error = str(exc)
                break
            emit(ns)
            current = ns.target

    final = [{"session": names[i], "status": session_status(m), "state": pretty(normalize(m))}
             for i, m in enumerate(current.sessions)]
    if args.json:
        out.json({"command": "simulate", "error": error, "final": final, "steps": [
            {"n": i + 1, "rule": ns.step.rule, "label": ns.step.describe(),
             "participants": list(ns.step.participants), "session": names[ns.index],
             "state": pretty(normalize(ns.target.sessions[ns.index]))}
            for i, ns in enumerate(steps)]})
    else:
        for f in final:
            out.print(f"final: {f['session']} {f['status']}")
    if error:
        out.error(error)
        return EXIT_REJECTED
    return EXIT_OK


def _interactive(current, names, limit, out, stdin, emit):
    multi = len(names) > 1
    count = 0
    while limit is None or count < limit:
        enabled = network_steps(current)
        if not enabled:
            out.print("no enabled steps")
            break
        for i, ns in enumerate(enabled):
            out.print(f"  [{i}] " + format_step(i, ns.step, names[ns.index] if multi else None).split(": ", 1)[1])
        out.print("select a step (q to quit):")
        line = stdin.readline()
        if not line or line.strip() in ("q", "quit"):
            break
        try:
            choice = enabled[int(line.strip())]
        except (ValueError, IndexError):
            out.error(f"not a step number: {line.strip()}")
            continue
        emit(choice)
        current = choice.target
        count += 1
    return current


def _verify(args, sf, out, stdin) -> int:
    names = sf.session_names()
    gps = _pairs(sf, out, names)
    network = sf.network()
    cfg = ExploreConfig(depth=args.depth, max_states=args.max_states)
    admission = [type_session(m, gp) for m, gp in zip(network.sessions, gps)]
    reports = []
    rejected = not all(r.accepted for r in admission)
    if rejected and not args.no_admission:
        outcome = "rejected"
    else:
        for m, gp in zip(network.sessions, gps):
            if "sr" in args.props:
                reports.append(_named(check_subject_reduction(m, gp, cfg), m.name, multi=len(names) > 1))
            if "fidelity" in args.props:
                reports.append(_named(check_fidelity(m, gp, cfg), m.name, multi=len(names) > 1))
        if "progress" in args.props:
            reports.append(check_progress(network, gps, cfg))
        verdicts = {r.verdict for r in reports}
        outcome = ("violated" if "violated" in verdicts
                   else "inconclusive" if "inconclusive" in verdicts else "holds")
    if args.json:
        out.json({"command": "verify", "outcome": outcome,
                  "sessions": [r.to_dict() for r in admission],
                  "properties": [r.to_dict() for r in reports]})
    else:
        for r in admission:
            if not r.accepted:
                out.print(out.paint(r.render(), False))
        for r in reports:
            out.print(out.paint(r.render(), {"holds": True, "violated": False}.get(r.verdict)))
        out.print(outcome)
    if outcome == "rejected":
        out.error("typing rejects the network; use --no-admission to explore anyway")
    return EXIT_REJECTED if outcome in ("rejected", "violated") else EXIT_OK


def _named(report, name, multi):
    if multi and name:
        report.prop = f"{report.prop}[{name}]"
    return report


def _fmt(args, sf, out, stdin) -> int:
    text = format_source(sf)
    if args.json:
        out.json({"command": "fmt", "text": text})
    else:
        out.print(text.rstrip("\n"))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

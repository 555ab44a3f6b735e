"""Labelled transitions of configurations, sessions, networks and global pairs.

Recursion in an active process is unfolded at the head before any rule is
matched. Input values are not enumerated: a receive step is a slot that is
filled at communication time with the value the sender evaluated, see
:func:`fire_receive`.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

from . import kernel as k
from .parser import Directive, pretty

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Action labels


@dataclass(frozen=True)
class Tau:
    def __str__(self):
        return "tau"


@dataclass(frozen=True)
class Send:
    peer: str
    label: str
    value: k.Value | None = None

    def __str__(self):
        return f"{self.peer}!{self.label}{_payload(self.value)}"


@dataclass(frozen=True)
class Recv:
    peer: str
    label: str
    value: k.Value | None = None

    def __str__(self):
        return f"{self.peer}?{self.label}{_payload(self.value)}"


@dataclass(frozen=True)
class Roll:
    name: str

    def __str__(self):
        return self.name


Label = Tau | Send | Recv | Roll


def _payload(v) -> str:
    return "" if v is None else f"({pretty(k.Lit(v))})"


# ---------------------------------------------------------------------------
# Configurations


@dataclass(frozen=True)
class ConfigStep:
    """One transition of a configuration.

    ``target`` is None for receive slots that bind a variable; use
    :func:`fire_receive` to obtain the successor for a concrete value.
    ``source`` is the choice node that fired.
    """

    rule: str
    label: Label
    target: k.Configuration | None
    branch: str | None = None
    source: object = None
    sort: k.Sort | None = None
    note: str = ""


def config_steps(c: k.Configuration) -> list[ConfigStep]:
    out: list[ConfigStep] = []
    p = k.unfold_all(c.active)
    if isinstance(p, k.IntChoice):
        if p.ckpt is not None:
            for b in p.branches:
                committed = k.IntChoice(p.peer, (b,), tag=p.tag)
                out.append(ConfigStep("CkChc", Tau(), k.Configuration(c.history + (p,), committed),
                                      b.label, p))
        elif len(p.branches) > 1:
            for b in p.branches:
                committed = k.IntChoice(p.peer, (b,), tag=p.tag)
                out.append(ConfigStep("Chc", Tau(), k.Configuration(c.history, committed), b.label, p))
        else:
            b = p.branches[0]
            try:
                v = None if b.expr is None else k.evaluate(b.expr)
            except k.EvalError as exc:
                log.debug("send of %s blocked: %s", b.label, exc)
            else:
                out.append(ConfigStep("Snd", Send(p.peer, b.label, v), k.Configuration(c.history, b.cont),
                                      b.label, p, None if v is None else k.sort_of_value(v)))
    elif isinstance(p, k.ExtChoice):
        rule = "CkRcv" if p.ckpt is not None else "Rcv"
        for b in p.branches:
            target = fire_receive(c, b.label, None) if b.var is None else None
            out.append(ConfigStep(rule, Recv(p.peer, b.label), target, b.label, p, b.sort))
    for i, h in enumerate(c.history):
        out.append(ConfigStep("RbP", Roll(h.ckpt), k.Configuration(c.history[:i], h), h.ckpt, h))
    return out


def fire_receive(c: k.Configuration, label: str, value: k.Value | None) -> k.Configuration:
    """Successor of ``c`` after receiving ``label(value)`` by [Rcv] or [CkRcv]."""
    p = k.unfold_all(c.active)
    if not isinstance(p, k.ExtChoice):
        raise k.CalculusError("active process is not an input")
    for b in p.branches:
        if b.label == label:
            cont = b.cont if b.var is None else k.subst_value(b.cont, b.var, value)
            hist = c.history + (p,) if p.ckpt is not None else c.history
            return k.Configuration(hist, cont)
    raise k.CalculusError(f"no input branch {label}")


def ck_names(c: k.Configuration) -> frozenset[str] | None:
    """Checkpoint names of the history, defined (not None) only when the active process is 0."""
    if not isinstance(c.active, k.Inact):
        return None
    return frozenset(h.ckpt for h in c.history)


# ---------------------------------------------------------------------------
# Sessions


@dataclass(frozen=True)
class SessionStep:
    """A session-level tau step.

    ``rule`` is Chc, CkChc, Com or RbM. For Com, ``participants`` is
    (sender, receiver) and ``sort`` is the receiver's binder sort; for RbM
    it lists the participants that roll back to ``ckpt``.
    """

    rule: str
    target: k.Session
    participants: tuple[str, ...]
    branch: str | None = None
    ckpt: str | None = None
    value: k.Value | None = None
    sort: k.Sort | None = None
    sources: tuple = ()
    recv_rule: str | None = None

    def describe(self) -> str:
        if self.rule in ("Chc", "CkChc"):
            return f"tau {self.participants[0]} chooses {self.branch}"
        if self.rule == "Com":
            p, q = self.participants
            return f"{p} -> {q} {self.branch}{_payload(self.value)}"
        return f"roll {self.ckpt}"


def session_steps(m: k.Session) -> list[SessionStep]:
    out: list[SessionStep] = []
    steps = {p: config_steps(c) for p, c in m.items()}
    for p, ss in steps.items():
        for s in ss:
            if isinstance(s.label, Tau):
                out.append(SessionStep(s.rule, m.update({p: s.target}), (p,), s.branch,
                                       sources=(s.source.tag,)))
    for p, ss in steps.items():
        for s in ss:
            if not isinstance(s.label, Send) or s.label.peer not in m or s.label.peer == p:
                continue
            q = s.label.peer
            for r in steps[q]:
                if not (isinstance(r.label, Recv) and r.label.peer == p and r.label.label == s.label.label):
                    continue
                # payload presence must agree for a substitution to make sense
                if (s.label.value is None) != (r.sort is None):
                    continue
                cq = fire_receive(m[q], r.branch, s.label.value)
                out.append(SessionStep("Com", m.update({p: s.target, q: cq}), (p, q), s.branch,
                                       value=s.label.value, sort=r.sort,
                                       sources=(s.source.tag, r.source.tag), recv_rule=r.rule))
    out.extend(_rollbacks(m))
    return out


def _rollbacks(m: k.Session) -> list[SessionStep]:
    names = sorted({h.ckpt for _, c in m.items() for h in c.history})
    out = []
    for a in names:
        changes, ok = {}, True
        for p, c in m.items():
            idx = [i for i, h in enumerate(c.history) if h.ckpt == a]
            if idx:
                if len(idx) > 1:
                    log.warning("participant %s has %d checkpoints named %s; rolling back to the last",
                                p, len(idx), a)
                i = idx[-1]
                changes[p] = k.Configuration(c.history[:i], c.history[i])
            else:
                names_q = ck_names(c)
                if names_q is None or a in names_q:
                    ok = False
                    break
        if ok:
            out.append(SessionStep("RbM", m.update(changes), tuple(changes), ckpt=a))
    return out


def normalize(m: k.Session) -> k.Session:
    """Canonical form: participants sorted, neutral entries ``<[] ; end>`` dropped."""
    entries = sorted((p, c) for p, c in m.items() if not c.is_idle())
    return k.Session(tuple(entries), m.name)


def session_equiv(m1: k.Session, m2: k.Session) -> bool:
    return normalize(m1) == normalize(m2)


def session_status(m: k.Session) -> str:
    """``terminal`` when every active process is 0, ``stuck`` when nothing else can move, else ``live``."""
    if all(isinstance(c.active, k.Inact) for _, c in m.items()):
        return "terminal"
    return "live" if session_steps(m) else "stuck"


# ---------------------------------------------------------------------------
# Networks


@dataclass(frozen=True)
class NetworkStep:
    index: int
    step: SessionStep
    target: k.Network


def network_steps(n: k.Network) -> list[NetworkStep]:
    out = []
    for i, m in enumerate(n.sessions):
        for s in session_steps(m):
            sessions = n.sessions[:i] + (s.target,) + n.sessions[i + 1:]
            out.append(NetworkStep(i, s, k.Network(sessions)))
    return out


# ---------------------------------------------------------------------------
# Global pairs


@dataclass(frozen=True)
class GlobalStep:
    rule: str
    target: k.GlobalPair
    branch: str | None = None
    ckpt: str | None = None


def global_steps(gp: k.GlobalPair) -> list[GlobalStep]:
    g = k.unfold_all(gp.active)
    out = []
    if isinstance(g, k.Comm):
        if g.ckpt is not None:
            out.append(GlobalStep("G-CkChc", k.GlobalPair(gp.history + (g,), k.strip_ckpt(g)), ckpt=g.ckpt))
        else:
            for b in g.branches:
                out.append(GlobalStep("G-Com", k.GlobalPair(gp.history, b.cont), b.label))
    for i, h in enumerate(gp.history):
        out.append(GlobalStep("G-Rb", k.GlobalPair(gp.history[:i], h), ckpt=h.ckpt))
    return out


# ---------------------------------------------------------------------------
# Traces and schedulers


def format_step(n: int, step: SessionStep, session_name: str | None = None) -> str:
    where = ",".join(step.participants)
    if session_name:
        where = f"{session_name}:{where}"
    return f"step {n}: [{step.rule}] {step.describe()} @ {where}"


def format_trace_entry(n: int, step: SessionStep, session_name: str | None = None) -> str:
    return format_step(n, step, session_name) + "\n  " + pretty(normalize(step.target))


def matches(step: SessionStep, d: Directive) -> bool:
    """Whether a session step is the one a scheduler directive asks for."""
    if d.kind == "choose":
        p, lab = d.args
        return step.rule in ("Chc", "CkChc") and step.participants == (p,) and step.branch == lab
    if d.kind == "comm":
        p, q, lab = d.args
        return step.rule == "Com" and step.participants == (p, q) and step.branch == lab
    if d.kind == "roll":
        return step.rule == "RbM" and step.ckpt == d.args[0]
    raise ValueError(f"unknown directive {d.kind}")


class ScriptError(k.CalculusError):
    def __init__(self, directive: Directive, message: str):
        self.directive = directive
        super().__init__(f"line {directive.line}: {directive}: {message}")


@dataclass
class Run:
    """A sequence of network steps from an initial network."""

    initial: k.Network
    names: list[str | None]
    steps: list[NetworkStep] = field(default_factory=list)

    @property
    def final(self) -> k.Network:
        return self.steps[-1].target if self.steps else self.initial

    def trace_lines(self) -> list[str]:
        multi = len(self.names) > 1
        return [format_trace_entry(i + 1, ns.step, self.names[ns.index] if multi else None)
                for i, ns in enumerate(self.steps)]

    def statuses(self) -> list[str]:
        return [session_status(m) for m in self.final.sessions]


def select(n: k.Network, names, d: Directive) -> NetworkStep:
    candidates = [ns for ns in network_steps(n)
                  if matches(ns.step, d) and (d.session is None or names[ns.index] == d.session)]
    if not candidates:
        raise ScriptError(d, "no enabled step matches")
    if len({ns.index for ns in candidates}) > 1:
        raise ScriptError(d, "matches steps in several sessions; prefix it with @SESSION")
    return candidates[0]


def run_script(n: k.Network, directives, names=None, limit: int | None = None) -> Run:
    names = list(names) if names is not None else [m.name for m in n.sessions]
    run = Run(n, names)
    for d in directives:
        if limit is not None and len(run.steps) >= limit:
            break
        run.steps.append(select(run.final, names, d))
    return run


def run_random(n: k.Network, seed: int, limit: int, names=None) -> Run:
    """Uniformly random scheduler; reproducible for a given seed."""
    rng = random.Random(seed)
    names = list(names) if names is not None else [m.name for m in n.sessions]
    run = Run(n, names)
    while len(run.steps) < limit:
        enabled = network_steps(run.final)
        if not enabled:
            break
        run.steps.append(rng.choice(enabled))
    return run

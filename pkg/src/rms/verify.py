"""Bounded exploration checking subject reduction, session fidelity and progress.

Exploration is breadth-first with parent pointers, so the first violation
found comes with a shortest counterexample. Payload values are produced by
the sender's evaluation, so no value domain has to be enumerated.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field, replace

from . import kernel as k
from .parser import pretty
from .semantics import (SessionStep, format_step, format_trace_entry, global_steps,
                        normalize, session_steps)
from .typecheck import type_session


@dataclass(frozen=True)
class ExploreConfig:
    depth: int = 12
    max_states: int = 100_000
    values: str = "canonical"
    scheduler: str = "exhaustive"  # or "random"
    seed: int = 0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if self.values not in ("canonical", "enumerated"):
            raise ValueError(f"unknown value policy {self.values}")
        if self.scheduler not in ("exhaustive", "random"):
            raise ValueError(f"unknown scheduler {self.scheduler}")


@dataclass
class VerifyReport:
    prop: str
    verdict: str  # holds | violated | inconclusive
    states: int = 0
    transitions: int = 0
    complete: bool = True
    counterexample: list[str] = field(default_factory=list)
    detail: str = ""
    witnesses: dict[str, list[str]] = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_dict(self) -> dict:
        return {"property": self.prop, "verdict": self.verdict, "states": self.states,
                "transitions": self.transitions, "complete": self.complete,
                "detail": self.detail, "counterexample": self.counterexample,
                "witnesses": self.witnesses}

    def render(self) -> str:
        extent = "complete" if self.complete else "bounded"
        lines = [f"{self.prop}: {self.verdict} ({self.states} states, {self.transitions} transitions, {extent})"]
        if self.detail:
            lines.append(f"  {self.detail}")
        lines += ["  " + line for c in self.counterexample for line in c.split("\n")]
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Global pair tracking


def reduct_pair(gp: k.GlobalPair, step: SessionStep) -> k.GlobalPair | None:
    """The global pair reduct matching a session step, or None if no global rule applies."""
    if step.rule == "Chc":
        return gp
    gsteps = global_steps(gp)
    if step.rule == "CkChc":
        hits = [g for g in gsteps if g.rule == "G-CkChc"]
    elif step.rule == "Com":
        g = k.unfold_all(gp.active)
        if not isinstance(g, k.Comm) or (g.sender, g.receiver) != step.participants:
            return None
        hits = [s for s in gsteps if s.rule == "G-Com" and s.branch == step.branch]
    elif step.rule == "RbM":
        hits = [s for s in gsteps if s.rule == "G-Rb" and s.ckpt == step.ckpt]
    else:
        raise ValueError(f"unknown rule {step.rule}")
    return hits[0].target if hits else None


def order_reduct(gp: k.GlobalPair, step: SessionStep) -> k.GlobalPair | None:
    """Global pair tracking for communication order.

    Like :func:`reduct_pair`, except that a checkpointed choice taken while
    the global type is still at an unrelated communication leaves the pair
    alone; the pending checkpoint is crossed when the matching
    communication happens.
    """
    g = k.unfold_all(gp.active)
    if step.rule == "CkChc":
        if isinstance(g, k.Comm) and g.ckpt is not None and g.sender == step.participants[0]:
            return reduct_pair(gp, step)
        return gp
    if step.rule == "Com" and isinstance(g, k.Comm) and g.ckpt is not None:
        gp = k.GlobalPair(gp.history + (g,), k.strip_ckpt(g))
    return reduct_pair(gp, step)


def pair_closure(gp: k.GlobalPair, limit: int = 10_000) -> list[k.GlobalPair]:
    """Pairs reachable from ``gp`` by global reductions, in breadth-first order."""
    seen, order, todo = {gp}, [gp], deque([gp])
    while todo and len(order) < limit:
        for st in global_steps(todo.popleft()):
            if st.target not in seen:
                seen.add(st.target)
                order.append(st.target)
                todo.append(st.target)
    return order


def track_pairs(m: k.Session, gp: k.GlobalPair, steps, reduct=reduct_pair) -> list[k.GlobalPair | None]:
    """Pairs along a sequence of session steps, starting with ``gp``."""
    out = [gp]
    for s in steps:
        gp = reduct(gp, s) if gp is not None else None
        out.append(gp)
    return out


# ---------------------------------------------------------------------------
# Exploration


@dataclass
class _Node:
    session: k.Session
    pair: k.GlobalPair | None
    depth: int
    parent: _Node | None = None
    step: SessionStep | None = None


def _trace(node: _Node, extra: list[str] = ()) -> list[str]:
    steps = []
    while node.parent is not None:
        steps.append(node.step)
        node = node.parent
    steps.reverse()
    return [format_trace_entry(i + 1, s) for i, s in enumerate(steps)] + list(extra)


class _Explorer:
    """Breadth-first walk over (session, pair) states.

    ``visit(node, step, child)`` is called for each transition. It returns
    None to continue, or a ``(detail, trace)`` violation; the violating
    child is not expanded. With ``stop`` the search ends at the first
    violation, which is then a shortest one.
    """

    def __init__(self, m, gp, cfg: ExploreConfig, visit, reduct=reduct_pair, stop=True):
        self.cfg, self.visit, self.reduct, self.stop = cfg, visit, reduct, stop
        self.root = _Node(m, gp, 0)
        self.states = 1
        self.transitions = 0
        self.complete = True
        self.violations: list[tuple[str, list[str]]] = []

    def _child(self, node, s):
        pair = node.pair
        if self.reduct is not None and pair is not None:
            pair = self.reduct(pair, s)
        return _Node(s.target, pair, node.depth + 1, node, s)

    def _check(self, node, s, child) -> bool:
        found = self.visit(node, s, child)
        if found:
            self.violations.append(found)
        return bool(found)

    def run(self):
        if self.cfg.scheduler == "random":
            self._walk()
            return self
        seen = {self._key(self.root)}
        frontier = deque([self.root])
        while frontier:
            node = frontier.popleft()
            steps = session_steps(node.session)
            if node.depth >= self.cfg.depth:
                if steps:
                    self.complete = False
                continue
            for s in steps:
                self.transitions += 1
                child = self._child(node, s)
                if self._check(node, s, child):
                    if self.stop:
                        return self
                    continue
                key = self._key(child)
                if key in seen:
                    continue
                if self.states >= self.cfg.max_states:
                    self.complete = False
                    continue
                seen.add(key)
                self.states += 1
                frontier.append(child)
        return self

    def _walk(self):
        rng = random.Random(self.cfg.seed)
        node = self.root
        self.complete = False
        for _ in range(self.cfg.depth):
            steps = session_steps(node.session)
            if not steps:
                break
            s = rng.choice(steps)
            self.transitions += 1
            child = self._child(node, s)
            if self._check(node, s, child):
                return
            node = child
            self.states += 1

    @staticmethod
    def _key(node):
        return normalize(node.session), node.pair

    def report(self, prop) -> VerifyReport:
        r = VerifyReport(prop, "holds", self.states, self.transitions, self.complete)
        if self.violations:
            detail, trace = self.violations[0]
            r.verdict, r.detail, r.counterexample = "violated", detail, trace
            if len(self.violations) > 1:
                r.detail += f" (and {len(self.violations) - 1} more violating transitions)"
        return r


def check_subject_reduction(m: k.Session, gp: k.GlobalPair, cfg: ExploreConfig = ExploreConfig()) -> VerifyReport:
    """Every explored reduct re-types against the global reduct derived from the step's rule.

    All violating transitions are counted; the reported counterexample is a
    shortest one.
    """

    closure = pair_closure(gp)

    def visit(node, s, child):
        if child.pair is not None:
            report = type_session(child.session, child.pair)
            if report.accepted:
                return None
            why = "; ".join(str(c) for c in report.failures())
            detail = f"reduct is not typed by {pretty(child.pair)}: {why}"
        else:
            detail = f"no global reduction of {pretty(node.pair)} matches [{s.rule}]"
        if not any(type_session(child.session, q).accepted for q in closure):
            detail += f"; no pair reachable from the initial pair types the reduct ({len(closure)} tried)"
        return detail, _trace(child)

    return _Explorer(m, gp, cfg, visit, stop=False).run().report("subject-reduction")


def check_fidelity(m: k.Session, gp: k.GlobalPair, cfg: ExploreConfig = ExploreConfig()) -> VerifyReport:
    """Every communication carries a value of the receiver's sort and follows the tracked global type."""

    def visit(node, s, child):
        if s.rule != "Com":
            return None
        got = None if s.value is None else k.sort_of_value(s.value)
        if got != s.sort:
            return (f"value {s.value!r} of sort {got} received at sort {s.sort}", _trace(child))
        g = k.unfold_all(node.pair.active) if node.pair is not None else None
        p, q = s.participants
        if not (isinstance(g, k.Comm) and (g.sender, g.receiver) == (p, q)
                and s.branch in {b.label for b in g.branches}):
            expected = pretty(g) if g is not None else "<untracked>"
            return (f"communication {p} -> {q} {s.branch} does not match {expected}", _trace(child))
        return None

    return _Explorer(m, gp, cfg, visit, reduct=order_reduct).run().report("fidelity")


# ---------------------------------------------------------------------------
# Progress


def tag_occurrences(m: k.Session, prefix: str = "") -> k.Session:
    """Give every choice node of the session a stable occurrence identifier."""
    entries = []
    for p, c in m.items():
        hist = tuple(_tag(h, f"{prefix}{p}/history[{i}]") for i, h in enumerate(c.history))
        entries.append((p, k.Configuration(hist, _tag(c.active, f"{prefix}{p}/active"))))
    return k.Session(tuple(entries), m.name)


def _tag(node, path):
    if isinstance(node, k.Rec):
        return replace(node, body=_tag(node.body, path + "/body"))
    if isinstance(node, (k.ExtChoice, k.IntChoice)):
        branches = tuple(replace(b, cont=_tag(b.cont, f"{path}/{b.label}")) for b in node.branches)
        return replace(node, branches=branches, tag=path)
    return node


def occurrences(m: k.Session) -> list[str]:
    out = []

    def walk(node):
        if isinstance(node, (k.ExtChoice, k.IntChoice)) and node.tag is not None:
            out.append(node.tag)
        for _, c in k.children(node):
            walk(c)

    for _, c in m.items():
        for h in c.history:
            walk(h)
        walk(c.active)
    return out


def check_progress(n: k.Network, gps, cfg: ExploreConfig = ExploreConfig()) -> VerifyReport:
    """Every prefix occurrence is consumed on some path and every checkpoint name is rolled back to.

    Sessions of a network reduce independently and are explored one at a
    time. A missing witness is a violation only if exploration was complete.
    """
    gps = list(gps)
    total = VerifyReport("progress", "holds", 0, 0, True)
    missing_occ: list[str] = []
    missing_roll: list[str] = []
    consumed_w: list[str] = []
    roll_w: list[str] = []
    for i, m in enumerate(n.sessions):
        prefix = f"{m.name or i}:" if len(n.sessions) > 1 else ""
        tagged = tag_occurrences(m, prefix)
        wanted = set(occurrences(tagged))
        names = set()
        for _, c in m.items():
            for h in c.history:
                names |= k.checkpoint_names(h)
            names |= k.checkpoint_names(c.active)
        consumed: dict[str, str] = {}
        rolled: dict[str, str] = {}

        def visit(node, s, child):
            if s.rule == "Com":
                for tag in s.sources:
                    if tag in wanted and tag not in consumed:
                        consumed[tag] = format_step(child.depth, s)
            if s.rule == "RbM" and s.ckpt not in rolled:
                rolled[s.ckpt] = " ; ".join(format_step(j + 1, st) for j, st in enumerate(_steps(child)))
            return None

        ex = _Explorer(tagged, gps[i] if i < len(gps) else None, cfg, visit, reduct=None)
        ex.run()
        total.states += ex.states
        total.transitions += ex.transitions
        total.complete = total.complete and ex.complete
        missing_occ += sorted(wanted - consumed.keys())
        missing_roll += [f"{prefix}{a}" for a in sorted(names - rolled.keys())]
        consumed_w += [f"{t}: {w}" for t, w in sorted(consumed.items())]
        roll_w += [f"{prefix}{a}: {w}" for a, w in sorted(rolled.items())]

    total.witnesses = {"consumed": consumed_w, "rollback": roll_w}
    problems = []
    if missing_occ:
        problems.append("prefixes never consumed: " + ", ".join(missing_occ))
    if missing_roll:
        problems.append("checkpoints never rolled back to: " + ", ".join(missing_roll))
    if problems:
        total.verdict = "violated" if total.complete else "inconclusive"
        total.detail = "; ".join(problems)
    return total


def progress_items(report: VerifyReport) -> tuple[bool, bool]:
    """Whether the consumption and the rollback items of a progress report hold."""
    d = report.detail
    return "never consumed" not in d, "never rolled back" not in d


def _steps(node: _Node) -> list[SessionStep]:
    out = []
    while node.parent is not None:
        out.append(node.step)
        node = node.parent
    return out[::-1]

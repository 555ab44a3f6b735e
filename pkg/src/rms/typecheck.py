"""Type synthesis for processes and type checking of sessions against global pairs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from . import kernel as k
from .parser import pretty
from .projection import Undefined, participants, project, well_formed
from .subtyping import is_subtype


class TypingError(k.CalculusError):
    def __init__(self, rule: str, message: str, path: tuple[str, ...] = ()):
        self.rule, self.path = rule, path
        where = "/".join(path) or "<root>"
        super().__init__(f"[{rule}] at {where}: {message}")


@dataclass(frozen=True, eq=False)
class Env:
    """Sorts of expression variables and types of process variables."""

    sorts: Mapping[str, k.Sort] = field(default_factory=dict)
    procs: Mapping[str, object] = field(default_factory=dict)

    def with_sort(self, x: str, s: k.Sort) -> Env:
        return Env({**self.sorts, x: s}, self.procs)

    def with_proc(self, var: str, t) -> Env:
        return Env(self.sorts, {**self.procs, var: t})


EMPTY_ENV = Env()


def type_process(env: Env | None, p: k.Process):
    """Synthesise the session type of ``p``.

    Inputs give intersections, outputs unions, checkpoints carry over, ``end``
    gives end and ``mu X. P`` gives ``mu X. T`` with X typed by a type
    variable of the same name. The result is checked against the grammar of
    session types.
    """
    t = _synth(env or EMPTY_ENV, p, ())
    violations = k.validate(t)
    if violations:
        raise TypingError("grammar", "; ".join(str(v) for v in violations))
    return t


def _synth(env: Env, p, path):
    if isinstance(p, k.Inact):
        return k.End()
    if isinstance(p, k.ProcVar):
        if p.name not in env.procs:
            raise TypingError("t-Var", f"unbound process variable {p.name}", path)
        return env.procs[p.name]
    if isinstance(p, k.Rec):
        body = _synth(env.with_proc(p.var, k.TVar(p.var)), p.body, path + ("body",))
        return k.Mu(p.var, body)
    if isinstance(p, k.ExtChoice):
        branches = []
        for b in p.branches:
            inner = env.with_sort(b.var, b.sort) if b.var is not None else env
            branches.append(k.Branch(b.label, b.sort, _synth(inner, b.cont, path + (b.label,))))
        return k.Inter(p.peer, tuple(branches), p.ckpt)
    if isinstance(p, k.IntChoice):
        branches = []
        for b in p.branches:
            s = None
            if b.expr is not None:
                try:
                    s = k.expr_sort(b.expr, env.sorts)
                except k.SortError as exc:
                    raise TypingError("t-Out", str(exc), path + (b.label,)) from None
            branches.append(k.Branch(b.label, s, _synth(env, b.cont, path + (b.label,))))
        return k.Union(p.peer, tuple(branches), p.ckpt)
    raise TypeError(f"not a process: {p!r}")


def type_ckseq(history) -> tuple:
    return tuple(type_process(None, p) for p in history)


def type_configuration(c: k.Configuration) -> k.ConfigType:
    return k.ConfigType(type_ckseq(c.history), type_process(None, c.active))


# ---------------------------------------------------------------------------
# Agreement


@dataclass
class Condition:
    participant: str | None
    condition: str
    holds: bool
    locus: str = ""
    detail: str = ""

    def to_dict(self) -> dict:
        return {"participant": self.participant, "condition": self.condition,
                "holds": self.holds, "locus": self.locus, "detail": self.detail}

    def __str__(self):
        who = f"{self.participant}: " if self.participant else ""
        mark = "ok" if self.holds else "FAILED"
        text = f"{who}condition {self.condition} {mark}"
        if self.locus:
            text += f" at {self.locus}"
        if self.detail:
            text += f" ({self.detail})"
        return text


@dataclass
class Agreement:
    ok: bool
    conditions: list[Condition]

    def __bool__(self):
        return self.ok


def _is_end(t) -> bool:
    return not isinstance(t, Undefined) and isinstance(k.unfold_all(t), k.End)


def _leq(t, proj) -> tuple[bool, str]:
    if isinstance(proj, Undefined):
        return False, f"projection {proj}"
    if is_subtype(t, proj):
        return True, ""
    return False, f"{pretty(t)} is not a subtype of {pretty(proj)}"


def agrees(ct: k.ConfigType, p: str, gp: k.GlobalPair) -> Agreement:
    """Check the four agreement conditions between ``ct`` and ``gp`` for participant ``p``."""
    rho, t = ct.history, ct.active
    ups, g = gp.history, gp.active
    n, m = len(rho), len(ups)
    proj_g = project(g, p)
    conds: list[Condition] = []

    # 1: the history types match the global history elementwise
    ok1, detail, locus = True, "", ""
    for i, ti in enumerate(rho):
        locus = f"history[{i}]"
        if i >= m:
            ok1, detail = False, f"no global history element for position {i} (|history| = {m})"
            break
        ok1, detail = _leq(ti, project(ups[i], p))
        if not ok1:
            break
    conds.append(Condition(p, "1", ok1, locus if not ok1 else "", detail))

    head = k.unfold_all(t)
    if isinstance(head, k.End):
        ok, detail = True, ""
        if n > m:
            ok, detail = False, f"history longer than global history ({n} > {m})"
        elif not _is_end(proj_g):
            ok, detail = False, f"active global type projects to {_show(proj_g)}, not end"
        else:
            for i in range(n, m):
                proj_i = project(ups[i], p)
                if not _is_end(proj_i):
                    ok, detail = False, f"global history[{i}] projects to {_show(proj_i)}, not end"
                    break
        conds.append(Condition(p, "2", ok, "active" if not ok else "", detail))
    elif isinstance(head, k.Union):
        ok, detail = _leq(t, proj_g)
        if n != m:
            ok, detail = False, f"output active with |history| = {n} but |global history| = {m}"
        conds.append(Condition(p, "3", ok, "active" if not ok else "", detail))
    elif isinstance(head, k.Inter):
        ok, detail = False, ""
        if n == m:
            ok, detail = _leq(t, proj_g)
        elif n == m - 1:
            if head.ckpt is None:
                detail = "input one checkpoint behind must be checkpointed"
            else:
                ok, detail = _leq(t, project(ups[m - 1], p))
                if ok:
                    ok, detail = _leq(k.strip_ckpt(head), proj_g)
        else:
            detail = f"|history| = {n} but |global history| = {m}"
        conds.append(Condition(p, "4", ok, "active" if not ok else "", detail))
    else:
        conds.append(Condition(p, "shape", False, "active", f"open type {pretty(t)}"))
    return Agreement(all(c.holds for c in conds), conds)


def _show(t) -> str:
    return str(t) if isinstance(t, Undefined) else pretty(t)


# ---------------------------------------------------------------------------
# Sessions and networks


@dataclass
class TypingReport:
    outcome: str
    session: str | None = None
    pair: k.GlobalPair | None = None
    types: dict[str, k.ConfigType] = field(default_factory=dict)
    conditions: list[Condition] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.outcome == "accepted"

    def failures(self) -> list[Condition]:
        return [c for c in self.conditions if not c.holds]

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "session": self.session,
            "pair": pretty(self.pair) if self.pair is not None else None,
            "participants": [{"participant": p, "type": pretty(ct)} for p, ct in self.types.items()],
            "conditions": [c.to_dict() for c in self.conditions],
        }

    def render(self) -> str:
        name = self.session or "session"
        lines = [f"{name} : {pretty(self.pair) if self.pair else '?'} -- {self.outcome}"]
        for p, ct in self.types.items():
            lines.append(f"  {p} : {pretty(ct)}")
        for c in self.failures():
            lines.append(f"  {c}")
        return "\n".join(lines)


def type_session(m: k.Session, gp: k.GlobalPair) -> TypingReport:
    """Check ``m`` against the global pair ``gp``; every failed premise is listed in the report."""
    report = TypingReport("accepted", m.name, gp)
    conds = report.conditions
    for i, g in enumerate(gp.history + (gp.active,)):
        wf = well_formed(g)
        if not wf:
            locus = f"global history[{i}]" if i < len(gp.history) else "global active"
            conds.append(Condition(None, "well-formed", False, locus, "; ".join(wf.diagnostics())))
    if any(not c.holds for c in conds):
        report.outcome = "rejected"
        return report

    for p, c in m.items():
        try:
            ct = type_configuration(c)
        except TypingError as exc:
            conds.append(Condition(p, "typing", False, "configuration", str(exc)))
            continue
        report.types[p] = ct
        conds.extend(agrees(ct, p, gp).conditions)

    longest = max((len(ct.history) for ct in report.types.values()), default=0)
    conds.append(Condition(
        None, "length", longest == len(gp.history), "",
        "" if longest == len(gp.history)
        else f"|global history| = {len(gp.history)} but longest history has {longest}"))
    missing = (participants(gp.history) | participants(gp.active)) - set(m.participants())
    conds.append(Condition(None, "participants", not missing, "",
                           f"missing {sorted(missing)}" if missing else ""))
    if any(not c.holds for c in conds):
        report.outcome = "rejected"
    return report


@dataclass
class NetworkReport:
    outcome: str
    sessions: list[TypingReport] = field(default_factory=list)
    conditions: list[Condition] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.outcome == "accepted"

    def to_dict(self) -> dict:
        return {"outcome": self.outcome,
                "sessions": [s.to_dict() for s in self.sessions],
                "conditions": [c.to_dict() for c in self.conditions]}

    def render(self) -> str:
        lines = [f"network: {self.outcome}"]
        lines += [f"  {c}" for c in self.conditions if not c.holds]
        lines += [s.render() for s in self.sessions]
        return "\n".join(lines)


def type_network(n: k.Network, gps) -> NetworkReport:
    gps = list(gps)
    report = NetworkReport("accepted")
    if len(gps) != len(n.sessions):
        report.conditions.append(Condition(
            None, "pairs", False, "",
            f"{len(n.sessions)} sessions but {len(gps)} global pairs"))
        report.outcome = "rejected"
        return report
    for s, gp in zip(n.sessions, gps):
        r = type_session(s, gp)
        report.sessions.append(r)
        if not r.accepted:
            report.outcome = "rejected"
    return report

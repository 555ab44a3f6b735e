"""Participants, the partial merge operator, projection and well-formedness."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

from . import kernel as k


@dataclass(frozen=True)
class Undefined:
    """Failed projection or merge. ``path`` locates the offending global-type node."""

    reason: str
    path: tuple[str, ...] = ()

    def __bool__(self):
        return False

    def at(self, step: str) -> Undefined:
        return Undefined(self.reason, (step,) + self.path)

    def __str__(self):
        where = "/".join(self.path) or "<root>"
        return f"undefined at {where}: {self.reason}"


def participants(g) -> frozenset[str]:
    """Participants of a global type, or of a sequence of them."""
    if isinstance(g, (tuple, list)):
        out = frozenset()
        for item in g:
            out |= participants(item)
        return out
    if isinstance(g, k.Comm):
        out = frozenset([g.sender, g.receiver])
        for b in g.branches:
            out |= participants(b.cont)
        return out
    if isinstance(g, k.Mu):
        return participants(g.body)
    return frozenset()


def merge(ts) -> object:
    """Merge the projections of a third party's branches.

    Defined when all types are intersections from one sender with pairwise
    disjoint labels, or all are checkpointed by the same name (then the
    unwrapped types are merged and re-wrapped). A single type is returned
    as is. Returns :class:`Undefined` otherwise.
    """
    ts = list(ts)
    if not ts:
        raise ValueError("merge of an empty list")
    for t in ts:
        if isinstance(t, Undefined):
            return t
    if len(ts) == 1:
        return ts[0]
    if all(isinstance(t, k.Inter) and t.ckpt is None for t in ts):
        peers = {t.peer for t in ts}
        if len(peers) != 1:
            return Undefined(f"merge of inputs from different senders {sorted(peers)}")
        seen: set[str] = set()
        for t in ts:
            labels = {b.label for b in t.branches}
            clash = labels & seen
            if clash:
                return Undefined(f"merge clash on label {sorted(clash)[0]}")
            seen |= labels
        return k.Inter(ts[0].peer, tuple(b for t in ts for b in t.branches))
    names = {k.ckpt_name(t) for t in ts}
    if all(k.is_checkpointed(t) for t in ts) and len(names) == 1:
        inner = merge([k.strip_ckpt(t) for t in ts])
        if isinstance(inner, Undefined):
            return inner
        return replace(inner, ckpt=names.pop())
    kinds = sorted({type(t).__name__ + (f"^{t.ckpt}" if k.is_checkpointed(t) else "") for t in ts})
    return Undefined(f"merge of incompatible types {kinds}")


@lru_cache(maxsize=8192)
def project(g, r: str):
    """Projection of the single-threaded global type ``g`` onto ``r``; may return Undefined."""
    if isinstance(g, k.End):
        return k.End()
    if isinstance(g, k.TVar):
        return g
    if isinstance(g, k.Mu):
        if r not in participants(g.body):
            return k.End()
        body = project(g.body, r)
        if isinstance(body, Undefined):
            return body.at("body")
        t = k.Mu(g.var, body)
        if k.validate(t):
            return Undefined(f"projection of recursion on {g.var} is not a guarded type")
        return t
    if not isinstance(g, k.Comm):
        raise TypeError(f"not a global type: {g!r}")
    conts = []
    for b in g.branches:
        c = project(b.cont, r)
        if isinstance(c, Undefined):
            return c.at(b.label)
        conts.append(c)
    if r == g.sender:
        return k.Union(g.receiver, tuple(k.Branch(b.label, b.sort, c) for b, c in zip(g.branches, conts)), g.ckpt)
    if r == g.receiver:
        return k.Inter(g.sender, tuple(k.Branch(b.label, b.sort, c) for b, c in zip(g.branches, conts)), g.ckpt)
    if all(isinstance(c, k.End) for c in conts):
        return k.End()
    m = merge(conts)
    if isinstance(m, Undefined) or g.ckpt is None:
        return m
    if k.is_checkpointed(m):
        return Undefined(f"third-party merge under checkpoint {g.ckpt} is already checkpointed by {m.ckpt}")
    return replace(m, ckpt=g.ckpt)


@dataclass
class WellFormedness:
    ok: bool
    projections: dict[str, object] = field(default_factory=dict)
    failures: dict[str, object] = field(default_factory=dict)

    def __bool__(self):
        return self.ok

    def diagnostics(self) -> list[str]:
        return [f"{p}: {v}" for p, v in sorted(self.failures.items())]


def well_formed(g) -> WellFormedness:
    """True iff ``g`` is valid and projectable onto each of its participants."""
    report = WellFormedness(True)
    for v in k.validate(g):
        report.ok = False
        report.failures.setdefault("<syntax>", v)
    if not report.ok:
        return report
    for r in sorted(participants(g)):
        t = project(g, r)
        if isinstance(t, Undefined):
            report.ok = False
            report.failures[r] = t
        else:
            report.projections[r] = t
    return report

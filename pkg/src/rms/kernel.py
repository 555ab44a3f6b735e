"""Syntax of the reversible multiparty session calculus.

Every term is an immutable tree of frozen dataclasses, so terms can be hashed,
shared between threads and used as dictionary keys. Constructors only check
the shape of their fields; the grammar side conditions (non-empty choices,
distinct labels, non-singleton checkpoints, no self-named nesting, guarded
recursion) are reported as data by :func:`validate`.

Checkpointed choices are ordinary choices whose ``ckpt`` field holds the
checkpoint name, e.g. ``IntChoice("Tr", ..., ckpt="A")``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping


class CalculusError(Exception):
    """Base class for errors raised by the calculus."""


class SortError(CalculusError):
    pass


class EvalError(CalculusError):
    pass


class ValidationError(CalculusError):
    def __init__(self, violations: list[Violation], context: str = ""):
        self.violations = list(violations)
        head = f"{context}: " if context else ""
        super().__init__(head + "; ".join(str(v) for v in self.violations))


# ---------------------------------------------------------------------------
# Sorts, values and expressions


class Sort(enum.Enum):
    INT = "Int"
    BOOL = "Bool"
    STR = "Str"

    def __str__(self) -> str:
        return self.value


Value = int | bool | str


def sort_of_value(v: Value) -> Sort:
    # bool is a subclass of int, test it first
    if isinstance(v, bool):
        return Sort.BOOL
    if isinstance(v, int):
        return Sort.INT
    if isinstance(v, str):
        return Sort.STR
    raise SortError(f"not a value of any sort: {v!r}")


CANONICAL_VALUES: dict[Sort, Value] = {Sort.INT: 0, Sort.BOOL: True, Sort.STR: "s"}


@dataclass(frozen=True)
class Lit:
    value: Value
    # kept as a field so that Lit(1) != Lit(True)
    sort: Sort = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sort", sort_of_value(self.value))


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class UnOp:
    op: str
    arg: Expr


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


Expr = Lit | Var | UnOp | BinOp

UNARY_OPS = {"!": (Sort.BOOL, Sort.BOOL), "-": (Sort.INT, Sort.INT)}
BINARY_OPS = {
    "+": (Sort.INT, Sort.INT),
    "-": (Sort.INT, Sort.INT),
    "&&": (Sort.BOOL, Sort.BOOL),
    "<": (Sort.INT, Sort.BOOL),
    "<=": (Sort.INT, Sort.BOOL),
    "==": (None, Sort.BOOL),  # operands of any one sort
}


def expr_sort(e: Expr, env: Mapping[str, Sort]) -> Sort:
    """Sort of ``e`` under the variable sorts in ``env``."""
    if isinstance(e, Lit):
        return e.sort
    if isinstance(e, Var):
        if e.name not in env:
            raise SortError(f"unbound variable {e.name}")
        return env[e.name]
    if isinstance(e, UnOp):
        arg_sort, res = UNARY_OPS[e.op]
        got = expr_sort(e.arg, env)
        if got is not arg_sort:
            raise SortError(f"operator {e.op} expects {arg_sort}, got {got}")
        return res
    if isinstance(e, BinOp):
        arg_sort, res = BINARY_OPS[e.op]
        left, right = expr_sort(e.left, env), expr_sort(e.right, env)
        if arg_sort is None:
            if left is not right:
                raise SortError(f"operator {e.op} compares {left} with {right}")
        elif left is not arg_sort or right is not arg_sort:
            raise SortError(f"operator {e.op} expects {arg_sort} operands, got {left} and {right}")
        return res
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expr, env: Mapping[str, Value] | None = None) -> Value:
    """Evaluate ``e``; raises :class:`EvalError` on unbound variables or ill-sorted operands."""
    env = env or {}
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        if e.name not in env:
            raise EvalError(f"unbound variable {e.name}")
        return env[e.name]
    if isinstance(e, UnOp):
        v = evaluate(e.arg, env)
        want = UNARY_OPS[e.op][0]
        if sort_of_value(v) is not want:
            raise EvalError(f"operator {e.op} applied to {v!r}")
        return (not v) if e.op == "!" else -v
    if isinstance(e, BinOp):
        a, b = evaluate(e.left, env), evaluate(e.right, env)
        want = BINARY_OPS[e.op][0]
        sa, sb = sort_of_value(a), sort_of_value(b)
        if (want is None and sa is not sb) or (want is not None and (sa is not want or sb is not want)):
            raise EvalError(f"operator {e.op} applied to {a!r} and {b!r}")
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "&&":
            return a and b
        if e.op == "<":
            return a < b
        if e.op == "<=":
            return a <= b
        return a == b
    raise TypeError(f"not an expression: {e!r}")


def expr_free_vars(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset([e.name])
    if isinstance(e, UnOp):
        return expr_free_vars(e.arg)
    if isinstance(e, BinOp):
        return expr_free_vars(e.left) | expr_free_vars(e.right)
    return frozenset()


def subst_expr(e: Expr, var: str, value: Value) -> Expr:
    if isinstance(e, Var):
        return Lit(value) if e.name == var else e
    if isinstance(e, UnOp):
        return UnOp(e.op, subst_expr(e.arg, var, value))
    if isinstance(e, BinOp):
        return BinOp(e.op, subst_expr(e.left, var, value), subst_expr(e.right, var, value))
    return e


# ---------------------------------------------------------------------------
# Processes


@dataclass(frozen=True)
class InBranch:
    """``label(var:sort).cont``; ``var`` and ``sort`` are both None for label-only input."""

    label: str
    var: str | None
    sort: Sort | None
    cont: Process

    def __post_init__(self):
        if (self.var is None) != (self.sort is None):
            raise ValueError(f"input branch {self.label}: binder and sort must be given together")


@dataclass(frozen=True)
class OutBranch:
    label: str
    expr: Expr | None
    cont: Process


def _tuple_field(obj, name):
    value = getattr(obj, name)
    if not isinstance(value, tuple):
        object.__setattr__(obj, name, tuple(value))


@dataclass(frozen=True)
class ExtChoice:
    peer: str
    branches: tuple[InBranch, ...]
    ckpt: str | None = None
    # occurrence identity, used by progress checking; ignored by equality
    tag: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _tuple_field(self, "branches")


@dataclass(frozen=True)
class IntChoice:
    peer: str
    branches: tuple[OutBranch, ...]
    ckpt: str | None = None
    tag: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        _tuple_field(self, "branches")


@dataclass(frozen=True)
class Rec:
    var: str
    body: Process


@dataclass(frozen=True)
class ProcVar:
    name: str


@dataclass(frozen=True)
class Inact:
    pass


Process = ExtChoice | IntChoice | Rec | ProcVar | Inact
Choice = ExtChoice | IntChoice


def send(peer: str, label: str, expr: Expr | None = None, cont: Process = Inact()) -> IntChoice:
    """The committed output ``peer!label(expr).cont``."""
    return IntChoice(peer, (OutBranch(label, expr, cont),))


def recv(peer: str, label: str, var: str | None = None, sort: Sort | None = None,
         cont: Process = Inact()) -> ExtChoice:
    return ExtChoice(peer, (InBranch(label, var, sort, cont),))


# ---------------------------------------------------------------------------
# Session types and global types


@dataclass(frozen=True)
class Branch:
    """A branch ``label(sort).cont`` of a session type or global type."""

    label: str
    sort: Sort | None
    cont: object


@dataclass(frozen=True)
class Inter:
    """Intersection of inputs from ``peer`` (external choice)."""

    peer: str
    branches: tuple[Branch, ...]
    ckpt: str | None = None

    def __post_init__(self):
        _tuple_field(self, "branches")


@dataclass(frozen=True)
class Union:
    """Union of outputs to ``peer`` (internal choice)."""

    peer: str
    branches: tuple[Branch, ...]
    ckpt: str | None = None

    def __post_init__(self):
        _tuple_field(self, "branches")


@dataclass(frozen=True)
class Comm:
    sender: str
    receiver: str
    branches: tuple[Branch, ...]
    ckpt: str | None = None

    def __post_init__(self):
        _tuple_field(self, "branches")


@dataclass(frozen=True)
class Mu:
    var: str
    body: object


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class End:
    pass


SessionType = Inter | Union | Mu | TVar | End
GlobalType = Comm | Mu | TVar | End

CHOICES = (ExtChoice, IntChoice, Inter, Union, Comm)


def is_checkpointed(node) -> bool:
    return isinstance(node, CHOICES) and node.ckpt is not None


def ckpt_name(node) -> str | None:
    return node.ckpt if isinstance(node, CHOICES) else None


def strip_ckpt(node):
    """The choice without its checkpoint decoration."""
    if is_checkpointed(node):
        return replace(node, ckpt=None)
    return node


# ---------------------------------------------------------------------------
# Configurations, sessions, networks and global pairs


def _check_history(seq, what):
    for i, item in enumerate(seq):
        if not is_checkpointed(item):
            raise ValueError(f"{what} element {i} is not checkpointed")


@dataclass(frozen=True)
class Configuration:
    history: tuple[Process, ...]
    active: Process

    def __post_init__(self):
        _tuple_field(self, "history")
        _check_history(self.history, "checkpointed sequence")

    def is_idle(self) -> bool:
        """True for the neutral configuration ``<[] ; end>``."""
        return not self.history and isinstance(self.active, Inact)


@dataclass(frozen=True, eq=False)
class Session:
    """Finite map from participants to configurations.

    Entries keep their insertion order for display; equality and hashing
    ignore the order.
    """

    entries: tuple[tuple[str, Configuration], ...]
    name: str | None = None

    def __post_init__(self):
        entries = tuple((p, c) for p, c in self.entries)
        seen = set()
        for p, c in entries:
            if p in seen:
                raise ValueError(f"duplicate participant {p}")
            if not isinstance(c, Configuration):
                raise TypeError(f"participant {p} is not bound to a configuration")
            seen.add(p)
        object.__setattr__(self, "entries", entries)

    @classmethod
    def of(cls, mapping: Mapping[str, Configuration | Process], name: str | None = None) -> Session:
        entries = []
        for p, c in mapping.items():
            if not isinstance(c, Configuration):
                c = Configuration((), c)
            entries.append((p, c))
        return cls(tuple(entries), name)

    def __getitem__(self, participant: str) -> Configuration:
        for p, c in self.entries:
            if p == participant:
                return c
        raise KeyError(participant)

    def __contains__(self, participant: str) -> bool:
        return any(p == participant for p, _ in self.entries)

    def __iter__(self) -> Iterator[str]:
        return (p for p, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def participants(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self.entries)

    def items(self):
        return self.entries

    def update(self, changes: Mapping[str, Configuration]) -> Session:
        entries = tuple((p, changes.get(p, c)) for p, c in self.entries)
        return Session(entries, self.name)

    def __eq__(self, other):
        if not isinstance(other, Session):
            return NotImplemented
        return dict(self.entries) == dict(other.entries)

    def __hash__(self):
        return hash(frozenset(self.entries))


@dataclass(frozen=True)
class Network:
    sessions: tuple[Session, ...]

    def __post_init__(self):
        _tuple_field(self, "sessions")


@dataclass(frozen=True)
class GlobalPair:
    """``<history ; active>`` where history lists the crossed checkpointed global types."""

    history: tuple
    active: object

    def __post_init__(self):
        _tuple_field(self, "history")
        _check_history(self.history, "global history")
        names = [g.ckpt for g in self.history]
        if len(set(names)) != len(names):
            raise ValueError(f"checkpoint names in a global history must be distinct: {names}")


@dataclass(frozen=True)
class ConfigType:
    history: tuple
    active: object

    def __post_init__(self):
        _tuple_field(self, "history")
        _check_history(self.history, "type sequence")


# ---------------------------------------------------------------------------
# Generic traversal


def children(node) -> Iterator[tuple[str, object]]:
    """Immediate subterms of a process or type, with a path step naming each."""
    if isinstance(node, CHOICES):
        for b in node.branches:
            yield b.label, b.cont
    elif isinstance(node, (Rec, Mu)):
        yield "body", node.body


def binder(node) -> str | None:
    if isinstance(node, (Rec, Mu)):
        return node.var
    return None


def variable(node) -> str | None:
    if isinstance(node, (ProcVar, TVar)):
        return node.name
    return None


def size(node) -> int:
    """Number of constructor nodes in a process or type."""
    return 1 + sum(size(c) for _, c in children(node))


def checkpoint_names(node) -> frozenset[str]:
    names = {node.ckpt} if is_checkpointed(node) else set()
    for _, c in children(node):
        names |= checkpoint_names(c)
    return frozenset(names)


def free_vars(node, bound: frozenset[str] = frozenset()) -> frozenset[str]:
    """Free recursion variables (process or type variables)."""
    v = variable(node)
    if v is not None:
        return frozenset() if v in bound else frozenset([v])
    b = binder(node)
    if b is not None:
        bound = bound | {b}
    out = frozenset()
    for _, c in children(node):
        out |= free_vars(c, bound)
    return out


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    constraint: str
    path: tuple[str, ...]
    message: str

    def __str__(self):
        where = "/".join(self.path) or "<root>"
        return f"[{self.constraint}] at {where}: {self.message}"


def validate(node) -> list[Violation]:
    """Grammar side conditions violated anywhere in ``node``.

    Constraints: ``empty-choice``, ``singleton-checkpoint`` (checkpointed
    choices need two branches), ``duplicate-label``, ``self-named-nesting``,
    ``unguarded-recursion`` and, for global types, ``self-communication``.
    A checkpoint named A may not reach another A-checkpoint in its regular
    tree, which also rules out recursion looping back through it.
    """
    out: list[Violation] = []
    _validate(node, (), frozenset(), frozenset(), (), out)
    return out


def _validate(node, path, bound, unguarded, open_ckpts, out):
    # open_ckpts: (name, variables bound outside that checkpoint) pairs of enclosing checkpoints
    v = variable(node)
    if v is not None:
        if v in unguarded:
            out.append(Violation("unguarded-recursion", path, f"variable {v} is not under a choice"))
        for name, outer in open_ckpts:
            if v in outer:
                out.append(Violation("self-named-nesting", path,
                                     f"recursion on {v} re-enters the checkpoint {name}"))
        return
    b = binder(node)
    if b is not None:
        _validate(node.body, path + ("body",), bound | {b}, unguarded | {b}, open_ckpts, out)
        return
    if not isinstance(node, CHOICES):
        return
    if not node.branches:
        out.append(Violation("empty-choice", path, "a choice needs at least one branch"))
    if node.ckpt is not None and len(node.branches) < 2:
        out.append(Violation("singleton-checkpoint", path,
                             f"checkpoint {node.ckpt} guards a choice with fewer than two branches"))
    labels = [br.label for br in node.branches]
    for lab in sorted({x for x in labels if labels.count(x) > 1}):
        out.append(Violation("duplicate-label", path, f"label {lab} occurs more than once"))
    if isinstance(node, Comm) and node.sender == node.receiver:
        out.append(Violation("self-communication", path, f"{node.sender} communicates with itself"))
    if node.ckpt is not None:
        for name, _ in open_ckpts:
            if name == node.ckpt:
                out.append(Violation("self-named-nesting", path,
                                     f"checkpoint {name} occurs inside a term checkpointed by {name}"))
        open_ckpts = open_ckpts + ((node.ckpt, bound),)
    for step, child in children(node):
        _validate(child, path + (step,), bound, frozenset(), open_ckpts, out)


def check(node, context: str = ""):
    """Raise :class:`ValidationError` unless ``node`` is valid; returns ``node``."""
    violations = validate(node)
    if violations:
        raise ValidationError(violations, context)
    return node


# ---------------------------------------------------------------------------
# Substitution and unfolding


def subst_var(node, var: str, repl):
    """Replace free occurrences of the recursion variable ``var`` by ``repl``."""
    v = variable(node)
    if v is not None:
        return repl if v == var else node
    if isinstance(node, (Rec, Mu)):
        if node.var == var:
            return node
        return replace(node, body=subst_var(node.body, var, repl))
    if isinstance(node, CHOICES):
        branches = tuple(replace(b, cont=subst_var(b.cont, var, repl)) for b in node.branches)
        return replace(node, branches=branches)
    return node


def unfold(t):
    """One unfolding of a top-level ``mu``; anything else is returned unchanged."""
    if isinstance(t, (Mu, Rec)):
        return subst_var(t.body, t.var, t)
    return t


def unfold_all(t, limit: int = 10_000):
    """Unfold until the head is not a ``mu``. Guarded terms need at most their mu-nesting depth."""
    n = 0
    while isinstance(t, (Mu, Rec)):
        t = unfold(t)
        n += 1
        if n > limit:
            raise CalculusError("unguarded recursion: unfolding does not reach a constructor")
    return t


def subst_value(p: Process, var: str, value: Value) -> Process:
    """``p[value/var]`` on expression variables; input binders shadow."""
    if isinstance(p, IntChoice):
        branches = tuple(
            OutBranch(b.label, None if b.expr is None else subst_expr(b.expr, var, value),
                      subst_value(b.cont, var, value))
            for b in p.branches
        )
        return replace(p, branches=branches)
    if isinstance(p, ExtChoice):
        branches = tuple(
            b if b.var == var else replace(b, cont=subst_value(b.cont, var, value))
            for b in p.branches
        )
        return replace(p, branches=branches)
    if isinstance(p, Rec):
        return replace(p, body=subst_value(p.body, var, value))
    return p


def process_free_expr_vars(p: Process, bound: frozenset[str] = frozenset()) -> frozenset[str]:
    out = frozenset()
    if isinstance(p, IntChoice):
        for b in p.branches:
            if b.expr is not None:
                out |= expr_free_vars(b.expr) - bound
            out |= process_free_expr_vars(b.cont, bound)
    elif isinstance(p, ExtChoice):
        for b in p.branches:
            out |= process_free_expr_vars(b.cont, bound | ({b.var} if b.var else set()))
    elif isinstance(p, Rec):
        out |= process_free_expr_vars(p.body, bound)
    return out

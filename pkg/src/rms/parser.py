"""Surface syntax (``.rms`` files) and the matching pretty-printer.

Grammar summary::

    process  P ::= p?{ l(x:Int).P, l.P } | p?l(x:Int).P
                 | p!{ l(e).P, l.P }     | p!l(e).P
                 | ckpt A { <choice> } | mu X. P | X | end
    global   G ::= p -> q { l(Int).G, l.G } | p -> q l(Int).G
                 | ckpt A p -> q { ... } | mu t. G | t | end
    type     T ::= p?{ l(Int).T } | p!{ l(Int).T } | ckpt A { ... } | mu t. T | t | end
    config     < [ P1, P2 ] ; P >          pair   < [ G1 ] ; G >
    session    session S [: pair] { p |> C, q |> P }
    network    network { S1 || S2 }
    script     script { comm p q l  choose p l  roll A }

A branch without ``.cont`` continues with ``end``. Names declared with
``global``/``process``/``type`` can be referenced from later or earlier
declarations of the same kind; they are inlined when the file is loaded.
``//`` starts a comment.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from . import kernel as k
from .kernel import CalculusError


class ParseError(CalculusError):
    def __init__(self, message: str, line: int, col: int):
        self.line, self.col = line, col
        super().__init__(f"{line}:{col}: {message}")


KEYWORDS = {"end", "mu", "ckpt", "global", "process", "type", "session", "network",
            "script", "true", "false"}
SORTS = {s.value: s for s in k.Sort}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|//[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|\|>|\|\||&&|==|<=|[?!{}()\[\]<>;,.:=+\-@])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind != "ws":
            tokens.append(Token(kind, chunk, line, pos - line_start + 1))
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
# Source files


@dataclass(frozen=True)
class Directive:
    """One scheduler step: ``comm p q l``, ``choose p l`` or ``roll A``, optionally ``@S``-scoped."""

    kind: str
    args: tuple[str, ...]
    session: str | None = None
    line: int = 0

    def __str__(self):
        head = f"@{self.session} " if self.session else ""
        return head + " ".join((self.kind,) + self.args)


DIRECTIVE_ARITY = {"comm": 3, "choose": 2, "roll": 1}


@dataclass
class SourceFile:
    globals: dict[str, object] = field(default_factory=dict)
    processes: dict[str, k.Process] = field(default_factory=dict)
    types: dict[str, object] = field(default_factory=dict)
    sessions: dict[str, k.Session] = field(default_factory=dict)
    pairs: dict[str, k.GlobalPair] = field(default_factory=dict)
    network_names: list[str] | None = None
    script: list[Directive] = field(default_factory=list)
    positions: dict[str, tuple[int, int]] = field(default_factory=dict)

    def network(self) -> k.Network:
        names = self.network_names if self.network_names is not None else list(self.sessions)
        return k.Network(tuple(self.sessions[n] for n in names))

    def session_names(self) -> list[str]:
        return self.network_names if self.network_names is not None else list(self.sessions)


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, offset=1) -> Token:
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        found = tok.text or "end of input"
        raise ParseError(f"{msg} (found {found!r})", tok.line, tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "ident")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}")
        t = self.tok
        self.i += 1
        return t

    def name(self, what="name") -> str:
        t = self.tok
        if t.kind != "ident" or t.text in KEYWORDS:
            self.error(f"expected {what}")
        self.i += 1
        return t.text

    def sort(self) -> k.Sort:
        t = self.tok
        if t.kind != "ident" or t.text not in SORTS:
            self.error("expected a sort (Int, Bool, Str)")
        self.i += 1
        return SORTS[t.text]

    def done(self):
        if self.tok.kind != "eof":
            self.error("unexpected trailing input")

    def comma_list(self, item, close: str) -> list:
        out = []
        if self.at(close):
            return out
        out.append(item())
        while self.accept(","):
            if self.at(close):
                break
            out.append(item())
        return out

    # expressions
    def expr(self) -> k.Expr:
        e = self.cmp_expr()
        while self.accept("&&"):
            e = k.BinOp("&&", e, self.cmp_expr())
        return e

    def cmp_expr(self) -> k.Expr:
        e = self.add_expr()
        for op in ("==", "<=", "<"):
            if self.accept(op):
                return k.BinOp(op, e, self.add_expr())
        return e

    def add_expr(self) -> k.Expr:
        e = self.unary_expr()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            e = k.BinOp(op, e, self.unary_expr())
        return e

    def unary_expr(self) -> k.Expr:
        if self.accept("!"):
            return k.UnOp("!", self.unary_expr())
        if self.at("-"):
            self.i += 1
            if self.tok.kind == "int":
                v = -int(self.tok.text)
                self.i += 1
                return k.Lit(v)
            return k.UnOp("-", self.unary_expr())
        return self.atom_expr()

    def atom_expr(self) -> k.Expr:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return k.Lit(int(t.text))
        if t.kind == "string":
            self.i += 1
            try:
                return k.Lit(json.loads(t.text))
            except ValueError:
                self.error("malformed string literal", t)
        if t.text in ("true", "false"):
            self.i += 1
            return k.Lit(t.text == "true")
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        return k.Var(self.name("expression"))

    # processes
    def process(self) -> k.Process:
        t = self.tok
        if self.accept("end"):
            return k.Inact()
        if self.accept("mu"):
            var = self.name("process variable")
            self.expect(".")
            return k.Rec(var, self.process())
        if self.accept("("):
            p = self.process()
            self.expect(")")
            return p
        if self.accept("ckpt"):
            name = self.name("checkpoint name")
            self.expect("{")
            choice = self.proc_choice(name)
            self.expect("}")
            return choice
        if t.kind == "ident" and self.peek().text in ("?", "!"):
            return self.proc_choice(None)
        return k.ProcVar(self.name("process"))

    def proc_choice(self, ckpt):
        peer = self.name("participant")
        if self.accept("?"):
            return k.ExtChoice(peer, self.branches(self.in_branch), ckpt)
        if self.accept("!"):
            return k.IntChoice(peer, self.branches(self.out_branch), ckpt)
        self.error("expected '?' or '!'")

    def branches(self, item):
        if self.accept("{"):
            bs = self.comma_list(item, "}")
            self.expect("}")
            return tuple(bs)
        return (item(),)

    def in_branch(self) -> k.InBranch:
        label = self.name("label")
        var = sort = None
        if self.accept("("):
            var = self.name("variable")
            self.expect(":")
            sort = self.sort()
            self.expect(")")
        return k.InBranch(label, var, sort, self.process_cont())

    def out_branch(self) -> k.OutBranch:
        label = self.name("label")
        e = None
        if self.accept("("):
            e = self.expr()
            self.expect(")")
        return k.OutBranch(label, e, self.process_cont())

    def process_cont(self):
        return self.process() if self.accept(".") else k.Inact()

    # global types
    def gtype(self):
        if self.accept("end"):
            return k.End()
        if self.accept("mu"):
            var = self.name("type variable")
            self.expect(".")
            return k.Mu(var, self.gtype())
        if self.accept("("):
            g = self.gtype()
            self.expect(")")
            return g
        if self.accept("ckpt"):
            name = self.name("checkpoint name")
            return self.comm(name)
        if self.tok.kind == "ident" and self.peek().text == "->":
            return self.comm(None)
        return k.TVar(self.name("global type"))

    def comm(self, ckpt):
        sender = self.name("participant")
        self.expect("->")
        receiver = self.name("participant")
        return k.Comm(sender, receiver, self.branches(lambda: self.type_branch(self.gtype)), ckpt)

    def type_branch(self, cont):
        label = self.name("label")
        s = None
        if self.accept("("):
            s = self.sort()
            self.expect(")")
        return k.Branch(label, s, cont() if self.accept(".") else k.End())

    # session types
    def stype(self):
        t = self.tok
        if self.accept("end"):
            return k.End()
        if self.accept("mu"):
            var = self.name("type variable")
            self.expect(".")
            return k.Mu(var, self.stype())
        if self.accept("("):
            s = self.stype()
            self.expect(")")
            return s
        if self.accept("ckpt"):
            name = self.name("checkpoint name")
            self.expect("{")
            s = self.type_choice(name)
            self.expect("}")
            return s
        if t.kind == "ident" and self.peek().text in ("?", "!"):
            return self.type_choice(None)
        return k.TVar(self.name("session type"))

    def type_choice(self, ckpt):
        peer = self.name("participant")
        if self.accept("?"):
            cls = k.Inter
        elif self.accept("!"):
            cls = k.Union
        else:
            self.error("expected '?' or '!'")
        return cls(peer, self.branches(lambda: self.type_branch(self.stype)), ckpt)

    # configurations, sessions, pairs
    def seq_pair(self, item):
        self.expect("<")
        self.expect("[")
        hist = self.comma_list(item, "]")
        self.expect("]")
        self.expect(";")
        active = item()
        self.expect(">")
        return tuple(hist), active

    def configuration(self) -> k.Configuration:
        t = self.tok
        hist, active = self.seq_pair(self.process)
        try:
            return k.Configuration(hist, active)
        except ValueError as exc:
            raise ParseError(str(exc), t.line, t.col) from None

    def global_pair(self) -> k.GlobalPair:
        t = self.tok
        hist, active = self.seq_pair(self.gtype)
        try:
            return _LazyPair(hist, active, t)
        except ValueError as exc:
            raise ParseError(str(exc), t.line, t.col) from None

    def config_type(self) -> k.ConfigType:
        t = self.tok
        hist, active = self.seq_pair(self.stype)
        try:
            return k.ConfigType(hist, active)
        except ValueError as exc:
            raise ParseError(str(exc), t.line, t.col) from None

    def session_body(self, name=None) -> tuple[list, Token]:
        start = self.expect("{")
        entries = []

        def binding():
            t = self.tok
            p = self.name("participant")
            self.expect("|>")
            c = self.configuration() if self.at("<") else k.Configuration((), self.process())
            entries.append((p, c, t))

        self.comma_list(binding, "}")
        self.expect("}")
        seen = set()
        for p, _, t in entries:
            if p in seen:
                raise ParseError(f"duplicate participant {p}", t.line, t.col)
            seen.add(p)
        return entries, start

    def directive(self) -> Directive:
        t = self.tok
        session = None
        if self.accept("@"):
            session = self.name("session")
        kind = self.name("directive")
        if kind not in DIRECTIVE_ARITY:
            self.error("expected comm, choose or roll", t)
        args = tuple(self.name("argument") for _ in range(DIRECTIVE_ARITY[kind]))
        return Directive(kind, args, session, t.line)


@dataclass(frozen=True)
class _LazyPair:
    # global pair whose history may still contain unresolved names
    history: tuple
    active: object
    tok: Token


# ---------------------------------------------------------------------------
# Name resolution


class _Resolver:
    def __init__(self, decls: dict[str, tuple[object, Token]], kind: str):
        self.decls = decls
        self.kind = kind
        self.done: dict[str, object] = {}
        self.stack: list[str] = []

    def get(self, name: str):
        if name in self.done:
            return self.done[name]
        term, tok = self.decls[name]
        if name in self.stack:
            cycle = " -> ".join(self.stack[self.stack.index(name):] + [name])
            raise ParseError(f"cyclic {self.kind} declarations: {cycle}", tok.line, tok.col)
        self.stack.append(name)
        out = self.resolve(term, tok)
        self.stack.pop()
        self.done[name] = out
        return out

    def resolve(self, term, tok: Token):
        for v in sorted(k.free_vars(term)):
            if v not in self.decls:
                raise ParseError(f"unbound {self.kind} name {v}", tok.line, tok.col)
            term = k.subst_var(term, v, self.get(v))
        return term


def parse(text: str) -> SourceFile:
    """Parse and validate a whole ``.rms`` file."""
    ps = _Parser(text)
    raw: dict[str, dict[str, tuple[object, Token]]] = {"global": {}, "process": {}, "type": {}}
    raw_sessions: list[tuple[str, object, list, Token]] = []
    network_names = None
    network_tok = None
    script: list[Directive] = []
    all_names: dict[str, Token] = {}

    def declare(name, tok):
        if name in all_names:
            raise ParseError(f"duplicate declaration {name}", tok.line, tok.col)
        all_names[name] = tok

    while ps.tok.kind != "eof":
        t = ps.tok
        if ps.accept("global") or ps.accept("process") or ps.accept("type"):
            kind = t.text
            name = ps.name(f"{kind} name")
            declare(name, t)
            ps.expect("=")
            term = {"global": ps.gtype, "process": ps.process, "type": ps.stype}[kind]()
            raw[kind][name] = (term, t)
        elif ps.accept("session"):
            name = ps.name("session name")
            declare(name, t)
            pair = ps.global_pair() if ps.accept(":") else None
            entries, _ = ps.session_body()
            raw_sessions.append((name, pair, entries, t))
        elif ps.accept("network"):
            if network_names is not None:
                ps.error("only one network declaration is allowed", t)
            network_tok = t
            ps.expect("{")
            network_names = [ps.name("session name")]
            while ps.accept("||"):
                network_names.append(ps.name("session name"))
            ps.expect("}")
        elif ps.accept("script"):
            ps.expect("{")
            while not ps.at("}"):
                script.append(ps.directive())
                ps.accept(";")
            ps.expect("}")
        else:
            ps.error("expected a declaration (global, process, type, session, network, script)")
        ps.accept(";")

    sf = SourceFile(script=script)
    sf.positions = {n: (tok.line, tok.col) for n, tok in all_names.items()}
    resolvers = {kind: _Resolver(decls, kind) for kind, decls in raw.items()}

    def checked(term, tok, what):
        violations = k.validate(term)
        if violations:
            raise k.ValidationError(violations, f"{tok.line}:{tok.col}: {what}")
        return term

    for kind, target in (("global", sf.globals), ("process", sf.processes), ("type", sf.types)):
        for name, (_, tok) in raw[kind].items():
            target[name] = checked(resolvers[kind].get(name), tok, f"{kind} {name}")

    for name, pair, entries, tok in raw_sessions:
        conf = {}
        for p, c, ptok in entries:
            hist = tuple(checked(resolvers["process"].resolve(h, ptok), ptok, f"{name}/{p}")
                         for h in c.history)
            active = checked(resolvers["process"].resolve(c.active, ptok), ptok, f"{name}/{p}")
            conf[p] = k.Configuration(hist, active)
        sf.sessions[name] = k.Session.of(conf, name)
        if pair is not None:
            rg = resolvers["global"]
            hist = tuple(checked(rg.resolve(g, pair.tok), pair.tok, f"{name} history")
                         for g in pair.history)
            active = checked(rg.resolve(pair.active, pair.tok), pair.tok, f"{name} global type")
            try:
                sf.pairs[name] = k.GlobalPair(hist, active)
            except ValueError as exc:
                raise ParseError(str(exc), pair.tok.line, pair.tok.col) from None

    if network_names is not None:
        for n in network_names:
            if n not in sf.sessions:
                raise ParseError(f"unknown session {n}", network_tok.line, network_tok.col)
        sf.network_names = network_names
    for d in script:
        if d.session is not None and d.session not in sf.sessions:
            raise ParseError(f"unknown session {d.session}", d.line, 1)
    return sf


def _parse_one(text: str, method: str, validate: bool = True):
    ps = _Parser(text)
    node = getattr(ps, method)()
    ps.done()
    if validate:
        k.check(node)
    return node


def parse_process(text: str) -> k.Process:
    return _parse_one(text, "process")


def parse_global(text: str):
    return _parse_one(text, "gtype")


def parse_type(text: str):
    return _parse_one(text, "stype")


def parse_expr(text: str) -> k.Expr:
    return _parse_one(text, "expr", validate=False)


def parse_configuration(text: str) -> k.Configuration:
    c = _parse_one(text, "configuration", validate=False)
    for p in c.history + (c.active,):
        k.check(p)
    return c


def parse_pair(text: str) -> k.GlobalPair:
    lp = _parse_one(text, "global_pair", validate=False)
    for g in lp.history + (lp.active,):
        k.check(g)
    return k.GlobalPair(lp.history, lp.active)


def parse_session(text: str) -> k.Session:
    ps = _Parser(text)
    entries, _ = ps.session_body()
    ps.done()
    for _, c, _ in entries:
        for p in c.history + (c.active,):
            k.check(p)
    return k.Session(tuple((p, c) for p, c, _ in entries))


def parse_network(text: str) -> k.Network:
    ps = _Parser(text)
    sessions = []
    while True:
        entries, _ = ps.session_body()
        sessions.append(k.Session(tuple((p, c) for p, c, _ in entries)))
        if not ps.accept("||"):
            break
    ps.done()
    return k.Network(tuple(sessions))


def parse_script(text: str) -> list[Directive]:
    """Parse a scheduler script: one directive per line, ``#`` comments."""
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        ps = _Parser(line)
        try:
            d = ps.directive()
            ps.done()
        except ParseError as exc:
            raise ParseError(str(exc).split(": ", 1)[1], lineno, exc.col) from None
        out.append(Directive(d.kind, d.args, d.session, lineno))
    return out


# ---------------------------------------------------------------------------
# Printing


def pretty(node) -> str:
    """Canonical surface text; ``parse_*`` of the result gives back ``node``."""
    if isinstance(node, (k.ExtChoice, k.IntChoice, k.Rec, k.ProcVar, k.Inact)):
        return _proc(node)
    if isinstance(node, (k.Inter, k.Union)):
        return _stype(node)
    if isinstance(node, k.Comm):
        return _gtype(node)
    if isinstance(node, (k.Mu, k.TVar, k.End)):
        # ambiguous between session and global types; both print alike here
        return _stype(node) if not _has_comm(node) else _gtype(node)
    if isinstance(node, k.Configuration):
        return _seq_pair(node.history, node.active, _proc)
    if isinstance(node, k.GlobalPair):
        return _seq_pair(node.history, node.active, _gtype)
    if isinstance(node, k.ConfigType):
        return _seq_pair(node.history, node.active, _stype)
    if isinstance(node, k.Session):
        return _session(node)
    if isinstance(node, k.Network):
        return " || ".join(_session(s) for s in node.sessions)
    if isinstance(node, (k.Lit, k.Var, k.UnOp, k.BinOp)):
        return _expr(node)
    raise TypeError(f"cannot print {node!r}")


def _has_comm(node) -> bool:
    if isinstance(node, k.Comm):
        return True
    return any(_has_comm(c) for _, c in k.children(node))


def _expr(e) -> str:
    if isinstance(e, k.Lit):
        if e.sort is k.Sort.BOOL:
            return "true" if e.value else "false"
        if e.sort is k.Sort.STR:
            return json.dumps(e.value, ensure_ascii=False)
        return str(e.value)
    if isinstance(e, k.Var):
        return e.name
    if isinstance(e, k.UnOp):
        return f"{e.op}({_expr(e.arg)})"
    return f"({_expr(e.left)} {e.op} {_expr(e.right)})"


def _cont(cont, show) -> str:
    if isinstance(cont, (k.Inact, k.End)):
        return ""
    return "." + show(cont)


def _choice_text(peer, mark, items, braces) -> str:
    if len(items) == 1 and not braces:
        return f"{peer}{mark}{items[0]}"
    return f"{peer}{mark}{{ {', '.join(items)} }}"


def _proc(p) -> str:
    if isinstance(p, k.Inact):
        return "end"
    if isinstance(p, k.ProcVar):
        return p.name
    if isinstance(p, k.Rec):
        return f"mu {p.var}. {_proc(p.body)}"
    if isinstance(p, k.ExtChoice):
        items = [b.label + (f"({b.var}:{b.sort})" if b.var else "") + _cont(b.cont, _proc)
                 for b in p.branches]
        text = _choice_text(p.peer, "?", items, p.ckpt is not None)
    else:
        items = [b.label + (f"({_expr(b.expr)})" if b.expr is not None else "") + _cont(b.cont, _proc)
                 for b in p.branches]
        text = _choice_text(p.peer, "!", items, p.ckpt is not None)
    return f"ckpt {p.ckpt} {{ {text} }}" if p.ckpt else text


def _type_branches(node, show):
    return [b.label + (f"({b.sort})" if b.sort else "") + _cont(b.cont, show) for b in node.branches]


def _stype(t) -> str:
    if isinstance(t, k.End):
        return "end"
    if isinstance(t, k.TVar):
        return t.name
    if isinstance(t, k.Mu):
        return f"mu {t.var}. {_stype(t.body)}"
    mark = "?" if isinstance(t, k.Inter) else "!"
    text = _choice_text(t.peer, mark, _type_branches(t, _stype), t.ckpt is not None)
    return f"ckpt {t.ckpt} {{ {text} }}" if t.ckpt else text


def _gtype(g) -> str:
    if isinstance(g, k.End):
        return "end"
    if isinstance(g, k.TVar):
        return g.name
    if isinstance(g, k.Mu):
        return f"mu {g.var}. {_gtype(g.body)}"
    items = _type_branches(g, _gtype)
    head = f"{g.sender} -> {g.receiver} "
    if len(items) == 1 and g.ckpt is None:
        return head + items[0]
    text = head + f"{{ {', '.join(items)} }}"
    return f"ckpt {g.ckpt} {text}" if g.ckpt else text


def _seq_pair(hist, active, show) -> str:
    return f"< [{', '.join(show(h) for h in hist)}] ; {show(active)} >"


def _session(s: k.Session) -> str:
    items = [f"{p} |> {_seq_pair(c.history, c.active, _proc)}" for p, c in s.items()]
    return "{ " + ", ".join(items) + " }"


def format_source(sf: SourceFile) -> str:
    """Canonical text of a loaded file, with declarations inlined."""
    out = []
    for name, g in sf.globals.items():
        out.append(f"global {name} = {_gtype(g)};")
    for name, t in sf.types.items():
        out.append(f"type {name} = {_stype(t)};")
    for name, p in sf.processes.items():
        out.append(f"process {name} = {_proc(p)};")
    for name, s in sf.sessions.items():
        pair = f" : {_seq_pair(sf.pairs[name].history, sf.pairs[name].active, _gtype)}" \
            if name in sf.pairs else ""
        body = ",\n".join(f"  {p} |> {_seq_pair(c.history, c.active, _proc)}" for p, c in s.items())
        out.append(f"session {name}{pair} {{\n{body}\n}}")
    if sf.network_names is not None:
        out.append("network { " + " || ".join(sf.network_names) + " }")
    if sf.script:
        out.append("script {\n" + "\n".join(f"  {d}" for d in sf.script) + "\n}")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Mathematical rendering


def pretty_math(t) -> str:
    """Session or global type in the usual notation, e.g. ``Tr?qr(Str).⟨Tr!nAv ∨ Tr!av⟩^A``."""
    if isinstance(t, k.End):
        return "end"
    if isinstance(t, k.TVar):
        return t.name
    if isinstance(t, k.Mu):
        return f"μ{t.var}.{pretty_math(t.body)}"
    if isinstance(t, k.Comm):
        items = [b.label + (f"({b.sort})" if b.sort else "") + _cont(b.cont, pretty_math)
                 for b in t.branches]
        body = items[0] if len(items) == 1 else "{" + ", ".join(items) + "}"
        text = f"{t.sender}→{t.receiver} {body}"
        return f"⟨{text}⟩^{t.ckpt}" if t.ckpt else text
    mark, join = ("?", " ∧ ") if isinstance(t, k.Inter) else ("!", " ∨ ")
    items = [f"{t.peer}{mark}{b.label}" + (f"({b.sort})" if b.sort else "") + _cont(b.cont, pretty_math)
             for b in t.branches]
    text = join.join(items)
    if t.ckpt:
        return f"⟨{text}⟩^{t.ckpt}"
    return text if len(items) == 1 else f"({text})"

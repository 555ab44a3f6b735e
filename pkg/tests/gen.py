"""Random generators of valid terms, driven by ``random.Random`` so that
hypothesis can shrink over the integer seed."""

from __future__ import annotations

import random
import string

from rms import kernel as k

PEERS = ("p", "q", "r", "s")
LABELS = ("a", "b", "c", "d", "e")
CKPTS = ("A", "B", "C")
SORTS = tuple(k.Sort)


def gen_value(rng: random.Random, sort: k.Sort) -> k.Value:
    if sort is k.Sort.INT:
        return rng.randint(-50, 50)
    if sort is k.Sort.BOOL:
        return rng.random() < 0.5
    return "".join(rng.choice(string.ascii_letters + ' "\\') for _ in range(rng.randint(0, 4)))


def gen_expr(rng: random.Random, sort: k.Sort, env: dict, depth: int = 2) -> k.Expr:
    """A well-sorted expression of ``sort`` over the variables in ``env``."""
    usable = [x for x, s in env.items() if s is sort]
    roll = rng.random()
    if depth <= 0 or roll < 0.3:
        if usable and rng.random() < 0.5:
            return k.Var(rng.choice(usable))
        return k.Lit(gen_value(rng, sort))
    if sort is k.Sort.INT:
        if roll < 0.45:
            return k.UnOp("-", gen_expr(rng, sort, env, depth - 1))
        return k.BinOp(rng.choice("+-"), gen_expr(rng, sort, env, depth - 1),
                       gen_expr(rng, sort, env, depth - 1))
    if sort is k.Sort.BOOL:
        if roll < 0.45:
            return k.UnOp("!", gen_expr(rng, sort, env, depth - 1))
        if roll < 0.65:
            return k.BinOp("&&", gen_expr(rng, sort, env, depth - 1), gen_expr(rng, sort, env, depth - 1))
        if roll < 0.85:
            return k.BinOp(rng.choice(["<", "<="]), gen_expr(rng, k.Sort.INT, env, depth - 1),
                           gen_expr(rng, k.Sort.INT, env, depth - 1))
        inner = rng.choice(SORTS)
        return k.BinOp("==", gen_expr(rng, inner, env, depth - 1), gen_expr(rng, inner, env, depth - 1))
    if usable and rng.random() < 0.5:
        return k.Var(rng.choice(usable))
    return k.Lit(gen_value(rng, sort))


class _Fresh:
    def __init__(self, prefix):
        self.prefix, self.n = prefix, 0

    def __call__(self):
        self.n += 1
        return f"{self.prefix}{self.n}"


def _labels(rng, lo, hi):
    return rng.sample(LABELS, rng.randint(lo, hi))


def _ckpt(rng, open_ckpts, prob):
    free = [a for a in CKPTS if a not in open_ckpts]
    if free and rng.random() < prob:
        return rng.choice(free)
    return None


def gen_process(rng: random.Random, size: int = 10, env: dict | None = None,
                ckpt_prob: float = 0.3) -> k.Process:
    """A valid process; expression variables free in it are those of ``env``."""
    fresh_x, fresh_rec = _Fresh("x"), _Fresh("X")
    budget = [size]

    def proc(env, pvars, open_ckpts, force_choice=False):
        budget[0] -= 1
        if not force_choice:
            roll = rng.random()
            if budget[0] <= 0 or roll < 0.15:
                if pvars and rng.random() < 0.6:
                    return k.ProcVar(rng.choice(pvars))
                return k.Inact()
            if roll < 0.25:
                x = fresh_rec()
                return k.Rec(x, proc(env, pvars + [x], open_ckpts, force_choice=True))
        ck = _ckpt(rng, open_ckpts, ckpt_prob)
        if ck is not None:
            # recursion may not re-enter a checkpoint from outside
            pvars, open_ckpts = [], open_ckpts | {ck}
        peer = rng.choice(PEERS)
        labels = _labels(rng, 2 if ck else 1, 3)
        if rng.random() < 0.5:
            branches = []
            for lab in labels:
                if rng.random() < 0.6:
                    x, s = fresh_x(), rng.choice(SORTS)
                    branches.append(k.InBranch(lab, x, s, proc({**env, x: s}, pvars, open_ckpts)))
                else:
                    branches.append(k.InBranch(lab, None, None, proc(env, pvars, open_ckpts)))
            return k.ExtChoice(peer, tuple(branches), ck)
        branches = []
        for lab in labels:
            e = gen_expr(rng, rng.choice(SORTS), env) if rng.random() < 0.6 else None
            branches.append(k.OutBranch(lab, e, proc(env, pvars, open_ckpts)))
        return k.IntChoice(peer, tuple(branches), ck)

    return proc(dict(env or {}), [], frozenset())


def gen_type(rng: random.Random, size: int = 10, ckpt_prob: float = 0.3, rec_prob: float = 0.15,
             labels=LABELS, peers=PEERS):
    """A valid session type with about ``size`` nodes."""
    fresh = _Fresh("t")
    budget = [size]

    def typ(tvars, open_ckpts, force_choice=False):
        budget[0] -= 1
        if not force_choice:
            roll = rng.random()
            if budget[0] <= 0 or roll < 0.15:
                if tvars and rng.random() < 0.6:
                    return k.TVar(rng.choice(tvars))
                return k.End()
            if roll < 0.15 + rec_prob:
                t = fresh()
                return k.Mu(t, typ(tvars + [t], open_ckpts, force_choice=True))
        ck = _ckpt(rng, open_ckpts, ckpt_prob)
        if ck is not None:
            tvars, open_ckpts = [], open_ckpts | {ck}
        cls = k.Inter if rng.random() < 0.5 else k.Union
        labs = rng.sample(labels, rng.randint(2 if ck else 1, min(3, len(labels))))
        branches = tuple(k.Branch(lab, rng.choice((None,) + SORTS), typ(tvars, open_ckpts)) for lab in labs)
        return cls(rng.choice(peers), branches, ck)

    return typ([], frozenset())


def gen_global(rng: random.Random, size: int = 10, ckpt_prob: float = 0.3):
    """A valid (not necessarily well-formed) global type."""
    fresh = _Fresh("t")
    budget = [size]

    def glob(tvars, open_ckpts, force_choice=False):
        budget[0] -= 1
        if not force_choice:
            roll = rng.random()
            if budget[0] <= 0 or roll < 0.15:
                if tvars and rng.random() < 0.6:
                    return k.TVar(rng.choice(tvars))
                return k.End()
            if roll < 0.25:
                t = fresh()
                return k.Mu(t, glob(tvars + [t], open_ckpts, force_choice=True))
        ck = _ckpt(rng, open_ckpts, ckpt_prob)
        if ck is not None:
            tvars, open_ckpts = [], open_ckpts | {ck}
        p, q = rng.sample(PEERS, 2)
        labs = _labels(rng, 2 if ck else 1, 3)
        branches = tuple(k.Branch(lab, rng.choice((None,) + SORTS), glob(tvars, open_ckpts)) for lab in labs)
        return k.Comm(p, q, branches, ck)

    return glob([], frozenset())


# ---------------------------------------------------------------------------
# Related types: widen gives a supertype, narrow a subtype


def _fresh_label(used):
    for lab in LABELS + tuple(f"z{i}" for i in range(100)):
        if lab not in used:
            return lab
    raise AssertionError("out of labels")


def widen(rng: random.Random, t):
    """A supertype of ``t``: drop input branches, add output branches."""
    return _relate(rng, t, up=True)


def narrow(rng: random.Random, t):
    """A subtype of ``t``: add input branches, drop output branches."""
    return _relate(rng, t, up=False)


def _relate(rng, t, up):
    if isinstance(t, k.Mu):
        return k.Mu(t.var, _relate(rng, t.body, up))
    if not isinstance(t, (k.Inter, k.Union)):
        return t
    branches = [k.Branch(b.label, b.sort, _relate(rng, b.cont, up)) for b in t.branches]
    least = 2 if t.ckpt else 1
    # supertype of an intersection, subtype of a union: fewer branches
    drop = isinstance(t, k.Inter) == up
    if drop:
        if len(branches) > least and rng.random() < 0.4:
            branches.pop(rng.randrange(len(branches)))
    elif rng.random() < 0.3:
        lab = _fresh_label({b.label for b in branches})
        branches.insert(rng.randrange(len(branches) + 1), k.Branch(lab, rng.choice(SORTS), k.End()))
    return type(t)(t.peer, tuple(branches), t.ckpt)


def mutate(rng: random.Random, t):
    """A nearby type: related, unfolded, or perturbed in one place."""
    roll = rng.random()
    if roll < 0.3:
        return widen(rng, t)
    if roll < 0.6:
        return narrow(rng, t)
    if roll < 0.7 and isinstance(t, k.Mu):
        return k.unfold(t)
    return _perturb(rng, t)


def _perturb(rng, t):
    if isinstance(t, k.Mu):
        return k.Mu(t.var, _perturb(rng, t.body))
    if not isinstance(t, (k.Inter, k.Union)):
        return t
    branches = list(t.branches)
    i = rng.randrange(len(branches))
    b = branches[i]
    roll = rng.random()
    if roll < 0.25:
        branches[i] = k.Branch(b.label, rng.choice((None,) + SORTS), b.cont)
    elif roll < 0.4:
        return type(t)(rng.choice(PEERS), tuple(branches), t.ckpt)
    elif roll < 0.5 and isinstance(b.cont, k.End):
        branches[i] = k.Branch(b.label, b.sort, k.Union("p", (k.Branch("a", None, k.End()),)))
    else:
        branches[i] = k.Branch(b.label, b.sort, _perturb(rng, b.cont))
    return type(t)(t.peer, tuple(branches), t.ckpt)


def valid(t) -> bool:
    return not k.validate(t)


SMALL = dict(labels=("a", "b", "c"), peers=("p", "q"), rec_prob=0.3)


def small_pair(rng: random.Random, max_nodes: int = 8):
    """Two types of at most ``max_nodes`` nodes, often but not always related."""
    while True:
        t = gen_type(rng, max_nodes, **SMALL)
        if isinstance(t, k.End):
            continue
        roll = rng.random()
        if roll < 0.4:
            u = mutate(rng, t)
        elif roll < 0.8:
            u = _perturb(rng, t)
        else:
            u = gen_type(rng, max_nodes, **SMALL)
        if k.size(t) <= max_nodes and k.size(u) <= max_nodes and valid(u):
            return t, u


def chain(rng: random.Random, size: int = 10):
    """A triple t <= u <= v built by narrowing and widening a random type."""
    u = gen_type(rng, size)
    return narrow(rng, u), u, widen(rng, u)

"""Independent reference checks used by the tests.

Nothing here calls into the subtyping module; recursion is unfolded by a
local substitution rather than the kernel's.
"""

from rms import kernel as k


def _subst(t, var, repl):
    if isinstance(t, k.TVar):
        return repl if t.name == var else t
    if isinstance(t, k.Mu):
        return t if t.var == var else k.Mu(t.var, _subst(t.body, var, repl))
    if isinstance(t, (k.Inter, k.Union)):
        return type(t)(t.peer, tuple(k.Branch(b.label, b.sort, _subst(b.cont, var, repl))
                                     for b in t.branches), t.ckpt)
    return t


def _expose(t):
    for _ in range(64):
        if not isinstance(t, k.Mu):
            return t
        t = _subst(t.body, t.var, t)
    raise ValueError("unguarded recursion")


def bounded_subtype(t, u, depth: int = 6) -> bool:
    """Simulation of ``t`` by ``u`` on all finite unfoldings up to ``depth`` choices.

    A pair that survives ``depth`` levels is accepted, which makes this an
    over-approximation of the coinductive relation that becomes exact once
    the depth exceeds the length of the shortest distinguishing path.
    """
    if depth == 0:
        return True
    t, u = _expose(t), _expose(u)
    if isinstance(t, k.End) or isinstance(u, k.End):
        return isinstance(t, k.End) and isinstance(u, k.End)
    if isinstance(t, k.TVar) or isinstance(u, k.TVar):
        return t == u
    if type(t) is not type(u) or t.peer != u.peer or t.ckpt != u.ckpt:
        return False
    tb = {b.label: b for b in t.branches}
    ub = {b.label: b for b in u.branches}
    # inputs: the subtype offers at least the supertype's labels; outputs: at most
    common = ub if isinstance(t, k.Inter) else tb
    other = tb if isinstance(t, k.Inter) else ub
    if not set(common) <= set(other):
        return False
    return all(tb[lab].sort == ub[lab].sort and bounded_subtype(tb[lab].cont, ub[lab].cont, depth - 1)
               for lab in common)

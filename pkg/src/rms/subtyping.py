"""Coinductive subtyping on session types.

Intersections (inputs) and unions (outputs) are compared by label-set
inclusion: a subtype may offer more inputs and must select among fewer
outputs. Sorts are invariant and checkpoint names must agree exactly.
Recursive types are compared on their regular trees by assuming a pair
related while its components are checked.
"""

from __future__ import annotations

from . import kernel as k


def _head(t, u):
    """Compare the heads of two unfolded types.

    Returns None when the heads are incompatible, otherwise the list of
    continuation pairs that must be related as well.
    """
    if isinstance(t, k.End) and isinstance(u, k.End):
        return []
    if isinstance(t, k.TVar) and isinstance(u, k.TVar):
        return [] if t.name == u.name else None
    if type(t) is not type(u) or not isinstance(t, (k.Inter, k.Union)):
        return None
    if t.ckpt != u.ckpt or t.peer != u.peer:
        return None
    tb = {b.label: b for b in t.branches}
    ub = {b.label: b for b in u.branches}
    if isinstance(t, k.Inter):
        # supertype's inputs must all be offered by the subtype
        if not ub.keys() <= tb.keys():
            return None
        labels = [b.label for b in u.branches]
    else:
        if not tb.keys() <= ub.keys():
            return None
        labels = [b.label for b in t.branches]
    pairs = []
    for lab in labels:
        if tb[lab].sort != ub[lab].sort:
            return None
        pairs.append((tb[lab].cont, ub[lab].cont))
    return pairs


def is_subtype(t, u) -> bool:
    """Decide ``t <= u``."""
    assumed: set[tuple] = set()
    todo = [(t, u)]
    while todo:
        a, b = todo.pop()
        a, b = k.unfold_all(a), k.unfold_all(b)
        if (a, b) in assumed:
            continue
        assumed.add((a, b))
        subgoals = _head(a, b)
        if subgoals is None:
            return False
        todo.extend(subgoals)
    return True


def equal_regular(t, u) -> bool:
    """Regular-tree equality, i.e. subtyping in both directions."""
    return is_subtype(t, u) and is_subtype(u, t)


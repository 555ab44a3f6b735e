import random
from functools import reduce

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import G, G1, G2, PROJ
from gen import PEERS, gen_global, gen_type
from rms import kernel as k
from rms.parser import parse_global, parse_type
from rms.projection import Undefined, merge, participants, project, well_formed
from rms.subtyping import equal_regular


def test_participants():
    assert participants(parse_global(G)) == {"Tr", "Ht", "Al"}
    assert participants(k.End()) == frozenset()
    upsilon = (parse_global(G1), parse_global(G2))
    assert participants(upsilon) == participants(upsilon[0]) | participants(upsilon[1])
    assert participants(upsilon) == {"Tr", "Ht", "Al"}


@pytest.mark.parametrize("p", ["Tr", "Ht", "Al"])
def test_projections_of_running_example(p):
    got = project(parse_global(G), p)
    want = parse_type(PROJ[p])
    assert got == want
    assert equal_regular(got, want)


def test_running_example_is_well_formed():
    wf = well_formed(parse_global(G))
    assert wf.ok and not wf.failures
    assert set(wf.projections) == {"Tr", "Ht", "Al"}


def test_merge_of_third_party_branches():
    g1 = parse_global(G1)
    branches = [project(b.cont, "Al") for b in g1.branches]
    got = merge(branches)
    assert got == parse_type("Tr?{ ds, rs. ckpt B { Tr!{ nAv, av } } }")


def test_merge_singleton_and_clash():
    t = parse_type("p!a.end")
    assert merge([t]) == t
    clash = merge([parse_type("p?l(Int).end"), parse_type("p?l(Bool).end")])
    assert isinstance(clash, Undefined) and "l" in clash.reason
    assert isinstance(merge([parse_type("p?a.end"), parse_type("q?b.end")]), Undefined)
    assert isinstance(merge([parse_type("p!a.end"), parse_type("p!b.end")]), Undefined)


def test_merge_checkpointed():
    a = parse_type("ckpt A { p?{ a, b } }")
    b = parse_type("ckpt A { p?{ c, d } }")
    assert merge([a, b]) == parse_type("ckpt A { p?{ a, b, c, d } }")
    c = parse_type("ckpt B { p?{ c, d } }")
    assert isinstance(merge([a, c]), Undefined)


def test_third_party_with_end_and_input_is_undefined():
    g = parse_global("p -> q { a. r -> q x.end, b.end }")
    assert isinstance(project(g, "r"), Undefined)


def test_projection_of_g2_on_hotel_is_end():
    assert project(parse_global(G2), "Ht") == k.End()
    assert project(k.End(), "p") == k.End()


def test_ill_formed_clash():
    g = parse_global("ckpt A p -> q { l1. r -> s m1.end, l2. r -> s m1(Int).end }")
    wf = well_formed(g)
    assert not wf.ok
    # r outputs in both branches and unions never merge; s sees m1 twice
    assert set(wf.failures) == {"r", "s"}
    assert "m1" in str(wf.failures["s"])


def test_checkpointed_third_party_already_checkpointed():
    g = parse_global("ckpt A p -> q { a. ckpt B r -> q { x, y }, b. ckpt B r -> q { z, w } }")
    assert isinstance(project(g, "r"), Undefined)


def test_recursion():
    g = parse_global("mu t. p -> q { a. t, b.end }")
    assert project(g, "p") == parse_type("mu t. q!{ a.t, b }")
    assert project(g, "r") == k.End()
    assert project(k.TVar("t"), "p") == k.TVar("t")


def test_undefined_carries_path():
    g = parse_global("p -> q { x. p -> q { a. r -> q m.end, b.end }, y.end }")
    u = project(g, "r")
    assert isinstance(u, Undefined)
    assert u.path[0] == "x"
    assert str(u).startswith("undefined at x")


def _projections(seed):
    g = gen_global(random.Random(seed), size=10)
    return g, {r: project(g, r) for r in participants(g)}


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 2**32))
def test_sender_and_receiver_keep_branches(seed):
    g, projs = _projections(seed)
    if not isinstance(g, k.Comm):
        return
    for r, cls in ((g.sender, k.Union), (g.receiver, k.Inter)):
        t = projs[r]
        if isinstance(t, Undefined):
            continue
        assert isinstance(t, cls)
        assert [(b.label, b.sort) for b in t.branches] == [(b.label, b.sort) for b in g.branches]
        assert t.ckpt == g.ckpt


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 2**32))
def test_third_party_never_gains_foreign_checkpoint(seed):
    g, projs = _projections(seed)
    if not isinstance(g, k.Comm):
        return
    for r, t in projs.items():
        if r in (g.sender, g.receiver) or isinstance(t, Undefined):
            continue
        # a checkpointed third-party projection carries exactly g's checkpoint
        if k.is_checkpointed(t) and g.ckpt is not None:
            assert t.ckpt == g.ckpt
            inner = merge([project(b.cont, r) for b in g.branches])
            assert not isinstance(inner, Undefined) and not k.is_checkpointed(inner)


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(PEERS + ("z",)))
def test_outsiders_project_to_end(seed, r):
    g = gen_global(random.Random(seed), size=10)
    if r not in participants(g):
        assert project(g, r) == k.End()


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 2**32))
def test_projections_are_valid_types(seed):
    g, projs = _projections(seed)
    for t in projs.values():
        if not isinstance(t, Undefined):
            assert k.validate(t) == []


@settings(max_examples=400, deadline=None)
@given(st.integers(0, 2**32))
def test_merge_matches_pairwise_fold(seed):
    rng = random.Random(seed)
    ck = rng.choice([None, "A"])
    ts = []
    for _ in range(rng.randint(2, 4)):
        labs = rng.sample("abcdefgh", rng.randint(1 if ck is None else 2, 2))
        peer = "p" if rng.random() < 0.9 else "q"
        cont = gen_type(rng, size=3, ckpt_prob=0.0)
        ts.append(k.Inter(peer, tuple(k.Branch(lab, None, cont) for lab in labs), ck))
    whole = merge(ts)
    folded = reduce(lambda a, b: merge([a, b]) if not isinstance(a, Undefined) else a, ts)
    if isinstance(whole, Undefined):
        assert isinstance(folded, Undefined)
    else:
        assert folded == whole

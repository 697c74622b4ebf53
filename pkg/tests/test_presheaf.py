from hypothesis import given

import oracle as O
from strategies import sited_preorders
from sitecheck.cat import FinFunctor
from sitecheck.fibred import grothendieck_construction
from sitecheck.fixtures import arrow, fpre, one, p2, pow2_with_base
from sitecheck.frames import FiniteFrame, canonical_topology, frame_isomorphism
from sitecheck.locale import InternalLocaleCandidate
from sitecheck.presheaf import (
    FinPresheaf,
    Subpresheaf,
    all_subpresheaves,
    close_subpresheaf,
    closed_subobject_frame,
    generated_subpresheaf,
    hom_presheaf,
    sheaf_report,
    validate_presheaf,
)
from sitecheck.topology import generate_topology, trivial_topology


def test_validate_examples():
    a = arrow()
    assert validate_presheaf(FinPresheaf.constant(a, ["x"])).passed
    rep_b = FinPresheaf.representable(a, "b")
    assert rep_b.sections == {"a": ("f",), "b": ("id_b",)}
    assert validate_presheaf(rep_b).passed


def test_hom_presheaf_examples():
    o = one()
    h = hom_presheaf(FinFunctor.identity(o), "*")
    assert h.sections == {"*": ("id_*",)}
    P = p2().category
    h = hom_presheaf(FinFunctor.identity(P), "{0,1}")
    assert all(len(v) == 1 for v in h.sections.values())
    d, _ = fpre()
    g = grothendieck_construction(d)
    h = hom_presheaf(g.projection, "*")
    assert set(h.sections.values()) == {("id_*",)}


def fpre_setup():
    d, k = fpre()
    g = grothendieck_construction(d)
    # the total category of an indexed preorder over ONE is the fibre itself, up to renaming
    kt = generate_topology(g.total, {g.obj("*", "top"): [[g.arrow("id_*", "u<=top", "top")]]})
    return g, kt


def test_closure_of_down_u_is_maximal_under_u_covers_top():
    g, kt = fpre_setup()
    h = hom_presheaf(g.projection, "*")
    down_u = Subpresheaf.of(h, {g.obj("*", "bot"): ["id_*"], g.obj("*", "u"): ["id_*"]})
    assert close_subpresheaf(kt, down_u) == Subpresheaf.maximal(h)
    assert close_subpresheaf(trivial_topology(g.total), down_u) == down_u


def test_closed_subobject_frames():
    o = one()
    cs = closed_subobject_frame(trivial_topology(o), FinPresheaf.constant(o, ["x"]))
    assert len(cs.frame.elements) == 2
    g, kt = fpre_setup()
    cs = closed_subobject_frame(kt, hom_presheaf(g.projection, "*"))
    assert len(cs.frame.elements) == 3
    assert O.is_chain([frozenset(x for x, ss in cs.decode[e].parts if ss) for e in cs.frame.elements])
    f = p2()
    P = f.category
    cs = closed_subobject_frame(canonical_topology(f), FinPresheaf.representable(P, "{0,1}"))
    assert frame_isomorphism(cs.frame, f) is not None


def test_sheaf_examples():
    a = arrow()
    assert sheaf_report(trivial_topology(a), FinPresheaf.constant(a, ["x", "y"])).passed
    s, j = pow2_with_base()
    d = s.indexed
    cand = InternalLocaleCandidate(d.base, j, dict(d.posets), {f: d.fibre_map(f) for f in d.base.arrows})
    assert sheaf_report(j, cand.underlying_presheaf()).passed
    f = p2()
    k = canonical_topology(f)
    rep = sheaf_report(k, FinPresheaf.constant(f.category, ["x", "y"]))
    assert not rep["separated"].ok
    assert rep["separated"].witness["object"] == "{}"


def test_restriction_violating_composition():
    ch = FiniteFrame.chain(["0", "1", "2"]).category
    swap, same = {"p": "q", "q": "p"}, {"p": "p", "q": "q"}
    res = {a: (same if ch.dom(a) == ch.cod(a) else swap) for a in ch.arrows}
    rep = validate_presheaf(FinPresheaf(ch, {x: ["p", "q"] for x in ch.objects}, res))
    assert {c.name for c in rep.failures} == {"composition"}
    assert len(rep["composition"].witness["pair"]) == 2


def oracle_closed(k_covers, c, p, sub):
    out = {}
    for x in c.objects:
        out[x] = frozenset(
            s for s in p.sections[x]
            if frozenset(f for f in O.arrows_into(c, x) if p.restrict(f, s) in sub[c.arrows[f][0]]) in k_covers[x]
        )
    return out


@given(sited_preorders(max_size=3))
def test_closed_subobjects_match_brute_force(data):
    c, fams = data
    k = generate_topology(c, fams)
    covers = O.library_covers(k)
    x0 = c.objects[-1]
    h = FinPresheaf.representable(c, x0)
    subs = all_subpresheaves(h)
    flat = [(x, t) for x in c.objects for t in h.sections[x]]
    brute = [
        chosen for chosen in O.powerset(flat)
        if all((c.arrows[f][0], h.restrict(f, t)) in chosen for (x, t) in chosen for f in O.arrows_into(c, x))
    ]
    assert len(subs) == len(brute)
    closed = set()
    for s in subs:
        parts = {x: s.at(x) for x in c.objects}
        cl = oracle_closed(covers, c, h, parts)
        assert {x: close_subpresheaf(k, s).at(x) for x in c.objects} == cl
        if cl == parts:
            closed.add(tuple(sorted(parts.items())))
    cs = closed_subobject_frame(k, h)
    assert {tuple(sorted((x, t.at(x)) for x in c.objects)) for t in cs.decode.values()} == closed
    assert O.is_distributive_lattice(list(cs.frame.elements), O.leq_of(cs.frame))


@given(sited_preorders(max_size=3))
def test_generated_subpresheaf_is_least(data):
    c, _ = data
    h = FinPresheaf.representable(c, c.objects[0])
    for s in all_subpresheaves(h):
        gens = [(x, t) for x in c.objects for t in s.at(x)]
        assert generated_subpresheaf(h, gens) == s

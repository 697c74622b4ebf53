import pytest
from hypothesis import given

import oracle as O
from strategies import posets, sited_preorders
from sitecheck.cat import FinCategory, FinFunctor, validate_category
from sitecheck.existential import ExistentialSite, existential_topology, factor_cocartesian_vertical
from sitecheck.fibred import (
    IndexedCat,
    fibration_morphism_report,
    giraud_topology,
    grothendieck_construction,
    is_cartesian,
    tau_and_adjunction,
    total_functor,
    validate_indexed,
)
from sitecheck.fixtures import arrow, one, pow2, pow2_with_base, sier
from sitecheck.frames import FiniteFrame, canonical_topology
from sitecheck.report import PreconditionError
from sitecheck.topology import generate_topology, trivial_topology, validate_topology


def over_one(f):
    return IndexedCat.of_posets(one(), {"*": f}, {})


def test_total_over_one_is_the_fibre():
    s = sier()
    g = grothendieck_construction(over_one(s))
    assert (len(g.total.objects), len(g.total.arrows)) == (3, 6)
    assert validate_category(g.total).passed


def test_pow2_total_has_nine_objects():
    g = pow2().groth
    assert len(g.total.objects) == 1 + 2 + 2 + 4
    assert validate_category(g.total).passed


def test_total_over_arrow_with_point_fibres_is_arrow():
    a = arrow()
    pt = FiniteFrame(["*"], [])
    d = IndexedCat.of_posets(a, {"a": pt, "b": pt}, {"f": {"*": "*"}})
    g = grothendieck_construction(d)
    assert (len(g.total.objects), len(g.total.arrows)) == (2, 3)


def test_giraud_examples():
    s = sier()
    g = grothendieck_construction(over_one(s))
    t = giraud_topology(g, trivial_topology(g.indexed.base))
    assert O.library_covers(t) == {x: {O.maximal(g.total, x)} for x in g.total.objects}

    a = arrow()
    pt = FiniteFrame(["*"], [])
    d = IndexedCat.of_posets(a, {"a": pt, "b": pt}, {"f": {"*": "*"}})
    g = grothendieck_construction(d)
    j = generate_topology(a, {"b": [["f"]]})
    t = giraud_topology(g, j)
    lift = g.arrow("f", "*<=*", "*")
    assert frozenset({lift}) in O.library_covers(t)[g.obj("b", "*")]


def test_giraud_strictly_inside_existential_on_pow2():
    s, j = pow2_with_base()
    gir = O.library_covers(giraud_topology(s.groth, j))
    ext = O.library_covers(existential_topology(s)[0])
    assert all(gir[x] <= ext[x] for x in gir)
    extra = [(x, sv) for x in ext for sv in ext[x] - gir[x]]
    assert extra
    # the cocartesian arrow ({0},{0}) → ({0,1},{0}) covers existentially; its base arrow alone does not cover {0,1}
    e = s.groth.obj("{0,1}", "{0}")
    sv = O.generated(s.groth.total, e, [s.groth.arrow("{0}<={0,1}", "{0}<={0}", "{0}")])
    assert sv in ext[e] and sv not in gir[e]


def test_tau_examples():
    g = pow2().groth
    tau, rep = tau_and_adjunction(g)
    assert rep.passed
    assert tau.obj_map == {X: g.obj(X, X) for X in g.indexed.base.objects}
    tau, rep = tau_and_adjunction(grothendieck_construction(over_one(sier())))
    assert tau.ob("*") == "(*,top)" and rep.passed
    with pytest.raises(PreconditionError):
        tau_and_adjunction(grothendieck_construction(over_one(FiniteFrame(["x", "y"], []))))


def pow2_inclusion():
    s = pow2()
    d = s.indexed
    B = d.base
    small = {X: FiniteFrame(sorted({"{}", X}), [("{}", X)]) for X in B.objects}
    maps = {f: {"{}": "{}", Y: X} for f, (X, Y) in B.arrows.items()}
    q = IndexedCat.of_posets(B, small, maps, name="SMALL")
    comps = {X: FinFunctor.from_object_map(small[X].category, d.fibres[X], {e: e for e in small[X].elements})
             for X in B.objects}
    return q, s, comps


def test_fibration_morphisms():
    g = pow2().groth
    ident = total_functor(g, g, {c: FinFunctor.identity(g.indexed.fibres[c]) for c in g.indexed.base.objects})
    assert fibration_morphism_report(ident).passed
    q, s, comps = pow2_inclusion()
    assert validate_indexed(q).passed
    m = total_functor(grothendieck_construction(q), s.groth, comps)
    assert fibration_morphism_report(m).passed
    sg = grothendieck_construction(over_one(sier()))
    top_to_u = FinFunctor.from_object_map(sg.indexed.fibres["*"], sg.indexed.fibres["*"],
                                          {"bot": "bot", "u": "u", "top": "u"})
    rep = fibration_morphism_report(total_functor(sg, sg, {"*": top_to_u}))
    assert {c.name for c in rep.failures} == {"terminal-preserved"}
    assert rep["terminal-preserved"].witness == {"image": "(*,u)", "terminal": "(*,top)"}


def test_cocartesian_vertical_factorization_examples():
    s = pow2()
    g = s.groth
    vert = g.arrow("{0,1}<={0,1}", "{0}<={0,1}", "{0,1}")
    coc, v = factor_cocartesian_vertical(s, vert)
    assert g.arrow_data[coc][0] == "{0,1}<={0,1}" and g.total.dom(coc) == g.total.cod(coc)
    a = g.arrow("{0}<={0,1}", "{0}<={0}", "{0,1}")
    coc, v = factor_cocartesian_vertical(s, a)
    assert g.total.cod(coc) == g.obj("{0,1}", "{0}")
    assert g.total.comp(v, coc) == a
    cart = g.arrow("{0}<={0,1}", "{0}<={0}", "{0}")
    assert is_cartesian(g, cart)
    coc, v = factor_cocartesian_vertical(s, cart)
    # ∃ of the pulled-back element is the counit's domain: ∃_f f*({0}) = {0}
    assert g.total.cod(coc) == g.obj("{0,1}", "{0}")
    assert g.arrow_data[v][1] == "{0}<={0}"


def test_existential_topology_over_one_is_the_canonical_topology():
    s = sier()
    site = ExistentialSite(over_one(s), {"*": canonical_topology(s)})
    t, rep = existential_topology(site)
    assert validate_topology(t).passed
    g = site.groth
    ren = {o: x for o, (_, x) in g.pairs.items()}
    ext = {ren[x]: {frozenset(g.arrow_data[a][1] for a in sv) for sv in v} for x, v in O.library_covers(t).items()}
    assert ext == O.library_covers(canonical_topology(s))


@given(posets(4))
def test_total_over_one_is_isomorphic_to_the_poset(p):
    g = grothendieck_construction(over_one(p))
    assert len(g.total.objects) == len(p.elements)
    assert len(g.total.arrows) == len(O.leq_of(p))
    assert validate_category(g.total).passed


@given(sited_preorders(3))
def test_giraud_is_a_topology_and_projection_lifts(data):
    c, fams = data
    pt = FiniteFrame(["*"], [])
    d = IndexedCat.of_posets(c, {x: pt for x in c.objects}, {a: {"*": "*"} for a in c.arrows})
    g = grothendieck_construction(d)
    j = generate_topology(c, fams)
    t = giraud_topology(g, j)
    assert validate_topology(t).passed
    # with point fibres the total is the base and the Giraud topology is J itself
    ren = {g.obj(x, "*"): x for x in c.objects}
    rn = {a: f for a, (f, _, _) in g.arrow_data.items()}
    got = {ren[x]: {frozenset(rn[a] for a in sv) for sv in v} for x, v in O.library_covers(t).items()}
    assert got == O.library_covers(j)


def test_identity_transitions_are_strict():
    s = sier()
    a = arrow()
    d = IndexedCat.of_posets(a, {"a": s, "b": s}, {"f": {x: x for x in s.elements}})
    assert validate_indexed(d).passed
    assert isinstance(d.base, FinCategory)

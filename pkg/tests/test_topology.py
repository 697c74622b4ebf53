from hypothesis import given, strategies as st

import oracle as O
from strategies import coverages, explicit, parallel_categories, preorder_categories, sited_preorders
from sitecheck.cat import FinFunctor
from sitecheck.existential import existential_topology
from sitecheck.fixtures import arrow, one, p2, pow2_with_base
from sitecheck.frames import canonical_topology
from sitecheck.topology import (
    Sieve,
    Topology,
    close_sieve,
    comorphism_report,
    enumerate_sieves,
    generate_topology,
    site_morphism_report,
    trivial_topology,
    validate_topology,
)


def failed(rep):
    return {c.name for c in rep.failures}


def arrows(c, s):
    return set(s.arrows(c))


def test_sieve_counts():
    assert len(enumerate_sieves(one(), "*")) == 2
    a = arrow()
    assert sorted(sorted(arrows(a, s)) for s in enumerate_sieves(a, "b")) == [[], ["f"], ["f", "id_b"]]
    assert len(enumerate_sieves(p2().category, "{0,1}")) == 6


def test_closure_examples():
    P = p2().category
    k = canonical_topology(p2())
    top = Sieve("{0}", P.max_bits("{0}"))
    assert close_sieve(k, top) == top
    # the sieve with domains {∅, {0}} on {0} contains the identity, so it is already maximal
    s = Sieve("{0}", P.generated_bits("{0}", ["{}<={0}", "{0}<={0}"]))
    assert close_sieve(k, s).bits == P.max_bits("{0}")
    bottom_only = Sieve("{0}", P.generated_bits("{0}", ["{}<={0}"]))
    assert close_sieve(k, bottom_only) == bottom_only
    o = one()
    assert close_sieve(trivial_topology(o), Sieve("*", 0)).bits == 0


def test_generation_examples():
    a = arrow()
    assert validate_topology(generate_topology(a, {})).passed
    assert O.library_covers(generate_topology(a, {})) == {x: {O.maximal(a, x)} for x in a.objects}
    t = generate_topology(a, {"b": [["f"]]})
    covers = O.library_covers(t)
    assert covers["b"] == {frozenset({"f"}), frozenset({"f", "id_b"})}
    assert covers["a"] == {frozenset({"id_a"})}
    # the only non-maximal cover is {f}; its pullback along f is the maximal sieve on a
    assert sum(len(v) for v in covers.values()) - len(a.objects) == 1


def test_proper_union_coverage_on_p2_generates_the_canonical_topology():
    f = p2()
    P = f.category
    def members(name):
        return set(name.strip("{}").split(",")) - {""}

    fams = {}
    for X in P.objects:
        proper = [a for a in P.into(X) if P.dom(a) != X]
        if set().union(*(members(P.dom(a)) for a in proper)) == members(X):
            fams[X] = [proper]
    t = generate_topology(P, fams)
    assert O.library_covers(t) == O.library_covers(canonical_topology(f))
    assert validate_topology(t).passed


def test_constructed_negative_on_arrow():
    a = arrow()
    cov = {"a": {a.max_bits("a")}, "b": {a.max_bits("b"), a.generated_bits("b", ["f"])}}
    assert validate_topology(Topology(a, cov)).passed
    cov["a"] = set()
    assert "maximal" in failed(validate_topology(Topology(a, cov)))


def test_site_morphism_examples():
    f = p2()
    k = canonical_topology(f)
    o = one()
    P = f.category
    ident = site_morphism_report(FinFunctor.identity(P), k, k)
    assert ident.passed
    top = site_morphism_report(FinFunctor.from_object_map(o, P, {"*": "{0,1}"}), trivial_topology(o), k)
    assert top["cover-preserving"].ok and top["covering-flat"].ok
    zero = site_morphism_report(FinFunctor.from_object_map(o, P, {"*": "{0}"}), trivial_topology(o), k)
    assert not zero["covering-flat"].ok
    assert zero["covering-flat"].witness["vertex"] == "{1}"
    assert zero["covering-flat"].witness["factoring_sieve"]["arrows"] == ["{}<={1}"]


def test_comorphism_examples():
    a, o = arrow(), one()
    assert comorphism_report(FinFunctor.identity(a), trivial_topology(a), trivial_topology(a)).passed
    collapse = FinFunctor.from_object_map(a, o, {"a": "*", "b": "*"})
    rep = comorphism_report(collapse, trivial_topology(a), trivial_topology(o))
    assert rep["cover-lifting"].ok
    assert not rep["cover-reflecting"].ok
    assert rep["cover-reflecting"].witness == {"arrows": ["f"], "object": "b"}


def test_projection_of_pow2_lifts_covers():
    s, j = pow2_with_base()
    t, _ = existential_topology(s)
    assert comorphism_report(s.groth.projection, t, j)["cover-lifting"].ok


@given(sited_preorders())
def test_generation_matches_naive_saturation(data):
    c, fams = data
    t = generate_topology(c, fams)
    assert O.library_covers(t) == O.generate(c, fams)
    assert validate_topology(t).passed


@given(st.one_of(preorder_categories(4), parallel_categories()).flatmap(lambda c: st.tuples(st.just(c), coverages(c))))
def test_validate_agrees_with_axiom_oracle(data):
    c, fams = data
    t = explicit(c, fams)
    rep = validate_topology(t)
    assert failed(rep) == O.axiom_failures(c, O.library_covers(t))


@given(sited_preorders())
def test_closure_is_idempotent_and_matches_oracle(data):
    c, fams = data
    t = generate_topology(c, fams)
    covers = O.library_covers(t)
    for x in c.objects:
        for s in enumerate_sieves(c, x):
            cl = close_sieve(t, s)
            assert arrows(c, cl) == set(O.closure(c, covers, x, frozenset(s.arrows(c))))
            assert close_sieve(t, cl) == cl
            assert (s.bits & ~cl.bits) == 0


@given(sited_preorders())
def test_identity_is_a_morphism_and_comorphism(data):
    c, fams = data
    t = generate_topology(c, fams)
    ident = FinFunctor.identity(c)
    assert site_morphism_report(ident, t, t).passed
    assert comorphism_report(ident, t, t).passed

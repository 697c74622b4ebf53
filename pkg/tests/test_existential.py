import pytest
from hypothesis import given, strategies as st

import oracle as O
from sitecheck.bundle import load_bundle
from sitecheck.cat import FinFunctor
from sitecheck.cli import BUNDLE_DIR
from sitecheck.existential import (
    AdjointError,
    ExistentialSite,
    check_coorthogonal_generation,
    check_existential_morphism,
    check_relative_bc,
    check_relative_frobenius,
    compute_adjoints,
    existential_site_report,
    existential_topology,
)
from sitecheck.fibred import IndexedCat, total_functor
from sitecheck.fixtures import arrow, one, pow2, pow2_with_base, sier
from sitecheck.frames import canonical_topology
from sitecheck.random_sites import random_preorder_site
from sitecheck.report import InputError, Status
from sitecheck.topology import trivial_topology, validate_topology
from test_fibred import pow2_inclusion

seeds = st.integers(0, 10**6)


def bundle(name):
    return load_bundle(f"{BUNDLE_DIR}/{name}.site")


def failed(rep):
    return {c.name for c in rep.failures}


def test_pow2_exists_is_direct_image():
    d = pow2().indexed
    adj = compute_adjoints(d)
    for f, (X, Y) in d.base.arrows.items():
        assert {x: adj.ex(f, x) for x in d.posets[X].elements} == {x: x for x in d.posets[X].elements}
    assert O.oracle_exists(d) == {f: {x: adj.ex(f, x) for x in d.posets[X].elements}
                                  for f, (X, _) in d.base.arrows.items()}


def test_identity_transitions_have_identity_adjoints():
    s = sier()
    d = IndexedCat.of_posets(arrow(), {"a": s, "b": s}, {"f": {x: x for x in s.elements}})
    adj = compute_adjoints(d)
    assert {x: adj.ex("f", x) for x in s.elements} == {x: x for x in s.elements}


def test_non_monotone_transition_is_input_error():
    s = sier()
    with pytest.raises(InputError):
        IndexedCat.of_posets(arrow(), {"a": s, "b": s}, {"f": {"bot": "top", "u": "bot", "top": "top"}})


def test_non_adjoint_table_is_rejected():
    b = bundle("pow2-nonadjoint")
    with pytest.raises(AdjointError):
        b.site("POW2-EX")


def test_relative_conditions_on_fixtures():
    s = pow2()
    assert check_relative_bc(s).passed and check_relative_frobenius(s).passed
    f = sier()
    o = ExistentialSite(IndexedCat.of_posets(one(), {"*": f}, {}), {"*": trivial_topology(f.category)})
    assert check_relative_bc(o).passed and check_relative_frobenius(o).passed
    bc = bundle("pow2-bc-broken").site("POW2-BC")
    rep = check_relative_bc(bc)
    assert failed(rep) == {"relative-bc"}
    assert rep["relative-bc"].witness is not None
    frob = bundle("arrow-frobenius-broken").site("FROB")
    rep = check_relative_frobenius(frob)
    assert failed(rep) == {"relative-frobenius"}
    assert {"arrow", "element"} <= set(rep["relative-frobenius"].witness)


def test_existential_covers_on_pow2_are_epimorphic_families():
    s = pow2()
    t, rep = existential_topology(s)
    assert rep.passed
    g = s.groth
    members = {x: set(x.strip("{}").split(",")) - {""} for x in s.base.objects}
    for e, covers in O.library_covers(t).items():
        c, x = g.pairs[e]
        for sv in O.sieves(g.total, e):
            images = set().union(*(members[g.indexed.fibres[g.arrow_data[a][0].split("<=")[0]].dom(g.arrow_data[a][1])]
                                   for a in sv)) if sv else set()
            assert (sv in covers) == (images == members[x])


def test_frobenius_broken_rule_is_not_a_topology():
    t, rep = existential_topology(bundle("arrow-frobenius-broken").site("FROB"))
    assert not validate_topology(t).passed
    assert rep["existential-biconditional"].ok and rep["existential-characterization"].ok


def test_existential_site_examples():
    s, j = pow2_with_base()
    rep = existential_site_report(s, j)
    for name in ("open", "reflecting-linearization", "j-reflecting", "giraud-contained"):
        assert rep[name].ok
    f = sier()
    o = ExistentialSite(IndexedCat.of_posets(one(), {"*": f}, {}), {"*": trivial_topology(f.category)})
    rep = existential_site_report(o, trivial_topology(o.base))
    assert rep["open"].ok and rep["giraud-contained"].ok
    b = bundle("arrow-collapse")
    rep = existential_site_report(b.site("COLLAPSE"), b.base_topology("COLLAPSE"))
    assert failed(rep) == {"j-reflecting", "prestack", "giraud-contained"}
    assert rep["j-reflecting"].witness is not None


def test_existential_morphisms():
    s = pow2()
    g = s.groth
    ident = total_functor(g, g, {c: FinFunctor.identity(g.indexed.fibres[c])
                                 for c in s.base.objects})
    assert check_existential_morphism(ident, s, s).passed
    q, big, comps = pow2_inclusion()
    small = ExistentialSite(q, {c: canonical_topology(q.posets[c]) for c in q.base.objects})
    m = total_functor(small.groth, big.groth, comps)
    rep = check_existential_morphism(m, small, big)
    # ∃ along {0} ⊆ {0,1} is {0,1} in the small fibre but {0} in P({0,1})
    assert failed(rep) >= {"exists-squares"}
    assert rep["exists-squares"].witness["arrow"] == "{0}<={0,1}"


def test_coorthogonal_generation_examples():
    s = pow2()
    t, _ = existential_topology(s)
    assert check_coorthogonal_generation(s, t).passed
    f = sier()
    o = ExistentialSite(IndexedCat.of_posets(one(), {"*": f}, {}), {"*": canonical_topology(f)})
    assert check_coorthogonal_generation(o, existential_topology(o)[0]).passed
    rep = check_coorthogonal_generation(s, t, include_cocartesian=False)
    assert failed(rep) == {"generated-equals-existential"}
    assert rep["generated-equals-existential"].witness is not None


@given(seeds)
def test_existential_rule_matches_oracle(seed):
    inst = random_preorder_site(seed)
    s = inst.site
    t, rep = existential_topology(s)
    assert O.library_covers(t) == O.existential_covers(s, s.groth)
    assert not rep.bugs


@given(seeds)
def test_characterization_with_openness(seed):
    s = random_preorder_site(seed).site
    t, rep = existential_topology(s)
    is_top = validate_topology(t).passed
    bc, frob = check_relative_bc(s)["relative-bc"].ok, check_relative_frobenius(s)["relative-frobenius"].ok
    opn = existential_site_report(s, trivial_topology(s.base))["open"].ok
    assert is_top == (bc and frob and opn)
    assert rep["existential-characterization"].ok


@given(seeds)
def test_implications_hold(seed):
    inst = random_preorder_site(seed)
    rep = existential_site_report(inst.site, inst.base_topology)
    assert rep["implication-linearization"].status != Status.FAIL
    assert rep["implication-giraud"].status != Status.FAIL
    if rep["prestack"].ok and rep["reflecting-linearization"].ok:
        assert rep["j-reflecting"].ok
    if rep["j-reflecting"].ok:
        assert rep["giraud-contained"].ok


@given(seeds)
def test_oracle_adjoints_agree(seed):
    s = random_preorder_site(seed).site
    d = s.indexed
    ex = O.oracle_exists(d)
    for f, (c1, _) in d.base.arrows.items():
        assert ex[f] == {x: s.ex(f, x) for x in d.posets[c1].elements}


@given(seeds)
def test_generation_from_cocartesian_and_vertical(seed):
    s = random_preorder_site(seed).site
    t, rep = existential_topology(s)
    if validate_topology(t).passed:
        r = check_coorthogonal_generation(s, t)
        assert r["generated-equals-existential"].status in (Status.PASS, Status.INCONCLUSIVE)

import pytest
from hypothesis import given

import oracle as O
from strategies import sited_preorders
from sitecheck.bundle import load_bundle
from sitecheck.cat import FinFunctor
from sitecheck.cli import BUNDLE_DIR
from sitecheck.factorization import closed_sieve_locale, factorization_report
from sitecheck.fixtures import arrow, p2
from sitecheck.frames import FiniteFrame, canonical_topology, frame_isomorphism
from sitecheck.report import PreconditionError
from sitecheck.topology import generate_topology, trivial_topology


def pick():
    b = load_bundle(f"{BUNDLE_DIR}/p2-pick-zero.site")
    return b, b.topology("ONE-TRIVIAL"), b.topology("P2-CANONICAL")


def down(f, x):
    return FiniteFrame([y for y in f.elements if f.leq(y, x)],
                       [(a, b) for a in f.elements for b in f.elements if f.leq(a, x) and f.leq(b, x) and f.leq(a, b)])


def test_picking_top_gives_p2():
    b, j, k = pick()
    csl = closed_sieve_locale(b.functor("PICK-TOP"), j, k)
    assert frame_isomorphism(csl.locale.frames["*"], p2()) is not None
    rep = factorization_report(b.functor("PICK-TOP"), j, k)
    assert rep.passed


def test_picking_zero_is_a_precondition_failure():
    b, j, k = pick()
    with pytest.raises(PreconditionError):
        closed_sieve_locale(b.functor("PICK-ZERO"), j, k)
    with pytest.raises(PreconditionError):
        factorization_report(b.functor("PICK-ZERO"), j, k)


def test_identity_on_p2_gives_principal_downsets():
    f = p2()
    k = canonical_topology(f)
    ident = FinFunctor.identity(f.category)
    csl = closed_sieve_locale(ident, k, k)
    for x in f.elements:
        assert frame_isomorphism(csl.locale.frames[x], down(f, x)) is not None
    rep = factorization_report(ident, k, k)
    for name in ("inclusion-cover-preserving", "inclusion-covering-flat", "inclusion-right-adjoint"):
        assert rep[name].ok
    assert not [c for c in rep.failures if c.name.startswith("locale-")]


def test_identity_on_arrow_keeps_every_sieve():
    a = arrow()
    t = trivial_topology(a)
    csl = closed_sieve_locale(FinFunctor.identity(a), t, t)
    assert len(csl.locale.frames["b"].elements) == 3
    assert len(csl.locale.frames["a"].elements) == 2


@given(sited_preorders(3))
def test_exists_is_left_adjoint_to_pullback(data):
    c, fams = data
    k = generate_topology(c, fams)
    csl = closed_sieve_locale(FinFunctor.identity(c), k, k)
    loc = csl.locale
    for f, (x, y) in c.arrows.items():
        Fx, Fy = loc.frames[x], loc.frames[y]
        for s in Fx.elements:
            for t in Fy.elements:
                assert Fx.leq(s, loc.transitions[f][t]) == Fy.leq(loc.exists[f][s], t)
    # closed sieves agree with the brute-force closure
    covers = O.library_covers(k)
    for x in c.objects:
        want = {sv for sv in O.sieves(c, x) if O.closure(c, covers, x, sv) == sv}
        got = {frozenset(c.bits_to_arrows(x, b)) for b in csl.decode[x].values()}
        assert got == want

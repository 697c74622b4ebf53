import pytest
from hypothesis import given

import oracle as O
from strategies import parallel_categories, preorder_categories
from sitecheck.cat import (
    PAIR_SHAPE,
    FinCategory,
    FinFunctor,
    build_comma,
    check_functor,
    compute_limit,
    cospan,
    diagram,
    EMPTY_SHAPE,
    has_finite_limits,
    terminal,
    validate_category,
)
from sitecheck.fixtures import arrow, broken_arrow, one, p2
from sitecheck.report import InputError


def failed(rep):
    return {c.name for c in rep.failures}


def test_one_and_arrow_validate():
    assert validate_category(one()).passed
    a = arrow()
    assert a._comp[("f", "id_a")] == "f"
    assert validate_category(a).passed


def test_broken_identity_composite_reports_the_pair():
    rep = validate_category(broken_arrow())
    assert failed(rep) == {"composition-table"}
    assert rep["composition-table"].witness["pair"] == ["f", "id_a"]


def test_dangling_arrow_is_input_error():
    with pytest.raises(InputError):
        FinCategory(["a"], {"f": ("a", "b")}, {"a": "f"}, {})


def test_functor_examples():
    assert check_functor(FinFunctor.identity(one())).passed
    a, o = arrow(), one()
    collapse = FinFunctor(a, o, {"a": "*", "b": "*"}, {"f": "id_*", "id_a": "id_*", "id_b": "id_*"})
    assert check_functor(collapse).passed
    swap = FinFunctor(a, a, {"a": "b", "b": "a"}, {"f": "f", "id_a": "id_b", "id_b": "id_a"})
    rep = check_functor(swap)
    assert "endpoints" in failed(rep)
    assert rep["endpoints"].witness["arrow"] == "f"


def test_limits_in_p2():
    assert compute_limit(diagram(one(), EMPTY_SHAPE, {}, {})).apex == "*"
    P = p2().category
    lim = compute_limit(cospan(P, "{0}<={0,1}", "{1}<={0,1}"))
    assert lim.apex == "{}"
    assert terminal(P) == "{0,1}"
    assert has_finite_limits(P)


def test_product_absent_in_discrete_pair():
    D = FinCategory.discrete(["x", "y"])
    assert compute_limit(diagram(D, PAIR_SHAPE, {"0": "x", "1": "y"}, {})) is None
    assert terminal(D) is None


def test_comma_examples():
    o = one()
    c = build_comma(FinFunctor.identity(o), "*").category
    assert (len(c.objects), len(c.arrows)) == (1, 1)
    P = p2().category
    assert len(build_comma(FinFunctor.identity(P), "{0,1}").category.objects) == 4
    a = arrow()
    collapse = FinFunctor.from_object_map(a, o, {"a": "*", "b": "*"})
    c = build_comma(collapse, "*").category
    assert (len(c.objects), len(c.arrows)) == (2, 3)
    assert validate_category(c).passed


@given(preorder_categories())
def test_preorders_are_categories(c):
    assert validate_category(c).passed
    assert check_functor(FinFunctor.identity(c)).passed


@given(parallel_categories())
def test_parallel_categories_validate(c):
    assert validate_category(c).passed
    assert c.is_thin == (len(c.hom("s", "t")) <= 1)


@given(preorder_categories())
def test_pullbacks_in_a_preorder_are_greatest_lower_bounds(c):
    for x in c.objects:
        into = list(c.into(x))
        for f in into:
            for g in into:
                lim = compute_limit(cospan(c, f, g))
                lower = [z for z in c.objects if c.leq(z, c.dom(f)) and c.leq(z, c.dom(g))]
                greatest = [z for z in lower if all(c.leq(w, z) for w in lower)]
                if lim is None:
                    assert not greatest
                else:
                    assert c.isomorphic(lim.apex, greatest[0])


@given(preorder_categories())
def test_comma_over_identity_is_the_down_set(c):
    for x in c.objects:
        comma = build_comma(FinFunctor.identity(c), x)
        assert len(comma.category.objects) == len(O.arrows_into(c, x))
        assert check_functor(comma.projection).passed

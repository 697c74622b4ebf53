"""Hypothesis strategies for small finite structures."""

from hypothesis import strategies as st

from sitecheck.cat import FinCategory
from sitecheck.frames import FiniteFrame
from sitecheck.topology import topology_from_families


@st.composite
def posets(draw, max_size=5):
    n = draw(st.integers(1, max_size))
    names = [f"p{i}" for i in range(n)]
    pairs = [(names[i], names[j]) for i in range(n) for j in range(i + 1, n)]
    leq = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return FiniteFrame(names, leq)


@st.composite
def preorder_categories(draw, max_size=5):
    return draw(posets(max_size)).category


@st.composite
def parallel_categories(draw):
    """Two objects with ``k`` parallel arrows: a non-thin category."""
    k = draw(st.integers(0, 3))
    return FinCategory.from_generators(["s", "t"], {f"u{i}": ("s", "t") for i in range(k)}, name=f"PAR{k}")


@st.composite
def coverages(draw, c, max_families=3):
    """Random families of arrows into random objects."""
    fams = {}
    for _ in range(draw(st.integers(0, max_families))):
        x = draw(st.sampled_from(c.objects))
        into = list(c.into(x))
        fam = draw(st.lists(st.sampled_from(into), unique=True, max_size=len(into)))
        fams.setdefault(x, []).append(fam)
    return fams


@st.composite
def sited_preorders(draw, max_size=4):
    c = draw(preorder_categories(max_size))
    return c, draw(coverages(c))


def explicit(c, fams):
    return topology_from_families(c, fams)

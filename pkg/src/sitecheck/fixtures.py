"""The shipped fixture corpus: small sites with known behaviour, and mutated negatives."""

from __future__ import annotations

import itertools
from typing import Iterable

from .cat import FinCategory
from .existential import ExistentialSite
from .fibred import IndexedCat
from .frames import FiniteFrame, canonical_topology
from .topology import Topology


def set_name(s: Iterable) -> str:
    return "{" + ",".join(str(v) for v in sorted(s)) + "}"


def subsets(xs: Iterable) -> list[frozenset]:
    xs = sorted(xs)
    return [frozenset(c) for r in range(len(xs) + 1) for c in itertools.combinations(xs, r)]


def powerset_frame(xs: Iterable, name: str = "") -> FiniteFrame:
    return FiniteFrame.from_sets({set_name(s): s for s in subsets(xs)}, name=name or f"P{set_name(xs)}")


def one() -> FinCategory:
    """The terminal category: object ``*``."""
    return FinCategory.from_generators(["*"], {}, name="ONE")


def arrow() -> FinCategory:
    """``f : a → b``."""
    return FinCategory.from_generators(["a", "b"], {"f": ("a", "b")}, name="ARROW")


def sier() -> FiniteFrame:
    """The three-element chain ``bot < u < top``."""
    return FiniteFrame.chain(["bot", "u", "top"], name="SIER")


def chain2() -> FiniteFrame:
    return FiniteFrame.chain(["0", "1"], name="CHAIN2")


def p2() -> FiniteFrame:
    """Subsets of ``{0, 1}`` under inclusion."""
    return powerset_frame([0, 1], name="P2")


def m3() -> FiniteFrame:
    """The diamond: non-distributive five-element lattice."""
    return FiniteFrame(
        ["0", "a", "b", "c", "1"],
        [("0", "a"), ("0", "b"), ("0", "c"), ("a", "1"), ("b", "1"), ("c", "1")],
        name="M3",
    )


def sier_cover_topology(s: FiniteFrame | None = None) -> Topology:
    """On SIER: ``u`` alone covers ``top`` (plus maximal sieves)."""
    s = s or sier()
    c = s.category
    covers = {x: {c.max_bits(x)} for x in c.objects}
    covers["top"].add(c.generated_bits("top", ["u<=top"]))
    return Topology(c, covers, name="u-covers-top")


def broken_arrow() -> FinCategory:
    """ARROW with ``f ∘ id_a`` redirected to ``id_b`` (bypasses construction checks)."""
    c = arrow()
    c._comp[("f", "id_a")] = "id_b"
    return c


# -- fibred fixtures -----------------------------------------------------------------


def _powerset_indexed(xs=(0, 1), name: str = "POW2") -> tuple[IndexedCat, FiniteFrame]:
    base_frame = powerset_frame(xs, name="P2")
    base = base_frame.category
    posets = {}
    for X in base.objects:
        elems = next(s for s in subsets(xs) if set_name(s) == X)
        posets[X] = powerset_frame(elems, name=f"P{X}")
    maps = {}
    named = {set_name(s): s for s in subsets(xs)}
    for a, (X, Y) in base.arrows.items():
        maps[a] = {set_name(S): set_name(S & named[X]) for S in subsets(named[Y])}
    return IndexedCat.of_posets(base, posets, maps, name=name), base_frame


def pow2_with_base() -> tuple[ExistentialSite, Topology]:
    """Base P2 with its canonical topology; over ``X`` the frame of subsets of
    ``X``; transitions intersect, so ``∃`` along an inclusion is the inclusion."""
    d, bf = _powerset_indexed()
    tops = {c: canonical_topology(d.posets[c]) for c in d.base.objects}
    return ExistentialSite(d, tops, name="POW2"), canonical_topology(bf)


def pow2() -> ExistentialSite:
    return pow2_with_base()[0]


def frame_over_one(f: FiniteFrame, name: str = "") -> ExistentialSite:
    base = one()
    d = IndexedCat.of_posets(base, {"*": f}, {}, name=name or f"{f.name}/ONE")
    return ExistentialSite(d, {"*": canonical_topology(f)})


def fpre() -> tuple[IndexedCat, Topology]:
    """SIER over ONE with ``u`` covering ``top``, as an indexed preorder with its total topology."""
    s = sier()
    d = IndexedCat.of_posets(one(), {"*": s}, {}, name="FPRE")
    return d, sier_cover_topology(s)

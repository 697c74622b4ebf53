"""Finite frames (finite distributive lattices), their homomorphisms and isomorphisms."""

from __future__ import annotations

from functools import cached_property
from typing import Callable, Iterable, Mapping

from .cat import FinCategory
from .guards import DEFAULT, Guards
from .report import GuardExceeded, InputError, VerificationReport
from .topology import Topology, all_sieve_bits, can_enumerate


class FiniteFrame:
    """A finite poset with lazily computed meet/join tables.

    Nothing here assumes the order is a lattice; ``validate_frame`` decides.
    """

    def __init__(self, elements: Iterable[str], leq: Iterable[tuple[str, str]], name: str = ""):
        self.name = name
        self.elements: tuple[str, ...] = tuple(sorted(set(elements)))
        index = {e: i for i, e in enumerate(self.elements)}
        n = len(self.elements)
        rel = [[i == j for j in range(n)] for i in range(n)]
        for a, b in leq:
            if a not in index or b not in index:
                raise InputError(f"order mentions unknown element {a if a not in index else b!r}")
            rel[index[a]][index[b]] = True
        for k in range(n):
            for i in range(n):
                if rel[i][k]:
                    for j in range(n):
                        if rel[k][j]:
                            rel[i][j] = True
        for i in range(n):
            for j in range(i + 1, n):
                if rel[i][j] and rel[j][i]:
                    raise InputError(
                        f"order is not antisymmetric: {self.elements[i]!r} and {self.elements[j]!r}"
                    )
        self._index = index
        self._rel = rel
        self.up: dict[str, frozenset[str]] = {
            a: frozenset(self.elements[j] for j in range(n) if rel[i][j]) for i, a in enumerate(self.elements)
        }
        self.down: dict[str, frozenset[str]] = {
            a: frozenset(self.elements[j] for j in range(n) if rel[j][i]) for i, a in enumerate(self.elements)
        }

    @classmethod
    def from_sets(cls, sets: Mapping[str, frozenset], name: str = "") -> "FiniteFrame":
        """The inclusion order on named sets."""
        return cls(sets, [(a, b) for a in sets for b in sets if sets[a] <= sets[b]], name=name)

    @classmethod
    def chain(cls, elements: Iterable[str], name: str = "") -> "FiniteFrame":
        elements = list(elements)
        return cls(elements, list(zip(elements, elements[1:])), name=name)

    def leq(self, a: str, b: str) -> bool:
        return self._rel[self._index[a]][self._index[b]]

    def __contains__(self, a: str) -> bool:
        return a in self._index

    def __len__(self) -> int:
        return len(self.elements)

    def order_pairs(self) -> list[tuple[str, str]]:
        return [(a, b) for a in self.elements for b in self.elements if self.leq(a, b)]

    def cover_pairs(self) -> list[tuple[str, str]]:
        """The Hasse diagram."""
        out = []
        for a in self.elements:
            for b in self.up[a]:
                if b != a and not any(c not in (a, b) and self.leq(c, b) for c in self.up[a]):
                    out.append((a, b))
        return sorted(out)

    def _sup(self, xs: Iterable[str]) -> str | None:
        ubs = set(self.elements)
        for x in xs:
            ubs &= self.up[x]
        least = [u for u in ubs if all(self.leq(u, v) for v in ubs)]
        return least[0] if least else None

    def _inf(self, xs: Iterable[str]) -> str | None:
        lbs = set(self.elements)
        for x in xs:
            lbs &= self.down[x]
        greatest = [u for u in lbs if all(self.leq(v, u) for v in lbs)]
        return greatest[0] if greatest else None

    @cached_property
    def _joins(self) -> dict[tuple[str, str], str | None]:
        return {(a, b): self._sup((a, b)) for a in self.elements for b in self.elements}

    @cached_property
    def _meets(self) -> dict[tuple[str, str], str | None]:
        return {(a, b): self._inf((a, b)) for a in self.elements for b in self.elements}

    def join(self, a: str, b: str) -> str:
        r = self._joins[(a, b)]
        if r is None:
            raise InputError(f"{a!r} and {b!r} have no join in {self.name}")
        return r

    def meet(self, a: str, b: str) -> str:
        r = self._meets[(a, b)]
        if r is None:
            raise InputError(f"{a!r} and {b!r} have no meet in {self.name}")
        return r

    def join_all(self, xs: Iterable[str]) -> str:
        r = self._sup(xs)
        if r is None:
            raise InputError(f"no join in {self.name}")
        return r

    def meet_all(self, xs: Iterable[str]) -> str:
        r = self._inf(xs)
        if r is None:
            raise InputError(f"no meet in {self.name}")
        return r

    @cached_property
    def top(self) -> str:
        return self.meet_all(())

    @cached_property
    def bottom(self) -> str:
        return self.join_all(())

    @cached_property
    def category(self) -> FinCategory:
        return FinCategory.from_preorder(self.elements, self.order_pairs(), name=self.name)

    def __repr__(self) -> str:
        return f"FiniteFrame({self.name or '?'}: {len(self.elements)} elements)"


def validate_frame(f: FiniteFrame) -> VerificationReport:
    """Bounds, binary meets and joins, and distributivity over all triples."""
    rep = VerificationReport(f"frame {f.name}")
    rep.add("top", f._inf(()) is not None)
    rep.add("bottom", f._sup(()) is not None)
    bad = next(([a, b] for (a, b), m in f._meets.items() if m is None), None)
    rep.add("meets", bad is None, bad)
    bad = next(([a, b] for (a, b), m in f._joins.items() if m is None), None)
    rep.add("joins", bad is None, bad)
    if not all(c.ok for c in rep.checks):
        rep.add("distributive", False, None, "not a lattice")
        return rep
    bad = None
    for a in f.elements:
        for b in f.elements:
            for c in f.elements:
                lhs = f.meet(a, f.join(b, c))
                rhs = f.join(f.meet(a, b), f.meet(a, c))
                if lhs != rhs:
                    bad = {"triple": [a, b, c], "a∧(b∨c)": lhs, "(a∧b)∨(a∧c)": rhs}
                    break
            if bad:
                break
        if bad:
            break
    rep.add("distributive", bad is None, bad)
    return rep


def is_frame(f: FiniteFrame) -> bool:
    return validate_frame(f).passed


def join_topology(c: FinCategory, join_of: Callable[[Iterable[str]], str], name: str = "canonical", guards: Guards = DEFAULT) -> Topology:
    """On a thin category: a sieve on ``x`` covers iff the join of its domains is ``x``."""

    def pred(x: str, bits: int) -> bool:
        return join_of(c.dom(a) for a in c.bits_to_arrows(x, bits)) == x

    if can_enumerate(c, guards):
        return Topology(c, {x: [b for b in all_sieve_bits(c, x, guards) if pred(x, b)] for x in c.objects}, name=name)
    return Topology(c, predicate=pred, name=name)


def canonical_topology(f: FiniteFrame, guards: Guards = DEFAULT) -> Topology:
    """The canonical topology of a frame: families whose join is the target."""
    return join_topology(f.category, f.join_all, guards=guards)


# -- homomorphisms ---------------------------------------------------------------


def frame_hom_violation(h: Mapping[str, str], a: FiniteFrame, b: FiniteFrame):
    """``None`` if ``h`` preserves finite meets and finite joins, else a witness."""
    if h.get(a.top) != b.top:
        return {"preserves": "top", "image": h.get(a.top)}
    if h.get(a.bottom) != b.bottom:
        return {"preserves": "bottom", "image": h.get(a.bottom)}
    for x in a.elements:
        for y in a.elements:
            if h[a.meet(x, y)] != b.meet(h[x], h[y]):
                return {"preserves": "meet", "pair": [x, y]}
            if h[a.join(x, y)] != b.join(h[x], h[y]):
                return {"preserves": "join", "pair": [x, y]}
    return None


def is_frame_hom(h: Mapping[str, str], a: FiniteFrame, b: FiniteFrame) -> bool:
    return frame_hom_violation(h, a, b) is None


def frame_homs(a: FiniteFrame, b: FiniteFrame, guards: Guards = DEFAULT) -> list[dict[str, str]]:
    """Every frame homomorphism ``a → b``; backtracking over monotone assignments."""
    order = sorted(a.elements, key=lambda x: (len(a.down[x]), x))
    out: list[dict[str, str]] = []
    budget = [guards.search]

    def rec(i: int, h: dict[str, str]):
        budget[0] -= 1
        if budget[0] < 0:
            raise GuardExceeded("search", f"frame homomorphism search {a.name} → {b.name} exceeded the budget")
        if i == len(order):
            if is_frame_hom(h, a, b):
                out.append(dict(h))
            return
        x = order[i]
        for y in b.elements:
            if x == a.top and y != b.top or x == a.bottom and y != b.bottom:
                continue
            if any(not b.leq(y, h[z]) for z in a.up[x] if z in h) or any(
                not b.leq(h[z], y) for z in a.down[x] if z in h
            ):
                continue
            ok = True
            for z in h:
                m = a.meet(x, z)
                if m in h and h[m] != b.meet(y, h[z]):
                    ok = False
                    break
                j = a.join(x, z)
                if j in h and h[j] != b.join(y, h[z]):
                    ok = False
                    break
            if not ok:
                continue
            h[x] = y
            rec(i + 1, h)
            del h[x]

    rec(0, {})
    return out


def frame_isomorphism(a: FiniteFrame, b: FiniteFrame, guards: Guards = DEFAULT) -> dict[str, str] | None:
    """An order isomorphism ``a → b`` (hence a frame isomorphism), or ``None``."""
    if len(a) != len(b):
        return None

    def sig(f: FiniteFrame, x: str) -> tuple[int, int]:
        return (len(f.down[x]), len(f.up[x]))

    if sorted(sig(a, x) for x in a.elements) != sorted(sig(b, x) for x in b.elements):
        return None
    order = sorted(a.elements, key=lambda x: (len(a.down[x]), x))
    budget = [guards.search]

    def rec(i: int, h: dict[str, str], used: set[str]):
        budget[0] -= 1
        if budget[0] < 0:
            raise GuardExceeded("search", f"isomorphism search {a.name} ≅ {b.name} exceeded the budget")
        if i == len(order):
            return dict(h)
        x = order[i]
        for y in b.elements:
            if y in used or sig(b, y) != sig(a, x):
                continue
            if all(a.leq(z, x) == b.leq(h[z], y) and a.leq(x, z) == b.leq(y, h[z]) for z in h):
                h[x] = y
                used.add(y)
                r = rec(i + 1, h, used)
                if r is not None:
                    return r
                del h[x]
                used.discard(y)
        return None

    return rec(0, {}, set())


def check_isomorphism(h: Mapping[str, str], a: FiniteFrame, b: FiniteFrame) -> bool:
    if sorted(h) != list(a.elements) or sorted(h.values()) != list(b.elements):
        return False
    return all(a.leq(x, y) == b.leq(h[x], h[y]) for x in a.elements for y in a.elements)

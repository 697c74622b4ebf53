"""Finite categories given by explicit tables, functors, limits and comma categories.

Composition is stored as ``compose[(g, f)] = g∘f`` (``g`` after ``f``), defined
exactly when ``cod(f) == dom(g)``.  Identifiers are strings; whenever a choice
has to be made (limit apex, witnesses) the lexicographically smallest
identifier wins, so every result is reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .report import InputError, VerificationReport


class FinCategory:
    """A finite category with on-the-nose composition."""

    def __init__(
        self,
        objects: Iterable[str],
        arrows: Mapping[str, tuple[str, str]],
        identities: Mapping[str, str],
        compose: Mapping[tuple[str, str], str],
        name: str = "",
    ):
        self.name = name
        self.objects: tuple[str, ...] = tuple(sorted(set(objects)))
        self.arrows: dict[str, tuple[str, str]] = {a: (s, t) for a, (s, t) in sorted(arrows.items())}
        self.identities: dict[str, str] = dict(identities)
        self._comp: dict[tuple[str, str], str] = dict(compose)
        self._check_tables()
        self._pull_cache: dict[str, tuple[int, ...]] = {}

    # -- construction helpers -------------------------------------------------

    @classmethod
    def from_generators(
        cls,
        objects: Iterable[str],
        arrows: Mapping[str, tuple[str, str]],
        compose: Mapping[tuple[str, str], str] = (),
        identities: Mapping[str, str] | None = None,
        name: str = "",
    ) -> "FinCategory":
        """Build a category from non-identity arrows; identity composites are implied."""
        objects = list(objects)
        identities = dict(identities or {})
        all_arrows = dict(arrows)
        for x in objects:
            identities.setdefault(x, f"id_{x}")
            all_arrows[identities[x]] = (x, x)
        comp = dict(compose)
        for a, (s, t) in all_arrows.items():
            comp[(identities[t], a)] = a
            comp[(a, identities[s])] = a
        return cls(objects, all_arrows, identities, comp, name=name)

    @classmethod
    def from_preorder(
        cls, elements: Iterable[str], leq: Iterable[tuple[str, str]], name: str = ""
    ) -> "FinCategory":
        """The thin category of the reflexive-transitive closure of ``leq``.

        The arrow ``x → y`` is named ``"x<=y"``.
        """
        elements = sorted(set(elements))
        index = {e: i for i, e in enumerate(elements)}
        n = len(elements)
        rel = [[i == j for j in range(n)] for i in range(n)]
        for x, y in leq:
            if x not in index or y not in index:
                raise InputError(f"order relation mentions unknown element {x if x not in index else y!r}")
            rel[index[x]][index[y]] = True
        for k in range(n):
            for i in range(n):
                if rel[i][k]:
                    row_k = rel[k]
                    row_i = rel[i]
                    for j in range(n):
                        if row_k[j]:
                            row_i[j] = True
        arrows = {}
        for i, x in enumerate(elements):
            for j, y in enumerate(elements):
                if rel[i][j]:
                    arrows[f"{x}<={y}"] = (x, y)
        comp = {}
        for a, (x, y) in arrows.items():
            for b, (y2, z) in arrows.items():
                if y2 == y:
                    comp[(b, a)] = f"{x}<={z}"
        return cls(elements, arrows, {x: f"{x}<={x}" for x in elements}, comp, name=name)

    @classmethod
    def discrete(cls, objects: Iterable[str], name: str = "") -> "FinCategory":
        return cls.from_generators(objects, {}, name=name)

    def _check_tables(self) -> None:
        objs = set(self.objects)
        for a, (s, t) in self.arrows.items():
            if s not in objs or t not in objs:
                raise InputError(f"arrow {a!r} has dangling endpoint {s if s not in objs else t!r}")
        for x in self.objects:
            if x not in self.identities:
                raise InputError(f"object {x!r} has no identity")
        for x, a in self.identities.items():
            if x not in objs:
                raise InputError(f"identity declared for unknown object {x!r}")
            if a not in self.arrows:
                raise InputError(f"identity {a!r} of {x!r} is not an arrow")
        for (g, f), h in self._comp.items():
            for a in (g, f, h):
                if a not in self.arrows:
                    raise InputError(f"composition table mentions unknown arrow {a!r}")

    # -- basic structure ------------------------------------------------------

    def dom(self, f: str) -> str:
        return self.arrows[f][0]

    def cod(self, f: str) -> str:
        return self.arrows[f][1]

    def id(self, x: str) -> str:
        return self.identities[x]

    def comp(self, g: str, f: str) -> str:
        """``g∘f``."""
        try:
            return self._comp[(g, f)]
        except KeyError:
            raise InputError(f"composite {g}∘{f} is not defined") from None

    def comp_chain(self, *fs: str) -> str:
        """``fs[0]∘fs[1]∘...``."""
        out = fs[-1]
        for g in reversed(fs[:-1]):
            out = self.comp(g, out)
        return out

    @property
    def arrow_ids(self) -> tuple[str, ...]:
        return tuple(self.arrows)

    @cached_property
    def _homs(self) -> dict[tuple[str, str], tuple[str, ...]]:
        homs: dict[tuple[str, str], list[str]] = {}
        for a, st in self.arrows.items():
            homs.setdefault(st, []).append(a)
        return {k: tuple(v) for k, v in homs.items()}

    def hom(self, x: str, y: str) -> tuple[str, ...]:
        return self._homs.get((x, y), ())

    @cached_property
    def _into(self) -> dict[str, tuple[str, ...]]:
        into: dict[str, list[str]] = {x: [] for x in self.objects}
        for a, (_, t) in self.arrows.items():
            into[t].append(a)
        return {x: tuple(v) for x, v in into.items()}

    def into(self, x: str) -> tuple[str, ...]:
        """Arrows with codomain ``x``, in the fixed (lexicographic) sieve-bit order."""
        return self._into[x]

    @cached_property
    def _into_index(self) -> dict[str, dict[str, int]]:
        return {x: {a: i for i, a in enumerate(arrs)} for x, arrs in self._into.items()}

    def into_index(self, x: str) -> dict[str, int]:
        return self._into_index[x]

    def out_of(self, x: str) -> tuple[str, ...]:
        return tuple(a for a, (s, _) in self.arrows.items() if s == x)

    @cached_property
    def is_thin(self) -> bool:
        return all(len(v) == 1 for v in self._homs.values())

    def leq(self, x: str, y: str) -> bool:
        return bool(self.hom(x, y))

    def arrow_between(self, x: str, y: str) -> str:
        """The unique arrow ``x → y`` of a thin category."""
        hs = self.hom(x, y)
        if len(hs) != 1:
            raise InputError(f"expected exactly one arrow {x} → {y}, found {len(hs)}")
        return hs[0]

    def is_iso(self, f: str) -> bool:
        x, y = self.arrows[f]
        return any(
            self._comp.get((g, f)) == self.identities[x] and self._comp.get((f, g)) == self.identities[y]
            for g in self.hom(y, x)
        )

    def isomorphic(self, x: str, y: str) -> bool:
        return x == y or any(self.is_iso(f) for f in self.hom(x, y))

    def __repr__(self) -> str:
        return f"FinCategory({self.name or '?'}: {len(self.objects)} objects, {len(self.arrows)} arrows)"

    # -- sieve support: bitsets over ``into(x)`` ------------------------------

    @cached_property
    def _principal(self) -> dict[str, tuple[int, ...]]:
        out = {}
        for x in self.objects:
            idx = self._into_index[x]
            bits = []
            for f in self._into[x]:
                b = 0
                for h in self._into[self.dom(f)]:
                    b |= 1 << idx[self._comp[(f, h)]]
                bits.append(b)
            out[x] = tuple(bits)
        return out

    def principal(self, x: str) -> tuple[int, ...]:
        """``principal(x)[i]`` is the sieve generated by the i-th arrow into ``x``."""
        return self._principal[x]

    def pull_map(self, f: str) -> tuple[int, ...]:
        """Index in ``into(cod f)`` of ``f∘h`` for each ``h`` in ``into(dom f)``."""
        cached = self._pull_cache.get(f)
        if cached is None:
            idx = self._into_index[self.cod(f)]
            cached = tuple(idx[self._comp[(f, h)]] for h in self._into[self.dom(f)])
            self._pull_cache[f] = cached
        return cached

    def pullback_bits(self, f: str, bits: int) -> int:
        """The sieve ``f*(S) = {h | f∘h ∈ S}`` on ``dom f``."""
        out = 0
        for j, i in enumerate(self.pull_map(f)):
            if bits >> i & 1:
                out |= 1 << j
        return out

    def generated_bits(self, x: str, arrows: Iterable[str]) -> int:
        idx = self._into_index[x]
        pr = self._principal[x]
        b = 0
        for a in arrows:
            if self.cod(a) != x:
                raise InputError(f"arrow {a!r} does not have codomain {x!r}")
            b |= pr[idx[a]]
        return b

    def bits_to_arrows(self, x: str, bits: int) -> tuple[str, ...]:
        return tuple(a for i, a in enumerate(self._into[x]) if bits >> i & 1)

    def max_bits(self, x: str) -> int:
        return (1 << len(self._into[x])) - 1


def iter_bits(bits: int) -> Iterator[int]:
    i = 0
    while bits:
        if bits & 1:
            yield i
        bits >>= 1
        i += 1


# -- functors -------------------------------------------------------------------


class FinFunctor:
    def __init__(
        self,
        source: FinCategory,
        target: FinCategory,
        obj_map: Mapping[str, str],
        arr_map: Mapping[str, str],
        name: str = "",
    ):
        self.source = source
        self.target = target
        self.obj_map = dict(obj_map)
        self.arr_map = dict(arr_map)
        self.name = name

    @classmethod
    def from_object_map(
        cls, source: FinCategory, target: FinCategory, obj_map: Mapping[str, str], name: str = ""
    ) -> "FinFunctor":
        """Functor into a thin category, determined by its object map."""
        arr = {}
        for a, (s, t) in source.arrows.items():
            hs = target.hom(obj_map[s], obj_map[t])
            if not hs:
                raise InputError(f"object map is not monotone: no arrow {obj_map[s]} → {obj_map[t]} for {a!r}")
            arr[a] = hs[0]
        return cls(source, target, obj_map, arr, name=name)

    @classmethod
    def identity(cls, c: FinCategory) -> "FinFunctor":
        return cls(c, c, {x: x for x in c.objects}, {a: a for a in c.arrows}, name=f"id[{c.name}]")

    def ob(self, x: str) -> str:
        return self.obj_map[x]

    def ar(self, f: str) -> str:
        return self.arr_map[f]

    def then(self, other: "FinFunctor") -> "FinFunctor":
        """``other ∘ self``."""
        return FinFunctor(
            self.source,
            other.target,
            {x: other.obj_map[y] for x, y in self.obj_map.items()},
            {a: other.arr_map[b] for a, b in self.arr_map.items()},
            name=f"{other.name}∘{self.name}",
        )

    def same_as(self, other: "FinFunctor") -> bool:
        return self.obj_map == other.obj_map and self.arr_map == other.arr_map

    def __repr__(self) -> str:
        return f"FinFunctor({self.name or '?'}: {self.source.name} → {self.target.name})"


# -- validation -------------------------------------------------------------------


def validate_category(c: FinCategory) -> VerificationReport:
    """Check composability, source/target of composites, identity laws and associativity."""
    rep = VerificationReport(f"category {c.name}")
    comp = c._comp
    bad = None
    for (g, f), h in sorted(comp.items()):
        if c.cod(f) != c.dom(g):
            bad = {"pair": [g, f], "problem": "composite defined on a non-composable pair"}
            break
        if c.arrows[h] != (c.dom(f), c.cod(g)):
            bad = {"pair": [g, f], "problem": f"composite {h} has wrong source/target"}
            break
    if bad is None:
        for f, (s, t) in c.arrows.items():
            for g in c.out_of(t):
                if (g, f) not in comp:
                    bad = {"pair": [g, f], "problem": "composite missing"}
                    break
            if bad:
                break
    rep.add("composition-table", bad is None, bad)
    if bad is not None:
        return rep

    bad = None
    for f, (s, t) in c.arrows.items():
        if comp[(c.id(t), f)] != f:
            bad = {"pair": [c.id(t), f]}
            break
        if comp[(f, c.id(s))] != f:
            bad = {"pair": [f, c.id(s)]}
            break
    rep.add("identity-laws", bad is None, bad)

    bad = None
    for f, (_, t) in c.arrows.items():
        for g in c.out_of(t):
            gf = comp[(g, f)]
            for h in c.out_of(c.cod(g)):
                if comp[(comp[(h, g)], f)] != comp[(h, gf)]:
                    bad = {"triple": [h, g, f]}
                    break
            if bad:
                break
        if bad:
            break
    rep.add("associativity", bad is None, bad)
    return rep


def check_functor(F: FinFunctor) -> VerificationReport:
    S, T = F.source, F.target
    for x in S.objects:
        if x not in F.obj_map:
            raise InputError(f"functor {F.name}: object {x!r} not mapped")
        if F.obj_map[x] not in T.objects:
            raise InputError(f"functor {F.name}: {x!r} mapped to unknown object {F.obj_map[x]!r}")
    for a in S.arrows:
        if a not in F.arr_map:
            raise InputError(f"functor {F.name}: arrow {a!r} not mapped")
        if F.arr_map[a] not in T.arrows:
            raise InputError(f"functor {F.name}: {a!r} mapped to unknown arrow {F.arr_map[a]!r}")

    rep = VerificationReport(f"functor {F.name}")
    bad = None
    for a, (s, t) in S.arrows.items():
        if T.arrows[F.arr_map[a]] != (F.obj_map[s], F.obj_map[t]):
            bad = {"arrow": a, "image": F.arr_map[a], "problem": "source/target mismatch"}
            break
    rep.add("endpoints", bad is None, bad)
    bad = None
    for x in S.objects:
        if F.arr_map[S.id(x)] != T.id(F.obj_map[x]):
            bad = {"object": x}
            break
    rep.add("identities", bad is None, bad)
    bad = None
    if rep["endpoints"].ok:
        for (g, f), h in sorted(S._comp.items()):
            if T.comp(F.arr_map[g], F.arr_map[f]) != F.arr_map[h]:
                bad = {"pair": [g, f]}
                break
    rep.add("composition", bad is None and rep["endpoints"].ok, bad)
    return rep


# -- limits --------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitCone:
    shape: FinCategory
    diagram: FinFunctor
    apex: str
    legs: tuple[tuple[str, str], ...]  # (shape object, arrow) pairs

    def leg(self, j: str) -> str:
        return dict(self.legs)[j]


def _shape(objects: Sequence[str], arrows: Mapping[str, tuple[str, str]], name: str) -> FinCategory:
    return FinCategory.from_generators(objects, arrows, name=name)


EMPTY_SHAPE = _shape([], {}, "empty")
PAIR_SHAPE = _shape(["0", "1"], {}, "pair")
COSPAN_SHAPE = _shape(["0", "1", "2"], {"p": ("0", "2"), "q": ("1", "2")}, "cospan")
PARALLEL_SHAPE = _shape(["0", "1"], {"u": ("0", "1"), "v": ("0", "1")}, "parallel")


def diagram(c: FinCategory, shape: FinCategory, obj_map: Mapping[str, str], arr_map: Mapping[str, str]) -> FinFunctor:
    arr = dict(arr_map)
    for x in shape.objects:
        arr.setdefault(shape.id(x), c.id(obj_map[x]))
    return FinFunctor(shape, c, obj_map, arr, name="diagram")


def cospan(c: FinCategory, f: str, g: str) -> FinFunctor:
    if c.cod(f) != c.cod(g):
        raise InputError(f"{f} and {g} do not form a cospan")
    return diagram(c, COSPAN_SHAPE, {"0": c.dom(f), "1": c.dom(g), "2": c.cod(f)}, {"p": f, "q": g})


def cones(d: FinFunctor, apex: str) -> Iterator[dict[str, str]]:
    """All cones over ``d`` with the given apex, as maps shape-object → leg."""
    shape, c = d.source, d.target
    order = list(shape.objects)
    constraints = [
        (j, k, d.ar(u)) for u, (j, k) in shape.arrows.items() if u != shape.id(j)
    ]

    def rec(i: int, legs: dict[str, str]):
        if i == len(order):
            yield dict(legs)
            return
        j = order[i]
        for leg in c.hom(apex, d.ob(j)):
            legs[j] = leg
            ok = True
            for (a, b, du) in constraints:
                if a in legs and b in legs and (a == j or b == j):
                    if c.comp(du, legs[a]) != legs[b]:
                        ok = False
                        break
            if ok:
                yield from rec(i + 1, legs)
            del legs[j]

    yield from rec(0, {})


def _all_cones(d: FinFunctor) -> list[tuple[str, dict[str, str]]]:
    return [(a, legs) for a in d.target.objects for legs in cones(d, a)]


def mediating_arrows(d: FinFunctor, apex: str, legs: Mapping[str, str], other_apex: str, other_legs: Mapping[str, str]) -> list[str]:
    c = d.target
    return [
        h
        for h in c.hom(other_apex, apex)
        if all(c.comp(legs[j], h) == other_legs[j] for j in d.source.objects)
    ]


def is_limit(d: FinFunctor, apex: str, legs: Mapping[str, str], all_cones=None) -> bool:
    for b, mu in all_cones if all_cones is not None else _all_cones(d):
        if len(mediating_arrows(d, apex, legs, b, mu)) != 1:
            return False
    return True


def compute_limit(d: FinFunctor) -> LimitCone | None:
    """The limit of a finite diagram, or ``None`` when no cone is universal.

    The apex is the smallest object identifier admitting a universal cone; legs
    are then chosen lexicographically.
    """
    every = _all_cones(d)
    for apex, legs in sorted(every, key=lambda al: (al[0], sorted(al[1].items()))):
        if is_limit(d, apex, legs, every):
            return LimitCone(d.source, d, apex, tuple(sorted(legs.items())))
    return None


def terminal(c: FinCategory) -> str | None:
    lim = compute_limit(diagram(c, EMPTY_SHAPE, {}, {}))
    return lim.apex if lim else None


def is_terminal(c: FinCategory, x: str) -> bool:
    return all(len(c.hom(y, x)) == 1 for y in c.objects)


def pullback(c: FinCategory, f: str, g: str) -> LimitCone | None:
    return compute_limit(cospan(c, f, g))


def has_finite_limits(c: FinCategory) -> bool:
    """Terminal object plus all pullbacks."""
    if terminal(c) is None:
        return False
    return all(
        pullback(c, f, g) is not None
        for x in c.objects
        for f, g in itertools.combinations_with_replacement(c.into(x), 2)
    )


# -- comma categories -------------------------------------------------------------


@dataclass
class Comma:
    category: FinCategory
    projection: FinFunctor
    pairs: dict[str, tuple[str, str]]          # object id -> (source object, arrow p(d) → c)
    arrow_pairs: dict[str, tuple[str, str]]    # arrow id -> (source arrow, target's structure arrow)
    ids: dict[tuple[str, str], str]


def build_comma(p: FinFunctor, c: str) -> Comma:
    """The comma category ``(p ↓ c)`` with its projection to the source of ``p``."""
    S, T = p.source, p.target
    if c not in T.objects:
        raise InputError(f"{c!r} is not an object of {T.name}")
    pairs: dict[str, tuple[str, str]] = {}
    ids: dict[tuple[str, str], str] = {}
    for d in S.objects:
        for u in T.hom(p.ob(d), c):
            oid = f"({d},{u})"
            pairs[oid] = (d, u)
            ids[(d, u)] = oid
    arrows: dict[str, tuple[str, str]] = {}
    arrow_pairs: dict[str, tuple[str, str]] = {}
    arrow_ids: dict[tuple[str, str], str] = {}
    for g, (d, d2) in S.arrows.items():
        for u2 in T.hom(p.ob(d2), c):
            u = T.comp(u2, p.ar(g))
            aid = f"({g},{u2})"
            arrows[aid] = (ids[(d, u)], ids[(d2, u2)])
            arrow_pairs[aid] = (g, u2)
            arrow_ids[(g, u2)] = aid
    identities = {oid: arrow_ids[(S.id(d), u)] for oid, (d, u) in pairs.items()}
    comp = {}
    for a1, (g1, u1) in arrow_pairs.items():
        for a2, (g2, u2) in arrow_pairs.items():
            if arrows[a1][1] == arrows[a2][0]:
                comp[(a2, a1)] = arrow_ids[(S.comp(g2, g1), u2)]
    cat = FinCategory(pairs, arrows, identities, comp, name=f"({p.name}↓{c})")
    proj = FinFunctor(
        cat, S, {oid: d for oid, (d, _) in pairs.items()}, {a: g for a, (g, _) in arrow_pairs.items()},
        name=f"proj({p.name}↓{c})",
    )
    return Comma(cat, proj, pairs, arrow_pairs, ids)

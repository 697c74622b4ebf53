"""Finite presheaves, subpresheaves and their closures, frames of closed subobjects."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping

from .cat import FinCategory, FinFunctor
from .frames import FiniteFrame
from .guards import DEFAULT, Guards
from .report import GuardExceeded, InputError, VerificationReport
from .topology import Topology, describe


class FinPresheaf:
    """``sections[x]`` a finite set; ``restriction[a][s]`` the restriction of ``s`` along ``a``.

    For ``a : x → y`` the restriction map goes from sections at ``y`` to sections at ``x``.
    Identity restrictions may be omitted.
    """

    def __init__(
        self,
        base: FinCategory,
        sections: Mapping[str, Iterable[str]],
        restriction: Mapping[str, Mapping[str, str]],
        name: str = "",
    ):
        self.base = base
        self.name = name
        missing = [x for x in base.objects if x not in sections]
        if missing:
            raise InputError(f"presheaf {name}: no sections given for {missing[0]!r}")
        self.sections: dict[str, tuple[str, ...]] = {x: tuple(sorted(set(sections[x]))) for x in base.objects}
        self.restriction: dict[str, dict[str, str]] = {}
        for a, (x, y) in base.arrows.items():
            if a in restriction:
                m = dict(restriction[a])
            elif a == base.id(x):
                m = {s: s for s in self.sections[x]}
            else:
                raise InputError(f"presheaf {name}: no restriction along {a!r}")
            for s in self.sections[y]:
                if s not in m:
                    raise InputError(f"presheaf {name}: restriction along {a!r} misses section {s!r}")
                if m[s] not in self.sections[x]:
                    raise InputError(f"presheaf {name}: {s!r} restricts along {a!r} to unknown {m[s]!r}")
            self.restriction[a] = m
        for a in restriction:
            if a not in base.arrows:
                raise InputError(f"presheaf {name}: restriction along unknown arrow {a!r}")

    def restrict(self, a: str, s: str) -> str:
        return self.restriction[a][s]

    def size(self) -> int:
        return sum(len(v) for v in self.sections.values())

    @classmethod
    def constant(cls, base: FinCategory, values: Iterable[str], name: str = "") -> "FinPresheaf":
        vals = list(values)
        return cls(base, {x: vals for x in base.objects}, {a: {v: v for v in vals} for a in base.arrows}, name)

    @classmethod
    def representable(cls, base: FinCategory, c: str) -> "FinPresheaf":
        return hom_presheaf(FinFunctor.identity(base), c)

    def __repr__(self) -> str:
        return f"FinPresheaf({self.name or '?'} on {self.base.name})"


def validate_presheaf(p: FinPresheaf) -> VerificationReport:
    """Identity restrictions are identities and restriction respects composition."""
    c = p.base
    rep = VerificationReport(f"presheaf {p.name}")
    bad = None
    for x in c.objects:
        m = p.restriction[c.id(x)]
        s = next((s for s in p.sections[x] if m[s] != s), None)
        if s is not None:
            bad = {"object": x, "section": s, "restricts_to": m[s]}
            break
    rep.add("identities", bad is None, bad)
    bad = None
    for (g, f), h in c._comp.items():
        for s in p.sections[c.cod(g)]:
            lhs = p.restrict(h, s)
            rhs = p.restrict(f, p.restrict(g, s))
            if lhs != rhs:
                bad = {"pair": [g, f], "section": s, "along_composite": lhs, "stepwise": rhs}
                break
        if bad:
            break
    rep.add("composition", bad is None, bad)
    return rep


def hom_presheaf(p: FinFunctor, c: str) -> FinPresheaf:
    """``d ↦ Hom(p(d), c)``, restricting by precomposition with ``p(g)``."""
    D = p.target
    if c not in D.objects:
        raise InputError(f"{c!r} is not an object of {D.name}")
    src = p.source
    sections = {d: D.hom(p.ob(d), c) for d in src.objects}
    restriction = {g: {h: D.comp(h, p.ar(g)) for h in sections[src.cod(g)]} for g in src.arrows}
    return FinPresheaf(src, sections, restriction, name=f"Hom(p(-),{c})")


@dataclass(frozen=True)
class Subpresheaf:
    ambient: FinPresheaf
    parts: tuple[tuple[str, frozenset[str]], ...]

    @classmethod
    def of(cls, ambient: FinPresheaf, parts: Mapping[str, Iterable[str]]) -> "Subpresheaf":
        for x, ss in parts.items():
            if x not in ambient.sections:
                raise InputError(f"unknown object {x!r}")
            unknown = set(ss) - set(ambient.sections[x])
            if unknown:
                raise InputError(f"{sorted(unknown)[0]!r} is not a section at {x!r}")
        return cls(ambient, tuple((x, frozenset(parts.get(x, ()))) for x in ambient.base.objects))

    @classmethod
    def maximal(cls, ambient: FinPresheaf) -> "Subpresheaf":
        return cls.of(ambient, ambient.sections)

    @classmethod
    def empty(cls, ambient: FinPresheaf) -> "Subpresheaf":
        return cls.of(ambient, {})

    def at(self, x: str) -> frozenset[str]:
        return dict(self.parts)[x]

    def as_dict(self) -> dict[str, list[str]]:
        return {x: sorted(ss) for x, ss in self.parts}

    def key(self) -> tuple:
        return tuple((x, tuple(sorted(ss))) for x, ss in self.parts)

    def leq(self, other: "Subpresheaf") -> bool:
        return all(a <= b for (_, a), (_, b) in zip(self.parts, other.parts))

    def meet(self, other: "Subpresheaf") -> "Subpresheaf":
        return Subpresheaf(self.ambient, tuple((x, a & b) for (x, a), (_, b) in zip(self.parts, other.parts)))

    def union(self, other: "Subpresheaf") -> "Subpresheaf":
        return Subpresheaf(self.ambient, tuple((x, a | b) for (x, a), (_, b) in zip(self.parts, other.parts)))

    def is_closed_under_restriction(self) -> bool:
        p = self.ambient
        d = dict(self.parts)
        return all(p.restrict(a, s) in d[x] for a, (x, y) in p.base.arrows.items() for s in d[y])


def generated_subpresheaf(p: FinPresheaf, gens: Iterable[tuple[str, str]]) -> Subpresheaf:
    """Smallest subpresheaf containing the given ``(object, section)`` pairs."""
    parts: dict[str, set[str]] = {x: set() for x in p.base.objects}
    for y, s in gens:
        for a in p.base.into(y):
            parts[p.base.dom(a)].add(p.restrict(a, s))
    return Subpresheaf.of(p, parts)


def _covering_set(k: Topology, s: Subpresheaf, x: str, sec: str) -> int:
    p = s.ambient
    c = p.base
    d = dict(s.parts)
    bits = 0
    for i, a in enumerate(c.into(x)):
        if p.restrict(a, sec) in d[c.dom(a)]:
            bits |= 1 << i
    return bits


def close_subpresheaf(k: Topology, s: Subpresheaf) -> Subpresheaf:
    """Sections whose sieve of restrictions landing in ``s`` is ``k``-covering."""
    p = s.ambient
    if k.base is not p.base:
        raise InputError("topology does not live on the presheaf's base")
    parts = {x: {sec for sec in p.sections[x] if k.covers(x, _covering_set(k, s, x, sec))} for x in p.base.objects}
    return Subpresheaf.of(p, parts)


def all_subpresheaves(p: FinPresheaf, guards: Guards = DEFAULT) -> list[Subpresheaf]:
    """Every subpresheaf, by extending along objects in order and pruning on restriction."""
    if p.size() > guards.sections:
        raise GuardExceeded("sections", f"{p.size()} sections exceed the guard of {guards.sections}")
    c = p.base
    objs = list(c.objects)
    out: list[Subpresheaf] = []

    def consistent(parts: dict[str, frozenset[str]]) -> bool:
        for a, (x, y) in c.arrows.items():
            if x in parts and y in parts and any(p.restrict(a, s) not in parts[x] for s in parts[y]):
                return False
        return True

    def rec(i: int, parts: dict[str, frozenset[str]]):
        if i == len(objs):
            out.append(Subpresheaf.of(p, parts))
            return
        x = objs[i]
        secs = p.sections[x]
        for r in range(len(secs) + 1):
            for comb in itertools.combinations(secs, r):
                parts[x] = frozenset(comb)
                if consistent(parts):
                    rec(i + 1, parts)
                del parts[x]

    rec(0, {})
    return out


@dataclass
class ClosedSubobjectFrame:
    """The frame of closed subpresheaves; ``decode[name]`` is the subpresheaf an element names."""

    frame: FiniteFrame
    decode: dict[str, Subpresheaf]
    mode: str

    def encode(self, s: Subpresheaf) -> str:
        for n, t in self.decode.items():
            if t == s:
                return n
        raise KeyError("not an element of this frame")


def _sub_name(s: Subpresheaf) -> str:
    return "|".join(f"{x}:{','.join(sorted(ss))}" for x, ss in s.parts)


def closed_subobject_frame(k: Topology, p: FinPresheaf, guards: Guards = DEFAULT) -> ClosedSubobjectFrame:
    """Closed subpresheaves ordered by inclusion.

    Exhaustive when the section count is within the guard.  Otherwise closures
    of one-section subpresheaves are saturated under closed binary unions:
    every closed subobject is the closure of the union of the sections it
    contains, so this reaches all of them.
    """
    try:
        elems = {close_subpresheaf(k, s) for s in all_subpresheaves(p, guards)}
        mode = "exhaustive"
    except GuardExceeded:
        mode = "generators"
        elems = {close_subpresheaf(k, Subpresheaf.empty(p))}
        frontier = {close_subpresheaf(k, generated_subpresheaf(p, [(x, s)])) for x in p.base.objects for s in p.sections[x]}
        elems |= frontier
        while frontier:
            new = set()
            for a in frontier:
                for b in list(elems):
                    j = close_subpresheaf(k, a.union(b))
                    if j not in elems:
                        new.add(j)
            elems |= new
            frontier = new
    decode = {_sub_name(s): s for s in elems}
    frame = FiniteFrame(decode, [(a, b) for a in decode for b in decode if decode[a].leq(decode[b])], name="ClSub")
    return ClosedSubobjectFrame(frame, decode, mode)


# -- sheaf condition --------------------------------------------------------------------


def matching_families(p: FinPresheaf, x: str, bits: int, guards: Guards = DEFAULT):
    """Yield matching families for the sieve ``bits`` on ``x`` as dicts arrow → section."""
    c = p.base
    arrows = list(c.bits_to_arrows(x, bits))
    # constraints: for g in the sieve and h into dom g, s_{g∘h} = s_g · h
    budget = [guards.search]

    def rec(i: int, fam: dict[str, str]):
        budget[0] -= 1
        if budget[0] < 0:
            raise GuardExceeded("search", f"matching family search on {x!r} exceeded the budget")
        if i == len(arrows):
            yield dict(fam)
            return
        g = arrows[i]
        for s in p.sections[c.dom(g)]:
            ok = True
            for h in c.into(c.dom(g)):
                gh = c.comp(g, h)
                if gh in fam and fam[gh] != p.restrict(h, s):
                    ok = False
                    break
            if ok:
                for g2, s2 in fam.items():
                    for h in c.into(c.dom(g2)):
                        if c.comp(g2, h) == g and p.restrict(h, s2) != s:
                            ok = False
                            break
                    if not ok:
                        break
            if ok:
                fam[g] = s
                yield from rec(i + 1, fam)
                del fam[g]

    yield from rec(0, {})


def sheaf_report(j: Topology, p: FinPresheaf, guards: Guards = DEFAULT) -> VerificationReport:
    """Separatedness and the sheaf condition, over every covering sieve and matching family."""
    c = p.base
    if j.base is not c:
        raise InputError("topology does not live on the presheaf's base")
    rep = VerificationReport(f"sheaf condition for {p.name} on {j.name}")
    sep_bad = sheaf_bad = None
    for x in c.objects:
        for bits in j.covering(x, guards):
            for fam in matching_families(p, x, bits, guards):
                amal = [t for t in p.sections[x] if all(p.restrict(g, t) == s for g, s in fam.items())]
                if len(amal) != 1:
                    w = {"object": x, "sieve": describe(c, x, bits), "family": fam, "amalgamations": amal}
                    if len(amal) > 1 and sep_bad is None:
                        sep_bad = w
                    if sheaf_bad is None:
                        sheaf_bad = w
            if sep_bad and sheaf_bad:
                break
        if sep_bad and sheaf_bad:
            break
    rep.add("separated", sep_bad is None, sep_bad)
    rep.add("sheaf", sheaf_bad is None, sheaf_bad)
    return rep

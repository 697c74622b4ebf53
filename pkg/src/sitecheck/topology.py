"""Sieves, Grothendieck topologies and site-level predicates on functors.

A sieve on ``x`` is an ``int`` bitmask over ``c.into(x)``.  A topology either
stores its covering sieves per object (explicit mode) or answers a memoized
covering predicate (predicate mode), used when enumerating every sieve would
exceed the size guard.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .cat import (
    EMPTY_SHAPE,
    PAIR_SHAPE,
    PARALLEL_SHAPE,
    FinCategory,
    FinFunctor,
    cones,
    diagram,
)
from .guards import DEFAULT, Guards
from .report import GuardExceeded, InputError, Status, VerificationReport


@dataclass(frozen=True, order=True)
class Sieve:
    obj: str
    bits: int

    def arrows(self, c: FinCategory) -> tuple[str, ...]:
        return c.bits_to_arrows(self.obj, self.bits)

    def to_dict(self) -> dict:
        return {"object": self.obj, "bits": self.bits}


def sieve_of(c: FinCategory, x: str, arrows: Iterable[str]) -> Sieve:
    """The sieve on ``x`` generated by ``arrows``."""
    return Sieve(x, c.generated_bits(x, arrows))


def is_sieve(c: FinCategory, x: str, bits: int) -> bool:
    pr = c.principal(x)
    return all(pr[i] & ~bits == 0 for i in range(len(pr)) if bits >> i & 1)


def describe(c: FinCategory, x: str, bits: int) -> dict:
    """Witness form of a sieve: its object and member arrows."""
    return {"object": x, "arrows": list(c.bits_to_arrows(x, bits))}


# -- enumeration -----------------------------------------------------------------


def all_sieve_bits(c: FinCategory, x: str, guards: Guards = DEFAULT) -> tuple[int, ...]:
    """Every sieve on ``x`` as a sorted tuple of bitmasks."""
    n = len(c.into(x))
    if n > guards.sieves:
        raise GuardExceeded("sieves", f"object {x!r} has {n} incoming arrows (guard {guards.sieves})")
    cache = c.__dict__.setdefault("_sieve_cache", {})
    hit = cache.get(x)
    if hit is not None:
        return hit
    found = {0}
    # A sieve is a union of principal sieves; add generators one at a time.
    for p in sorted(set(c.principal(x))):
        found |= {s | p for s in found}
    out = cache[x] = tuple(sorted(found))
    return out


def enumerate_sieves(c: FinCategory, x: str, guards: Guards = DEFAULT) -> list[Sieve]:
    if x not in c.objects:
        raise InputError(f"{x!r} is not an object of {c.name}")
    return [Sieve(x, b) for b in all_sieve_bits(c, x, guards)]


def can_enumerate(c: FinCategory, guards: Guards = DEFAULT) -> bool:
    return all(len(c.into(x)) <= guards.sieves for x in c.objects)


# -- topologies ---------------------------------------------------------------------


class Topology:
    """A Grothendieck topology (or a candidate, before validation) on a finite category."""

    def __init__(
        self,
        base: FinCategory,
        covers: Mapping[str, Iterable[int]] | None = None,
        predicate: Callable[[str, int], bool] | None = None,
        name: str = "",
        lazy: bool = False,
    ):
        if (covers is None) == (predicate is None):
            raise InputError("a topology needs exactly one of a cover table or a covering predicate")
        self.base = base
        self.name = name
        self.lazy = lazy
        self._table: dict[str, frozenset[int]] | None = None
        self._pred = predicate
        self._memo: dict[tuple[str, int], bool] = {}
        if covers is not None:
            table = {x: frozenset() for x in base.objects}
            for x, bs in covers.items():
                if x not in table:
                    raise InputError(f"covering sieves declared on unknown object {x!r}")
                table[x] = frozenset(bs)
            self._table = table

    @property
    def explicit(self) -> bool:
        return self._table is not None

    def covers(self, x: str, bits: int) -> bool:
        if self._table is not None:
            return bits in self._table[x]
        key = (x, bits)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._memo[key] = bool(self._pred(x, bits))
        return hit

    def covers_sieve(self, s: Sieve) -> bool:
        return self.covers(s.obj, s.bits)

    def covers_family(self, x: str, arrows: Iterable[str]) -> bool:
        return self.covers(x, self.base.generated_bits(x, arrows))

    def covering(self, x: str, guards: Guards = DEFAULT) -> tuple[int, ...]:
        """Covering sieves on ``x`` in bitmask order (enumerates in predicate mode)."""
        if self._table is not None:
            return tuple(sorted(self._table[x]))
        return tuple(b for b in all_sieve_bits(self.base, x, guards) if self.covers(x, b))

    def table(self, guards: Guards = DEFAULT) -> dict[str, frozenset[int]]:
        return {x: frozenset(self.covering(x, guards)) for x in self.base.objects}

    def materialize(self, guards: Guards = DEFAULT) -> "Topology":
        return Topology(self.base, self.table(guards), name=self.name)

    def same_as(self, other: "Topology", guards: Guards = DEFAULT) -> bool:
        return self.base is other.base and all(
            set(self.covering(x, guards)) == set(other.covering(x, guards)) for x in self.base.objects
        )

    def contained_in(self, other: "Topology", guards: Guards = DEFAULT):
        """``None`` if every cover of ``self`` covers for ``other``, else a witness sieve."""
        for x in self.base.objects:
            for b in self.covering(x, guards):
                if not other.covers(x, b):
                    return describe(self.base, x, b)
        return None

    def __repr__(self) -> str:
        mode = "explicit" if self.explicit else ("lazy" if self.lazy else "predicate")
        return f"Topology({self.name or '?'} on {self.base.name}, {mode})"


def trivial_topology(c: FinCategory) -> Topology:
    """Only maximal sieves cover."""
    return Topology(c, {x: {c.max_bits(x)} for x in c.objects}, name="trivial")


def topology_from_families(c: FinCategory, families: Mapping[str, Iterable[Iterable[str]]], name: str = "") -> Topology:
    """An explicit candidate whose covers are the sieves generated by the given families."""
    covers = {x: set() for x in c.objects}
    for x, fams in families.items():
        for fam in fams:
            covers[x].add(c.generated_bits(x, fam))
    return Topology(c, covers, name=name)


def predicate_topology(c: FinCategory, predicate: Callable[[str, int], bool], name: str = "") -> Topology:
    return Topology(c, predicate=predicate, name=name)


def close_bits(j: Topology, x: str, bits: int) -> int:
    """``{f into x | f*(S) covers}``."""
    c = j.base
    out = 0
    for i, f in enumerate(c.into(x)):
        if j.covers(c.dom(f), c.pullback_bits(f, bits)):
            out |= 1 << i
    return out


def close_sieve(j: Topology, s: Sieve) -> Sieve:
    if s.obj not in j.base.objects:
        raise InputError(f"{s.obj!r} is not an object of {j.base.name}")
    return Sieve(s.obj, close_bits(j, s.obj, s.bits))


def closed_sieves(j: Topology, x: str, guards: Guards = DEFAULT) -> tuple[int, ...]:
    return tuple(b for b in all_sieve_bits(j.base, x, guards) if close_bits(j, x, b) == b)


# -- generation ----------------------------------------------------------------------


def _stable_basis(c: FinCategory, coverage: Mapping[str, Iterable[Iterable[str]]]) -> dict[str, set[int]]:
    basis: dict[str, set[int]] = {x: {c.max_bits(x)} for x in c.objects}
    for x, fams in coverage.items():
        if x not in basis:
            raise InputError(f"coverage declared on unknown object {x!r}")
        for fam in fams:
            fam = list(fam)
            for a in fam:
                if a not in c.arrows:
                    raise InputError(f"coverage mentions unknown arrow {a!r}")
                if c.cod(a) != x:
                    raise InputError(f"coverage family on {x!r} contains {a!r} with codomain {c.cod(a)!r}")
            r = c.generated_bits(x, fam)
            for g in c.into(x):
                basis[c.dom(g)].add(c.pullback_bits(g, r))
    return basis


def _fixpoint_covers(c: FinCategory, basis: Mapping[str, set[int]], pairs: Mapping[str, Iterable[int]]) -> dict[str, set[int]]:
    """Least set ``T`` of (object, sieve) pairs, among ``pairs``, containing
    the maximal sieves and every ``S`` for which some basic ``R`` on ``x`` has
    ``h*S ∈ T`` for all ``h ∈ R``.  ``pairs`` must be closed under pullback."""
    covered: dict[str, set[int]] = {x: {c.max_bits(x)} for x in c.objects}
    pending = {x: set(bs) - covered[x] for x, bs in pairs.items()}
    changed = True
    while changed:
        changed = False
        for x in c.objects:
            into = c.into(x)
            newly = []
            for s in pending.get(x, ()):
                ok_bits = 0
                for i, h in enumerate(into):
                    if c.pullback_bits(h, s) in covered[c.dom(h)]:
                        ok_bits |= 1 << i
                if any(r & ~ok_bits == 0 for r in basis[x]):
                    newly.append(s)
            if newly:
                changed = True
                covered[x].update(newly)
                pending[x].difference_update(newly)
    return covered


def generate_topology(
    c: FinCategory,
    coverage: Mapping[str, Iterable[Iterable[str]]],
    guards: Guards = DEFAULT,
    name: str = "generated",
) -> Topology:
    """The least Grothendieck topology in which every given family covers.

    Falls back to a lazily evaluated predicate (``result.lazy``) when some
    object has too many incoming arrows for exhaustive sieve enumeration.
    """
    basis = _stable_basis(c, coverage)
    if can_enumerate(c, guards):
        pairs = {x: set(all_sieve_bits(c, x, guards)) for x in c.objects}
        return Topology(c, _fixpoint_covers(c, basis, pairs), name=name)

    def pred(x: str, bits: int) -> bool:
        pairs: dict[str, set[int]] = {y: set() for y in c.objects}
        for g in c.into(x):
            pairs[c.dom(g)].add(c.pullback_bits(g, bits))
        return bits in _fixpoint_covers(c, basis, pairs)[x]

    return Topology(c, predicate=pred, name=name, lazy=True)


# -- validation ---------------------------------------------------------------------------


def _sample_bits(c: FinCategory, x: str, guards: Guards, rng: random.Random) -> list[int]:
    pr = c.principal(x)
    out = {0, c.max_bits(x)}
    for _ in range(guards.sample):
        k = rng.randint(1, max(1, min(4, len(pr))))
        b = 0
        for i in rng.sample(range(len(pr)), k):
            b |= pr[i]
        out.add(b)
    return sorted(out)


def validate_topology(j: Topology, guards: Guards = DEFAULT) -> VerificationReport:
    """Check maximality, stability and transitivity, with witnesses.

    Objects whose sieves cannot be enumerated within the guard are checked on
    a deterministic sample and the affected checks are marked ``sampled``.
    """
    c = j.base
    rep = VerificationReport(f"topology {j.name}")
    rng = random.Random(0)
    sieves: dict[str, Sequence[int]] = {}
    sampled = False
    for x in c.objects:
        if len(c.into(x)) <= guards.sieves:
            sieves[x] = all_sieve_bits(c, x, guards)
        else:
            sieves[x] = _sample_bits(c, x, guards, rng)
            sampled = True

    def mark(name: str, witness, detail: str = ""):
        if witness is not None:
            rep.add(name, False, witness, detail)
        elif sampled:
            rep.add_status(name, Status.SAMPLED, detail="checked on sampled sieves")
        else:
            rep.add(name, True)

    if j.explicit:
        bad = None
        for x in c.objects:
            for b in sorted(j._table[x]):
                if b > c.max_bits(x) or not is_sieve(c, x, b):
                    bad = {"object": x, "bits": b}
                    break
            if bad:
                break
        rep.add("covers-are-sieves", bad is None, bad)
        if bad:
            return rep

    bad = None
    for x in c.objects:
        if not j.covers(x, c.max_bits(x)):
            bad = {"object": x}
            break
    rep.add("maximal", bad is None, bad)

    covering = {x: [b for b in sieves[x] if j.covers(x, b)] for x in c.objects}

    bad = None
    for x in c.objects:
        for b in covering[x]:
            for f in c.into(x):
                if not j.covers(c.dom(f), c.pullback_bits(f, b)):
                    bad = {"sieve": describe(c, x, b), "arrow": f}
                    break
            if bad:
                break
        if bad:
            break
    mark("stability", bad)

    bad = None
    for x in c.objects:
        cov = covering[x]
        if not cov:
            continue
        into = c.into(x)
        for s in sieves[x]:
            if j.covers(x, s):
                continue
            ok_bits = 0
            for i, h in enumerate(into):
                if j.covers(c.dom(h), c.pullback_bits(h, s)):
                    ok_bits |= 1 << i
            for r in cov:
                if r & ~ok_bits == 0:
                    bad = {"sieve": describe(c, x, s), "refining_cover": describe(c, x, r)}
                    break
            if bad:
                break
        if bad:
            break
    mark("transitivity", bad)
    rep.data["mode"] = "sampled" if sampled else "exhaustive"
    return rep


# -- functor predicates -------------------------------------------------------------------


def image_bits(f: FinFunctor, x: str, bits: int) -> int:
    """Sieve on ``f(x)`` generated by the images of the arrows of a sieve on ``x``."""
    return f.target.generated_bits(f.ob(x), (f.ar(a) for a in f.source.bits_to_arrows(x, bits)))


def preimage_bits(f: FinFunctor, x: str, bits: int) -> int:
    """``{g into x | f(g) ∈ S}`` for a sieve ``S`` on ``f(x)``."""
    S, T = f.source, f.target
    idx = T.into_index(f.ob(x))
    out = 0
    for i, g in enumerate(S.into(x)):
        if bits >> idx[f.ar(g)] & 1:
            out |= 1 << i
    return out


def _vertices_by_size(c: FinCategory) -> list[str]:
    return sorted(c.objects, key=lambda d: (len(c.into(d)), d))


def _flatness_witness(f: FinFunctor, k: Topology, guards: Guards):
    C, D = f.source, f.target
    shapes = []
    shapes.append(("terminal", [diagram(C, EMPTY_SHAPE, {}, {})]))
    shapes.append(("product", [diagram(C, PAIR_SHAPE, {"0": x, "1": y}, {}) for x in C.objects for y in C.objects]))
    par = []
    for (x, y) in sorted({st for st in C.arrows.values()}):
        for u, v in itertools.combinations(C.hom(x, y), 2):
            par.append(diagram(C, PARALLEL_SHAPE, {"0": x, "1": y}, {"u": u, "v": v}))
    shapes.append(("equalizer", par))
    budget = guards.search
    for shape_name, diagrams in shapes:
        for d in diagrams:
            c_cones = [(a, legs) for a in C.objects for legs in cones(d, a)]
            fd = d.then(f)
            for v in _vertices_by_size(D):
                for mu in cones(fd, v):
                    budget -= 1
                    if budget < 0:
                        raise GuardExceeded("search", "covering-flatness cone enumeration exceeded the search budget")
                    ok = 0
                    for i, g in enumerate(D.into(v)):
                        w = D.dom(g)
                        target = {j2: D.comp(mu[j2], g) for j2 in mu}
                        if _factors(f, c_cones, w, target):
                            ok |= 1 << i
                    if not k.covers(v, ok):
                        return {
                            "shape": shape_name,
                            "diagram": dict(d.obj_map) | {a: b for a, b in d.arr_map.items() if a in ("u", "v")},
                            "vertex": v,
                            "cone": mu,
                            "factoring_sieve": describe(D, v, ok),
                        }
    return None


def _factors(f: FinFunctor, c_cones, w: str, target: Mapping[str, str]) -> bool:
    D = f.target
    for apex, legs in c_cones:
        for h in D.hom(w, f.ob(apex)):
            if all(D.comp(f.ar(legs[j]), h) == target[j] for j in target):
                return True
    return False


def site_morphism_report(f: FinFunctor, j: Topology, k: Topology, guards: Guards = DEFAULT) -> VerificationReport:
    """Predicates of a functor ``f : (C, j) → (D, k)``.

    ``cover-preserving``, ``covering-flat`` (terminal, binary product and
    equalizer shapes), ``dense``, ``full`` and ``faithful`` in their local,
    sieve-theoretic forms.
    """
    C, D = f.source, f.target
    if j.base is not C or k.base is not D:
        raise InputError("topologies do not live on the functor's source and target")
    rep = VerificationReport(f"site functor {f.name or 'F'}")

    bad = None
    for x in C.objects:
        for b in j.covering(x, guards):
            if not k.covers(f.ob(x), image_bits(f, x, b)):
                bad = describe(C, x, b)
                break
        if bad:
            break
    rep.add("cover-preserving", bad is None, bad)

    try:
        bad = _flatness_witness(f, k, guards)
        rep.add("covering-flat", bad is None, bad)
    except GuardExceeded as e:
        rep.add_status("covering-flat", Status.INCONCLUSIVE, {"guard": e.guard}, str(e))

    bad = None
    image_objs = set(f.obj_map.values())
    for d in _vertices_by_size(D):
        bits = 0
        for i, g in enumerate(D.into(d)):
            w = D.dom(g)
            if any(D.hom(w, e) for e in image_objs):
                bits |= 1 << i
        if not k.covers(d, bits):
            bad = {"object": d, "sieve": describe(D, d, bits)}
            break
    rep.add("dense", bad is None, bad)

    bad = None
    for (x, y) in sorted({st for st in C.arrows.values()}):
        hs = C.hom(x, y)
        for u, v in itertools.combinations(hs, 2):
            if f.ar(u) != f.ar(v):
                continue
            bits = 0
            for i, h in enumerate(C.into(x)):
                if C.comp(u, h) == C.comp(v, h):
                    bits |= 1 << i
            if not j.covers(x, bits):
                bad = {"arrows": [u, v], "sieve": describe(C, x, bits)}
                break
        if bad:
            break
    rep.add("faithful", bad is None, bad)

    bad = None
    for x in C.objects:
        for y in C.objects:
            images = {f.ar(m) for m in C.hom(x, y)}
            for kk in D.hom(f.ob(x), f.ob(y)):
                if kk in images:
                    continue
                bits = 0
                for i, h in enumerate(C.into(x)):
                    want = D.comp(kk, f.ar(h))
                    if any(f.ar(m) == want for m in C.hom(C.dom(h), y)):
                        bits |= 1 << i
                if not j.covers(x, bits):
                    bad = {"source": x, "target": y, "arrow": kk, "sieve": describe(C, x, bits)}
                    break
            if bad:
                break
        if bad:
            break
    rep.add("full", bad is None, bad)
    return rep


def comorphism_report(f: FinFunctor, k: Topology, j: Topology, guards: Guards = DEFAULT) -> VerificationReport:
    """Predicates of a functor ``f : (D, k) → (C, j)`` viewed from the comorphism side.

    ``cover-lifting``, ``cover-reflecting``, ``closed-sieve-lifting`` and
    ``open-criterion``.
    """
    D, C = f.source, f.target
    if k.base is not D or j.base is not C:
        raise InputError("topologies do not live on the functor's source and target")
    rep = VerificationReport(f"comorphism {f.name or 'F'}")

    bad = None
    for d in D.objects:
        for s in j.covering(f.ob(d), guards):
            lifted = preimage_bits(f, d, s)
            if not k.covers(d, lifted):
                bad = {"cover": describe(C, f.ob(d), s), "over": d, "lifted": describe(D, d, lifted)}
                break
        if bad:
            break
    rep.add("cover-lifting", bad is None, bad)

    bad = None
    for d in D.objects:
        for r in all_sieve_bits(D, d, guards):
            if not k.covers(d, r) and j.covers(f.ob(d), image_bits(f, d, r)):
                bad = describe(D, d, r)
                break
        if bad:
            break
    rep.add("cover-reflecting", bad is None, bad)

    bad = None
    for d in D.objects:
        x = f.ob(d)
        reachable = {close_bits(j, x, image_bits(f, d, r)) for r in all_sieve_bits(D, d, guards)}
        for t in closed_sieves(j, x, guards):
            if t not in reachable:
                bad = {"over": d, "closed_sieve": describe(C, x, t)}
                break
        if bad:
            break
    rep.add("closed-sieve-lifting", bad is None, bad)

    bad = None
    for d in D.objects:
        for r in k.covering(d, guards):
            if not j.covers(f.ob(d), image_bits(f, d, r)):
                bad = {"not-cover-preserving": describe(D, d, r)}
                break
        if bad:
            break
    if bad is None:
        for d in D.objects:
            images = {f.ar(g) for g in D.into(d)}
            for alpha in C.into(f.ob(d)):
                c0 = C.dom(alpha)
                bits = 0
                for i, h in enumerate(C.into(c0)):
                    if C.comp(alpha, h) in images:
                        bits |= 1 << i
                if not j.covers(c0, bits):
                    bad = {"over": d, "arrow": alpha, "sieve": describe(C, c0, bits)}
                    break
            if bad:
                break
    rep.add("open-criterion", bad is None, bad)
    return rep

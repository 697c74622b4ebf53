"""Strict indexed categories, the Grothendieck construction and fibration-level checks.

An indexed category ``L`` over a base ``C`` assigns a fibre category to each
object and, to each arrow ``f : c' → c``, a transition functor
``L(f) : L(c) → L(c')``.  Transitions compose on the nose.

In the total category an arrow ``(c', x') → (c, x)`` is a pair ``(f, α)`` with
``f : c' → c`` and ``α : x' → L(f)(x)``; it is stored together with ``x``
because ``α`` alone does not determine the codomain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

from .cat import (
    FinCategory,
    FinFunctor,
    check_functor,
    compute_limit,
    cospan,
    is_limit,
    is_terminal,
    terminal,
    validate_category,
)
from .frames import FiniteFrame
from .guards import DEFAULT, Guards
from .report import InputError, PreconditionError, Status, VerificationReport
from .topology import Topology, generate_topology


class IndexedCat:
    def __init__(
        self,
        base: FinCategory,
        fibres: Mapping[str, FinCategory],
        transitions: Mapping[str, FinFunctor],
        name: str = "",
        posets: Mapping[str, FiniteFrame] | None = None,
    ):
        self.base = base
        self.name = name
        for c in base.objects:
            if c not in fibres:
                raise InputError(f"no fibre given over {c!r}")
        for c in fibres:
            if c not in base.objects:
                raise InputError(f"fibre given over unknown object {c!r}")
        self.fibres = {c: fibres[c] for c in base.objects}
        trans = dict(transitions)
        for a in trans:
            if a not in base.arrows:
                raise InputError(f"transition given for unknown arrow {a!r}")
        for c in base.objects:
            trans.setdefault(base.id(c), FinFunctor.identity(self.fibres[c]))
        for a in base.arrows:
            if a not in trans:
                raise InputError(f"no transition given for arrow {a!r}")
        self.transitions: dict[str, FinFunctor] = {a: trans[a] for a in base.arrows}
        self.posets = dict(posets) if posets is not None else None

    @classmethod
    def of_posets(
        cls,
        base: FinCategory,
        posets: Mapping[str, FiniteFrame],
        maps: Mapping[str, Mapping[str, str]],
        name: str = "",
    ) -> "IndexedCat":
        """Poset fibres; ``maps[f]`` is the element map of ``L(f) : L(cod f) → L(dom f)``."""
        fibres = {c: posets[c].category for c in base.objects}
        trans = {}
        for a, (s, t) in base.arrows.items():
            if a in maps:
                m = dict(maps[a])
            elif a == base.id(s):
                m = {x: x for x in posets[s].elements}
            else:
                raise InputError(f"no transition given for arrow {a!r}")
            missing = [x for x in posets[t].elements if x not in m]
            if missing:
                raise InputError(f"transition of {a!r} is not total: {missing[0]!r} unmapped")
            for x, y in m.items():
                if x not in posets[t] or y not in posets[s]:
                    raise InputError(f"transition of {a!r} maps {x!r} to {y!r} outside the fibres")
            trans[a] = FinFunctor.from_object_map(fibres[t], fibres[s], m, name=f"L({a})")
        return cls(base, fibres, trans, name=name, posets=posets)

    def L(self, f: str) -> FinFunctor:
        return self.transitions[f]

    def ob(self, f: str, x: str) -> str:
        return self.transitions[f].obj_map[x]

    def ar(self, f: str, a: str) -> str:
        return self.transitions[f].arr_map[a]

    @cached_property
    def thin(self) -> bool:
        return all(fib.is_thin for fib in self.fibres.values())

    def fibre_map(self, f: str) -> dict[str, str]:
        return dict(self.transitions[f].obj_map)

    def __repr__(self) -> str:
        return f"IndexedCat({self.name or '?'} over {self.base.name})"


def validate_indexed(d: IndexedCat) -> VerificationReport:
    """Fibres are categories, transitions are functors, and transitions compose strictly."""
    rep = VerificationReport(f"indexed category {d.name}")
    B = d.base
    bad = None
    for c, fib in d.fibres.items():
        r = validate_category(fib)
        if not r.passed:
            bad = {"fibre": c, "failures": [x.name for x in r.failures]}
            break
    rep.add("fibres", bad is None, bad)
    bad = None
    for a, (s, t) in B.arrows.items():
        F = d.transitions[a]
        if F.source is not d.fibres[t] or F.target is not d.fibres[s]:
            if F.source.objects != d.fibres[t].objects or F.target.objects != d.fibres[s].objects:
                bad = {"arrow": a, "problem": "transition has the wrong fibres"}
                break
        r = check_functor(F)
        if not r.passed:
            bad = {"arrow": a, "failures": [x.name for x in r.failures]}
            break
    rep.add("transitions", bad is None, bad)
    if bad is not None:
        return rep
    bad = None
    for c in B.objects:
        if not d.transitions[B.id(c)].same_as(FinFunctor.identity(d.fibres[c])):
            bad = {"object": c}
            break
    rep.add("strict-identities", bad is None, bad)
    bad = None
    for (g, f), h in sorted(B._comp.items()):
        Lf, Lg, Lh = d.transitions[f], d.transitions[g], d.transitions[h]
        if not Lg.then(Lf).same_as(Lh):
            bad = {"pair": [g, f]}
            break
    rep.add("strict-composition", bad is None, bad)
    return rep


# -- Grothendieck construction ------------------------------------------------------


@dataclass
class GrothTotal:
    indexed: IndexedCat
    total: FinCategory
    projection: FinFunctor
    pairs: dict[str, tuple[str, str]]               # object id -> (c, x)
    ids: dict[tuple[str, str], str]                 # (c, x) -> object id
    arrow_data: dict[str, tuple[str, str, str]]     # arrow id -> (f, α, x) with α : x' → L(f)(x)
    arrow_ids: dict[tuple[str, str, str], str]
    tags: dict[str, set[str]] = field(default_factory=dict)

    def obj(self, c: str, x: str) -> str:
        return self.ids[(c, x)]

    def arrow(self, f: str, alpha: str, x: str) -> str:
        return self.arrow_ids[(f, alpha, x)]

    def is_vertical(self, a: str) -> bool:
        f = self.arrow_data[a][0]
        return f == self.indexed.base.id(self.indexed.base.dom(f))

    def fibre_arrow(self, a: str) -> str:
        return self.arrow_data[a][1]


def _obj_id(c: str, x: str) -> str:
    return f"({c},{x})"


def _arrow_id(f: str, alpha: str, x: str) -> str:
    return f"({f},{alpha},{x})"


def grothendieck_construction(d: IndexedCat) -> GrothTotal:
    B = d.base
    pairs, ids = {}, {}
    for c in B.objects:
        for x in d.fibres[c].objects:
            oid = _obj_id(c, x)
            pairs[oid] = (c, x)
            ids[(c, x)] = oid
    arrows: dict[str, tuple[str, str]] = {}
    data: dict[str, tuple[str, str, str]] = {}
    aids: dict[tuple[str, str, str], str] = {}
    for f, (c1, c) in B.arrows.items():
        fib1 = d.fibres[c1]
        Lf = d.transitions[f]
        for x in d.fibres[c].objects:
            y = Lf.obj_map[x]
            for alpha in fib1.into(y):
                aid = _arrow_id(f, alpha, x)
                arrows[aid] = (ids[(c1, fib1.dom(alpha))], ids[(c, x)])
                data[aid] = (f, alpha, x)
                aids[(f, alpha, x)] = aid
    identities = {ids[(c, x)]: aids[(B.id(c), d.fibres[c].id(x), x)] for (c, x) in ids}
    # (g, β, x'') ∘ (f, α, x) = (g∘f, L(f)(β)∘α, x'')
    out_of: dict[str, list[str]] = {}
    for aid, (s, _) in arrows.items():
        out_of.setdefault(s, []).append(aid)
    comp = {}
    for a1, (s1, t1) in arrows.items():
        f, alpha, _ = data[a1]
        c1 = B.dom(f)
        for a2 in out_of.get(t1, ()):
            g, beta, x2 = data[a2]
            gamma = d.fibres[c1].comp(d.transitions[f].arr_map[beta], alpha)
            comp[(a2, a1)] = aids[(B.comp(g, f), gamma, x2)]
    total = FinCategory(pairs, arrows, identities, comp, name=f"G({d.name})")
    proj = FinFunctor(
        total, B, {o: c for o, (c, _) in pairs.items()}, {a: f for a, (f, _, _) in data.items()},
        name=f"p[{d.name}]",
    )
    tags = {}
    for aid, (f, alpha, x) in data.items():
        t = set()
        c1 = B.dom(f)
        if alpha == d.fibres[c1].id(d.fibres[c1].dom(alpha)) and d.fibres[c1].dom(alpha) == d.transitions[f].obj_map[x]:
            t.add("cartesian")
        if f == B.id(B.dom(f)):
            t.add("vertical")
        tags[aid] = t
    return GrothTotal(d, total, proj, pairs, ids, data, aids, tags)


def is_cartesian(g: GrothTotal, phi: str) -> bool:
    """Cartesian universal property of a total arrow, checked by enumeration."""
    T, B, p = g.total, g.indexed.base, g.projection
    src, tgt = T.arrows[phi]
    f = p.ar(phi)
    for psi in T.into(tgt):
        w = T.dom(psi)
        for h in B.hom(p.ob(w), p.ob(src)):
            if B.comp(f, h) != p.ar(psi):
                continue
            lifts = [chi for chi in T.hom(w, src) if p.ar(chi) == h and T.comp(phi, chi) == psi]
            if len(lifts) != 1:
                return False
    return True


def is_cocartesian(g: GrothTotal, phi: str) -> bool:
    T, B, p = g.total, g.indexed.base, g.projection
    src, tgt = T.arrows[phi]
    f = p.ar(phi)
    for psi in T.out_of(src):
        w = T.cod(psi)
        for h in B.hom(p.ob(tgt), p.ob(w)):
            if B.comp(h, f) != p.ar(psi):
                continue
            lifts = [chi for chi in T.hom(tgt, w) if p.ar(chi) == h and T.comp(chi, phi) == psi]
            if len(lifts) != 1:
                return False
    return True


def check_total(g: GrothTotal) -> VerificationReport:
    """Category laws of the total, functoriality of the projection, and cartesian tags."""
    rep = VerificationReport(f"total {g.total.name}")
    rep.extend(validate_category(g.total), "total-")
    rep.extend(check_functor(g.projection), "projection-")
    bad = next((a for a, t in sorted(g.tags.items()) if "cartesian" in t and not is_cartesian(g, a)), None)
    rep.add("cartesian-tags", bad is None, {"arrow": bad}, bug=True)
    return rep


def lifted_coverage(g: GrothTotal, j: Topology, guards: Guards = DEFAULT) -> dict[str, list[list[str]]]:
    """For each total object ``e`` and base cover ``S`` of ``p(e)``, the family ``{φ | p(φ) ∈ S}``."""
    T, p = g.total, g.projection
    B = g.indexed.base
    cov: dict[str, list[list[str]]] = {}
    for e in T.objects:
        c = p.ob(e)
        idx = B.into_index(c)
        for s in j.covering(c, guards):
            cov.setdefault(e, []).append([phi for phi in T.into(e) if s >> idx[p.ar(phi)] & 1])
    return cov


def giraud_topology(g: GrothTotal, j: Topology, guards: Guards = DEFAULT) -> Topology:
    """The least topology on the total making the projection a comorphism of sites."""
    if j.base is not g.indexed.base:
        raise InputError("base topology does not live on the base category")
    return generate_topology(g.total, lifted_coverage(g, j, guards), guards, name="giraud")


# -- right adjoint τ ----------------------------------------------------------------------


def fibre_terminal(fib: FinCategory) -> str | None:
    return next((x for x in fib.objects if is_terminal(fib, x)), None)


def tau_and_adjunction(g: GrothTotal) -> tuple[FinFunctor, VerificationReport]:
    """The right adjoint ``τ(X) = (X, 1)`` to the projection, with a counting check."""
    d, B, T = g.indexed, g.indexed.base, g.total
    tops = {}
    for c in B.objects:
        t = fibre_terminal(d.fibres[c])
        if t is None:
            raise PreconditionError(f"fibre over {c!r} has no terminal object", {"fibre": c})
        tops[c] = t
    for f, (s, t) in B.arrows.items():
        if d.ob(f, tops[t]) != tops[s]:
            raise PreconditionError(
                f"transition along {f!r} does not preserve the terminal object", {"arrow": f}
            )
    obj_map = {c: g.obj(c, tops[c]) for c in B.objects}
    arr_map = {}
    for f, (s, t) in B.arrows.items():
        arr_map[f] = g.arrow(f, d.fibres[s].id(tops[s]), tops[t])
    tau = FinFunctor(B, T, obj_map, arr_map, name=f"τ[{d.name}]")
    rep = VerificationReport(f"τ for {d.name}")
    rep.extend(check_functor(tau), "functor-")
    bad = None
    for e in T.objects:
        for c in B.objects:
            homs = T.hom(e, obj_map[c])
            images = sorted(g.projection.ar(h) for h in homs)
            if images != sorted(B.hom(g.projection.ob(e), c)):
                bad = {"object": e, "base": c, "total_arrows": len(homs), "base_arrows": len(B.hom(g.projection.ob(e), c))}
                break
        if bad:
            break
    rep.add("hom-bijection", bad is None, bad)
    # counit p∘τ = id, and τ is a section on the nose
    rep.add("projection-retracts", tau.then(g.projection).same_as(FinFunctor.identity(B)))
    return tau, rep


# -- morphisms of fibrations ---------------------------------------------------------------


@dataclass
class FibMorphism:
    source: GrothTotal
    target: GrothTotal
    components: dict[str, FinFunctor]   # base object c -> functor L(c) → L'(c)
    functor: FinFunctor
    name: str = ""


def total_functor(src: GrothTotal, dst: GrothTotal, components: Mapping[str, FinFunctor], name: str = "") -> FibMorphism:
    """The functor between totals induced by fibrewise functors commuting strictly with transitions."""
    d, e = src.indexed, dst.indexed
    if d.base is not e.base and d.base.arrows != e.base.arrows:
        raise InputError("fibrewise morphism between indexed categories over different bases")
    B = d.base
    for c in B.objects:
        if c not in components:
            raise InputError(f"no component over {c!r}")
    for f, (s, t) in B.arrows.items():
        for x in d.fibres[t].objects:
            lhs = components[s].ob(d.ob(f, x))
            rhs = e.ob(f, components[t].ob(x))
            if lhs != rhs:
                raise PreconditionError(
                    f"components do not commute with the transition along {f!r} at {x!r}",
                    {"arrow": f, "element": x, "via_source": lhs, "via_target": rhs},
                )
    obj_map = {o: dst.obj(c, components[c].ob(x)) for o, (c, x) in src.pairs.items()}
    arr_map = {}
    for a, (f, alpha, x) in src.arrow_data.items():
        s = B.dom(f)
        arr_map[a] = dst.arrow(f, components[s].ar(alpha), components[B.cod(f)].ob(x))
    F = FinFunctor(src.total, dst.total, obj_map, arr_map, name=name or "G(F)")
    return FibMorphism(src, dst, dict(components), F, name=name)


def fibrewise_cartesian(g: GrothTotal) -> bool:
    """Each fibre has a terminal object and pullbacks, preserved by every transition."""
    d = g.indexed
    for c, fib in d.fibres.items():
        if terminal(fib) is None:
            return False
    for f, (s, t) in d.base.arrows.items():
        F = d.transitions[f]
        if F.ob(fibre_terminal(d.fibres[t])) != fibre_terminal(d.fibres[s]):
            return False
        if not _preserves_pullbacks(F):
            return False
    return True


def _preserves_pullbacks(F: FinFunctor) -> bool:
    S, T = F.source, F.target
    for x in S.objects:
        for u, v in itertools.combinations_with_replacement(S.into(x), 2):
            lim = compute_limit(cospan(S, u, v))
            if lim is None:
                return False
            image = cospan(T, F.ar(u), F.ar(v))
            legs = {j: F.ar(a) for j, a in lim.legs}
            if not is_limit(image, F.ob(lim.apex), legs):
                return False
    return True


def fibration_morphism_report(m: FibMorphism) -> VerificationReport:
    src, dst, F = m.source, m.target, m.functor
    B = src.indexed.base
    rep = VerificationReport(f"fibration morphism {m.name}")
    rep.extend(check_functor(F), "functor-")
    rep.add("projection-commutes", F.then(dst.projection).same_as(src.projection))
    bad = None
    for a, t in sorted(src.tags.items()):
        if "cartesian" in t and not is_cartesian(dst, F.ar(a)):
            bad = {"arrow": a, "image": F.ar(a)}
            break
    rep.add("preserves-cartesian", bad is None, bad)

    base_cartesian = terminal(B) is not None and all(
        compute_limit(cospan(B, u, v)) is not None
        for x in B.objects
        for u, v in itertools.combinations_with_replacement(B.into(x), 2)
    )
    if not (base_cartesian and fibrewise_cartesian(src) and fibrewise_cartesian(dst)):
        rep.add_status("terminal-preserved", Status.NOT_CHECKED, detail="fibres or base not cartesian")
        rep.add_status("pullbacks-preserved", Status.NOT_CHECKED, detail="fibres or base not cartesian")
        return rep
    S, T = src.total, dst.total
    top = terminal(S)
    if top is None:
        rep.add("terminal-preserved", False, {"problem": "source total has no terminal object"}, bug=True)
    else:
        ok = is_terminal(T, F.ob(top))
        rep.add("terminal-preserved", ok, {"terminal": top, "image": F.ob(top)})
    bad = None
    for x in S.objects:
        for u, v in itertools.combinations_with_replacement(S.into(x), 2):
            lim = compute_limit(cospan(S, u, v))
            if lim is None:
                continue
            legs = {j: F.ar(a) for j, a in lim.legs}
            if not is_limit(cospan(T, F.ar(u), F.ar(v)), F.ob(lim.apex), legs):
                bad = {"cospan": [u, v], "apex": lim.apex}
                break
        if bad:
            break
    rep.add("pullbacks-preserved", bad is None, bad)
    return rep

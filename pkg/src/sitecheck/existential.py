"""Existential fibred sites: left adjoints to transitions, the relative
Beck-Chevalley and Frobenius conditions, and the existential topology.

Transposition along ``∃_f ⊣ L(f)``: an arrow ``α : x' → L(f)(x)`` in the fibre
over ``dom f`` corresponds to ``ᾱ : ∃_f(x') → x`` over ``cod f``, the unique
arrow with ``L(f)(ᾱ) ∘ η_f(x') = α``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

from .cat import FinCategory, FinFunctor, compute_limit, cospan, has_finite_limits
from .fibred import (
    FibMorphism,
    GrothTotal,
    IndexedCat,
    fibrewise_cartesian,
    giraud_topology,
    grothendieck_construction,
    is_cocartesian,
)
from .frames import canonical_topology, is_frame
from .guards import DEFAULT, Guards
from .report import GuardExceeded, InputError, PreconditionError, Status, VerificationReport
from .topology import (
    Topology,
    all_sieve_bits,
    can_enumerate,
    closed_sieves,
    close_bits,
    describe,
    generate_topology,
    image_bits,
    site_morphism_report,
    validate_topology,
)


class AdjointError(PreconditionError):
    """A transition functor has no left adjoint (or a supplied table is not one)."""


@dataclass
class Adjoints:
    """``exists[f] : L(dom f) → L(cod f)`` and units ``unit[f][x] : x → L(f)(∃_f x)``."""

    exists: dict[str, FinFunctor]
    unit: dict[str, dict[str, str]]

    def ex(self, f: str, x: str) -> str:
        return self.exists[f].obj_map[x]


def _initial_in_comma(d: IndexedCat, f: str, x: str):
    """Lexicographically first initial object ``(y, u : x → L(f)y)`` of ``(x ↓ L(f))``."""
    B = d.base
    src, tgt = B.dom(f), B.cod(f)
    Lf = d.transitions[f]
    fib_s, fib_t = d.fibres[src], d.fibres[tgt]
    objs = [(y, u) for y in fib_t.objects for u in fib_s.hom(x, Lf.ob(y))]
    for y, u in objs:
        ok = True
        for y2, u2 in objs:
            n = sum(1 for k in fib_t.hom(y, y2) if fib_s.comp(Lf.ar(k), u) == u2)
            if n != 1:
                ok = False
                break
        if ok:
            return y, u
    return None


def compute_adjoints(d: IndexedCat) -> Adjoints:
    """Left adjoints of every transition, built from initial objects of comma categories.

    Poset fibres take the direct route: ``∃_f(x)`` is the least ``y`` with
    ``x ≤ L(f)(y)``.
    """
    B = d.base
    exists: dict[str, FinFunctor] = {}
    unit: dict[str, dict[str, str]] = {}
    for f, (src, tgt) in B.arrows.items():
        fib_s, fib_t = d.fibres[src], d.fibres[tgt]
        Lf = d.transitions[f]
        if f == B.id(src):
            exists[f] = FinFunctor.identity(fib_s)
            unit[f] = {x: fib_s.id(x) for x in fib_s.objects}
            continue
        if fib_s.is_thin and fib_t.is_thin:
            omap, units = {}, {}
            for x in fib_s.objects:
                ups = [y for y in fib_t.objects if fib_s.hom(x, Lf.ob(y))]
                least = [y for y in ups if all(fib_t.hom(y, z) for z in ups)]
                if not least:
                    raise AdjointError(
                        f"L({f}) has no left adjoint: no least y with {x} ≤ L({f})(y)",
                        {"arrow": f, "element": x},
                    )
                omap[x] = least[0]
                units[x] = fib_s.hom(x, Lf.ob(least[0]))[0]
            exists[f] = FinFunctor.from_object_map(fib_s, fib_t, omap, name=f"∃({f})")
            unit[f] = units
            continue
        omap, units = {}, {}
        for x in fib_s.objects:
            found = _initial_in_comma(d, f, x)
            if found is None:
                raise AdjointError(
                    f"L({f}) has no left adjoint at {x!r}", {"arrow": f, "element": x}
                )
            omap[x], units[x] = found
        amap = {}
        for a, (x1, x2) in fib_s.arrows.items():
            target = fib_s.comp(units[x2], a)
            ks = [k for k in fib_t.hom(omap[x1], omap[x2]) if fib_s.comp(Lf.ar(k), units[x1]) == target]
            amap[a] = ks[0]
        exists[f] = FinFunctor(fib_s, fib_t, omap, amap, name=f"∃({f})")
        unit[f] = units
    return Adjoints(exists, unit)


def adjoints_from_tables(d: IndexedCat, tables: Mapping[str, Mapping[str, str]]) -> Adjoints:
    """Adjoint candidates for poset fibres from explicit element tables.

    Arrows without a table get the computed adjoint.  The result still has to
    pass ``check_adjunction``.
    """
    if not d.thin:
        raise InputError("explicit ∃ tables are only supported for poset fibres")
    computed = None
    B = d.base
    exists, unit = {}, {}
    for f, (src, tgt) in B.arrows.items():
        fib_s, fib_t = d.fibres[src], d.fibres[tgt]
        if f in tables:
            omap = dict(tables[f])
            for x in fib_s.objects:
                if x not in omap or omap[x] not in fib_t.objects:
                    raise InputError(f"∃ table of {f!r} is not a total map into the fibre over {tgt!r}")
            exists[f] = FinFunctor.from_object_map(fib_s, fib_t, omap, name=f"∃({f})")
            units = {}
            for x in fib_s.objects:
                hs = fib_s.hom(x, d.ob(f, omap[x]))
                if hs:
                    units[x] = hs[0]
            unit[f] = units
        else:
            if computed is None:
                computed = compute_adjoints(d)
            exists[f], unit[f] = computed.exists[f], computed.unit[f]
    return Adjoints(exists, unit)


def check_adjunction(d: IndexedCat, adj: Adjoints) -> VerificationReport:
    """``Hom(∃_f x, y) ≅ Hom(x, L(f) y)`` via ``k ↦ L(f)(k) ∘ η_f(x)``, for every ``f, x, y``."""
    rep = VerificationReport(f"adjunctions of {d.name}")
    B = d.base
    bad = None
    for f, (src, tgt) in B.arrows.items():
        fib_s, fib_t = d.fibres[src], d.fibres[tgt]
        Lf, Ef = d.transitions[f], adj.exists[f]
        for x in fib_s.objects:
            u = adj.unit[f].get(x)
            if u is None or fib_s.arrows[u] != (x, Lf.ob(Ef.ob(x))):
                bad = {"arrow": f, "element": x, "problem": "no unit arrow"}
                break
            for y in fib_t.objects:
                image = sorted(fib_s.comp(Lf.ar(k), u) for k in fib_t.hom(Ef.ob(x), y))
                if image != sorted(fib_s.hom(x, Lf.ob(y))):
                    bad = {"arrow": f, "element": x, "against": y}
                    break
            if bad:
                break
        if bad:
            break
    rep.add("adjunction", bad is None, bad)
    return rep


# -- the site ------------------------------------------------------------------------------


class ExistentialSite:
    """An indexed category with fibre topologies and verified left adjoints."""

    def __init__(
        self,
        indexed: IndexedCat,
        fibre_topologies: Mapping[str, Topology],
        adjoints: Adjoints | None = None,
        name: str = "",
        guards: Guards = DEFAULT,
    ):
        self.indexed = indexed
        self.name = name or indexed.name
        self.guards = guards
        for c in indexed.base.objects:
            if c not in fibre_topologies:
                raise InputError(f"no fibre topology over {c!r}")
            if fibre_topologies[c].base is not indexed.fibres[c]:
                raise InputError(f"fibre topology over {c!r} lives on a different category")
        self.topologies = {c: fibre_topologies[c] for c in indexed.base.objects}
        self.adjoints = adjoints if adjoints is not None else compute_adjoints(indexed)
        rep = check_adjunction(indexed, self.adjoints)
        if not rep.passed:
            w = rep["adjunction"].witness
            raise AdjointError(f"supplied ∃ is not left adjoint to the transition along {w['arrow']!r}", w)

    @property
    def base(self) -> FinCategory:
        return self.indexed.base

    def ex(self, f: str, x: str) -> str:
        return self.adjoints.ex(f, x)

    def unit(self, f: str, x: str) -> str:
        return self.adjoints.unit[f][x]

    def transpose(self, f: str, alpha: str, x: str) -> str:
        """``ᾱ : ∃_f(dom α) → x`` for ``α : x' → L(f)(x)``."""
        d = self.indexed
        src, tgt = self.base.dom(f), self.base.cod(f)
        fib_s, fib_t = d.fibres[src], d.fibres[tgt]
        x1 = fib_s.dom(alpha)
        u = self.unit(f, x1)
        for k in fib_t.hom(self.ex(f, x1), x):
            if fib_s.comp(d.ar(f, k), u) == alpha:
                return k
        raise AdjointError(f"no transpose of {alpha!r} along {f!r}", {"arrow": f, "fibre_arrow": alpha})

    @cached_property
    def groth(self) -> GrothTotal:
        g = grothendieck_construction(self.indexed)
        for aid, (f, alpha, x) in g.arrow_data.items():
            if alpha == self.unit(f, g.indexed.fibres[self.base.dom(f)].dom(alpha)) and x == self.ex(
                f, g.indexed.fibres[self.base.dom(f)].dom(alpha)
            ):
                g.tags[aid].add("cocartesian")
        return g

    @property
    def total(self) -> FinCategory:
        return self.groth.total

    @cached_property
    def _transpose_bits(self) -> dict[str, int]:
        """For each total arrow, the principal fibre sieve of its transpose."""
        g = self.groth
        out = {}
        for aid, (f, alpha, x) in g.arrow_data.items():
            fib = self.indexed.fibres[self.base.cod(f)]
            k = self.transpose(f, alpha, x)
            out[aid] = fib.principal(x)[fib.into_index(x)[k]]
        return out

    def transpose_sieve(self, e: str, bits: int) -> tuple[str, str, int]:
        """The fibre sieve generated by the transposes of a total sieve on ``e = (c, x)``."""
        c, x = self.groth.pairs[e]
        tb = self._transpose_bits
        out = 0
        for i, a in enumerate(self.total.into(e)):
            if bits >> i & 1:
                out |= tb[a]
        return c, x, out

    def ext_covers(self, e: str, bits: int) -> bool:
        c, x, fb = self.transpose_sieve(e, bits)
        return self.topologies[c].covers(x, fb)

    @cached_property
    def frame_valued(self) -> bool:
        """Every fibre is a frame carrying its canonical topology."""
        d = self.indexed
        if d.posets is None:
            return False
        for c in self.base.objects:
            p = d.posets[c]
            if not is_frame(p):
                return False
            try:
                can = canonical_topology(p, self.guards)
            except GuardExceeded:
                return False
            if can.base is not self.topologies[c].base:
                if any(
                    set(can.covering(x, self.guards)) != set(self.topologies[c].covering(x, self.guards))
                    for x in p.elements
                ):
                    return False
            elif not can.same_as(self.topologies[c], self.guards):
                return False
        return True

    @cached_property
    def cartesian(self) -> bool:
        """Base and fibres have finite limits preserved by the transitions."""
        return has_finite_limits(self.base) and fibrewise_cartesian(self.groth)

    def __repr__(self) -> str:
        return f"ExistentialSite({self.name})"


def fibred_site_report(s: ExistentialSite) -> VerificationReport:
    """The standing hypotheses: valid fibre topologies and cover-preserving transitions."""
    rep = VerificationReport(f"fibred site {s.name}")
    d, B, g = s.indexed, s.base, s.guards
    bad = None
    for c in B.objects:
        r = validate_topology(s.topologies[c], g)
        if not r.passed:
            bad = {"fibre": c, "failures": [x.to_dict() for x in r.failures]}
            break
    rep.add("fibre-topologies", bad is None, bad)
    bad = None
    for f, (src, tgt) in B.arrows.items():
        Lf = d.transitions[f]
        for x in d.fibres[tgt].objects:
            for b in s.topologies[tgt].covering(x, g):
                if not s.topologies[src].covers(Lf.ob(x), image_bits(Lf, x, b)):
                    bad = {"arrow": f, "cover": describe(d.fibres[tgt], x, b)}
                    break
            if bad:
                break
        if bad:
            break
    rep.add("transitions-cover-preserving", bad is None, bad)
    return rep


# -- relative Beck-Chevalley -------------------------------------------------------------


def _bc_span_family(s: ExistentialSite, c: str, d_: str, l: str) -> tuple[str, list[str]]:
    """Target ``L(d)(∃_c l)`` and the transposed span family, over the domain of ``d``."""
    B, L = s.base, s.indexed
    V, W = B.dom(c), B.dom(d_)
    ecl = s.ex(c, l)
    target = L.ob(d_, ecl)
    eta = s.unit(c, l)
    fam = []
    for U in B.objects:
        for a in B.hom(U, V):
            for b in B.hom(U, W):
                if B.comp(c, a) != B.comp(d_, b):
                    continue
                arrow = L.ar(a, eta)  # L(a)(l) → L(a)L(c)∃_c l = L(b)(target)
                fam.append(s.transpose(b, arrow, target))
    return target, fam


def check_relative_bc(s: ExistentialSite) -> VerificationReport:
    """Relative Beck-Chevalley over every cospan ``(c : V → Z, d : W → Z)`` and ``l`` over ``V``.

    The span-indexed family is compared with the equivalent sieve in the total
    (the pullback of the sieve generated by ``(c, η_c(l))`` along ``(d, 1)``),
    with the single pullback leg when the total has that pullback, and with the
    join formula when the fibres are frames with their canonical topology.
    """
    B, L, T = s.base, s.indexed, s.total
    g = s.groth
    rep = VerificationReport(f"relative Beck-Chevalley for {s.name}")
    first_fail = None
    disagreement = None
    forms_used = {"span"}
    for Z in B.objects:
        for c, d_ in itertools.product(B.into(Z), repeat=2):
            W = B.dom(d_)
            fibW = L.fibres[W]
            for l in L.fibres[B.dom(c)].objects:
                target, fam = _bc_span_family(s, c, d_, l)
                ok = s.topologies[W].covers_family(target, fam)
                if not ok and first_fail is None:
                    first_fail = {
                        "cospan": [c, d_],
                        "element": l,
                        "target": target,
                        "family": [fibW.dom(k) for k in fam],
                    }
                # sieve form in the total
                ecl = s.ex(c, l)
                top = g.obj(Z, ecl)
                horiz = g.arrow(d_, fibW.id(target), ecl)
                lift = g.arrow(c, s.unit(c, l), ecl)
                gen = T.principal(top)[T.into_index(top)[lift]]
                pulled = T.pullback_bits(horiz, gen)
                sieve_ok = s.ext_covers(g.obj(W, target), pulled)
                forms_used.add("sieve")
                if sieve_ok != ok and disagreement is None:
                    disagreement = {"form": "sieve", "cospan": [c, d_], "element": l}
                if s.frame_valued:
                    forms_used.add("join")
                    p = L.posets[W]
                    join_ok = p.join_all(fibW.dom(k) for k in fam) == target
                    if join_ok != ok and disagreement is None:
                        disagreement = {"form": "join", "cospan": [c, d_], "element": l}
                if s.cartesian:
                    lim = compute_limit(cospan(T, horiz, lift))
                    if lim is not None:
                        forms_used.add("pullback")
                        leg = lim.leg("0")
                        f, alpha, x = g.arrow_data[leg]
                        single = s.transpose(f, alpha, x)
                        single_ok = s.topologies[W].covers_family(target, [single])
                        if single_ok != ok and disagreement is None:
                            disagreement = {"form": "pullback", "cospan": [c, d_], "element": l}
    rep.add("relative-bc", first_fail is None, first_fail)
    rep.add("relative-bc-forms-agree", disagreement is None, disagreement, bug=True)
    rep.data["forms"] = sorted(forms_used)
    return rep


# -- relative Frobenius ---------------------------------------------------------------------


def _frobenius_family(s: ExistentialSite, f: str, l: str, alpha: str) -> list[str]:
    B, L = s.base, s.indexed
    E, E2 = B.dom(f), B.cod(f)
    fibE = L.fibres[E]
    l2 = L.fibres[E2].dom(alpha)
    Lf_alpha = L.ar(f, alpha)
    eta = s.unit(f, l)
    fam = []
    for m in fibE.objects:
        for rho in fibE.hom(m, l):
            right = fibE.comp(eta, rho)
            for delta in fibE.hom(m, L.ob(f, l2)):
                if fibE.comp(Lf_alpha, delta) == right:
                    fam.append(s.transpose(f, delta, l2))
    return fam


def check_relative_frobenius(s: ExistentialSite) -> VerificationReport:
    """Relative Frobenius over every ``f : E → E'``, ``l`` over ``E`` and ``α : l' → ∃_f(l)``.

    Cross-checked against the sieve ``(1, α)*⟨(f, η_f(l))⟩`` in the total, the
    single pullback leg on cartesian instances, and the equality
    ``∃_f(L(f)(l') ∧ l) = ∃_f(l) ∧ l'`` on frame-valued instances.
    """
    B, L, T = s.base, s.indexed, s.total
    g = s.groth
    rep = VerificationReport(f"relative Frobenius for {s.name}")
    first_fail = None
    disagreement = None
    forms_used = {"span"}
    for f, (E, E2) in B.arrows.items():
        fib2 = L.fibres[E2]
        for l in L.fibres[E].objects:
            efl = s.ex(f, l)
            for alpha in fib2.into(efl):
                l2 = fib2.dom(alpha)
                fam = _frobenius_family(s, f, l, alpha)
                ok = s.topologies[E2].covers_family(l2, fam)
                if not ok and first_fail is None:
                    first_fail = {"arrow": f, "element": l, "alpha": alpha, "family": [fib2.dom(k) for k in fam]}
                top = g.obj(E2, efl)
                vert = g.arrow(B.id(E2), alpha, efl)
                lift = g.arrow(f, s.unit(f, l), efl)
                gen = T.principal(top)[T.into_index(top)[lift]]
                sieve_ok = s.ext_covers(g.obj(E2, l2), T.pullback_bits(vert, gen))
                forms_used.add("sieve")
                if sieve_ok != ok and disagreement is None:
                    disagreement = {"form": "sieve", "arrow": f, "element": l, "alpha": alpha}
                if s.cartesian:
                    lim = compute_limit(cospan(T, vert, lift))
                    if lim is not None:
                        forms_used.add("pullback")
                        fa, al, x = g.arrow_data[lim.leg("0")]
                        single_ok = s.topologies[E2].covers_family(l2, [s.transpose(fa, al, x)])
                        if single_ok != ok and disagreement is None:
                            disagreement = {"form": "pullback", "arrow": f, "element": l, "alpha": alpha}
    rep.add("relative-frobenius", first_fail is None, first_fail)
    if s.frame_valued:
        forms_used.add("equality")
        eq_fail = frobenius_equality_violation(s)
        if (eq_fail is None) != (first_fail is None) and disagreement is None:
            disagreement = {"form": "equality", "equality_witness": eq_fail, "relative_witness": first_fail}
    rep.add("relative-frobenius-forms-agree", disagreement is None, disagreement, bug=True)
    rep.data["forms"] = sorted(forms_used)
    return rep


def frobenius_equality_violation(s: ExistentialSite):
    """First ``(a, l, l')`` with ``∃_a(L(a)(l') ∧ l) ≠ ∃_a(l) ∧ l'`` on frame fibres."""
    B, L = s.base, s.indexed
    for a, (E, E2) in B.arrows.items():
        pE, pE2 = L.posets[E], L.posets[E2]
        for l in pE.elements:
            for l2 in pE2.elements:
                lhs = s.ex(a, pE.meet(L.ob(a, l2), l))
                rhs = pE2.meet(s.ex(a, l), l2)
                if lhs != rhs:
                    return {"arrow": a, "element": l, "other": l2, "lhs": lhs, "rhs": rhs}
    return None


def beck_chevalley_violation(s: ExistentialSite):
    """First pullback square ``(a, b, c, d)`` and ``l`` with ``L(d)∃_c(l) ≠ ∃_b L(a)(l)`` (poset fibres)."""
    B, L = s.base, s.indexed
    for Z in B.objects:
        for c, d_ in itertools.product(B.into(Z), repeat=2):
            lim = compute_limit(cospan(B, c, d_))
            if lim is None:
                continue
            a, b = lim.leg("0"), lim.leg("1")
            for l in L.fibres[B.dom(c)].objects:
                lhs = L.ob(d_, s.ex(c, l))
                rhs = s.ex(b, L.ob(a, l))
                if not L.fibres[B.dom(d_)].isomorphic(lhs, rhs):
                    return {"cospan": [c, d_], "pullback": [a, b], "element": l, "lhs": lhs, "rhs": rhs}
    return None


# -- the existential topology -----------------------------------------------------------------


def existential_topology(s: ExistentialSite) -> tuple[Topology, VerificationReport]:
    """The existential covering rule on the total, validated, with the
    topology ⟺ (relative BC ∧ relative Frobenius) biconditional asserted when
    the fibred-site hypotheses hold."""
    T = s.total
    g = s.guards
    if can_enumerate(T, g):
        covers = {e: [b for b in all_sieve_bits(T, e, g) if s.ext_covers(e, b)] for e in T.objects}
        top = Topology(T, covers, name="existential")
    else:
        top = Topology(T, predicate=s.ext_covers, name="existential")
    rep = VerificationReport(f"existential topology of {s.name}")
    val = validate_topology(top, g)
    rep.extend(val, "topology-")
    bc = check_relative_bc(s)
    fr = check_relative_frobenius(s)
    rep.extend(bc)
    rep.extend(fr)
    hyp = fibred_site_report(s)
    rep.extend(hyp, "hypothesis-")
    is_top = all(c.ok for c in val.checks)
    cond = bc["relative-bc"].ok and fr["relative-frobenius"].ok
    if not hyp.passed:
        for name in ("existential-biconditional", "existential-characterization"):
            rep.add_status(name, Status.NOT_CHECKED, detail="fibred-site hypotheses fail")
    elif any(c.status == Status.SAMPLED for c in val.checks):
        for name in ("existential-biconditional", "existential-characterization"):
            rep.add_status(name, Status.INCONCLUSIVE, {"guard": "sieves"}, "topology only sampled")
    else:
        opn = open_violation(s)
        facts = {
            "topology": is_top,
            "relative-bc": bc["relative-bc"].ok,
            "relative-frobenius": fr["relative-frobenius"].ok,
            "open": opn is None,
        }
        # BC and Frobenius alone do not give transitivity: the rule is a
        # topology exactly when, in addition, every ∃_f preserves covers.
        detail = "" if is_top == cond else "∃ is not cover-preserving" if opn is not None else ""
        rep.add("existential-biconditional", is_top == cond, dict(facts, open_witness=opn), detail)
        rep.add("existential-characterization", is_top == (cond and opn is None), facts, bug=True)
    return top, rep


# -- derived predicates -----------------------------------------------------------------------


def is_prestack(s: ExistentialSite, j: Topology):
    """Poset fibres: ``L(f)x ≤ L(f)y`` for all ``f`` in a ``j``-cover forces ``x ≤ y``.

    Returns ``None`` or a witness."""
    B, L = s.base, s.indexed
    for c in B.objects:
        fib = L.fibres[c]
        for cov in j.covering(c, s.guards):
            arrows = B.bits_to_arrows(c, cov)
            for x in fib.objects:
                for y in fib.objects:
                    if fib.hom(x, y):
                        continue
                    if all(L.fibres[B.dom(f)].hom(L.ob(f, x), L.ob(f, y)) for f in arrows):
                        return {"object": c, "cover": list(arrows), "pair": [x, y]}
    return None


def _closure_generator(top: Topology, fib: FinCategory, x: str, bits: int) -> str | None:
    cl = close_bits(top, x, bits)
    for i, a in enumerate(fib.into(x)):
        if fib.principal(x)[i] == cl:
            return fib.dom(a)
    return None


def reflecting_linearization_violation(s: ExistentialSite):
    """Poset fibres: closed sieves are principal and transitions carry the
    generator of a closure to the generator of the closure of the image."""
    B, L, g = s.base, s.indexed, s.guards
    if not L.thin:
        return {"problem": "only poset fibres are supported"}
    for c in B.objects:
        fib, top = L.fibres[c], s.topologies[c]
        for x in fib.objects:
            for t in closed_sieves(top, x, g):
                if not any(p == t for p in fib.principal(x)):
                    return {"fibre": c, "closed_sieve": describe(fib, x, t)}
    for f, (src, tgt) in B.arrows.items():
        fib_t, Lf = L.fibres[tgt], L.transitions[f]
        for x in fib_t.objects:
            for bits in all_sieve_bits(fib_t, x, g):
                gen = _closure_generator(s.topologies[tgt], fib_t, x, bits)
                img = _closure_generator(s.topologies[src], L.fibres[src], Lf.ob(x), image_bits(Lf, x, bits))
                if Lf.ob(gen) != img:
                    return {"arrow": f, "sieve": describe(fib_t, x, bits), "image_of_generator": Lf.ob(gen), "generator_of_image": img}
    return None


def j_reflecting_violation(s: ExistentialSite, j: Topology):
    """Every family ``S`` generating a ``j``-cover and fibre sieve ``T``: if each
    ``L(f)(T)`` covers, ``T`` covers."""
    B, L, g = s.base, s.indexed, s.guards
    for c in B.objects:
        into = B.into(c)
        fib = L.fibres[c]
        fibre_sieves = {x: all_sieve_bits(fib, x, g) for x in fib.objects}
        for r in range(len(into) + 1):
            for fam in itertools.combinations(into, r):
                if not j.covers(c, B.generated_bits(c, fam)):
                    continue
                for x in fib.objects:
                    for t in fibre_sieves[x]:
                        if s.topologies[c].covers(x, t):
                            continue
                        if all(
                            s.topologies[B.dom(f)].covers(L.ob(f, x), image_bits(L.transitions[f], x, t))
                            for f in fam
                        ):
                            return {"object": c, "family": list(fam), "fibre_sieve": describe(fib, x, t)}
    return None


def open_violation(s: ExistentialSite):
    """``None`` if every ``∃_f`` is cover-preserving, else the first offending cover."""
    B, L, g = s.base, s.indexed, s.guards
    for f, (src, tgt) in B.arrows.items():
        Ef = s.adjoints.exists[f]
        for x in L.fibres[src].objects:
            for b in s.topologies[src].covering(x, g):
                if not s.topologies[tgt].covers(Ef.ob(x), image_bits(Ef, x, b)):
                    return {"arrow": f, "cover": describe(L.fibres[src], x, b)}
    return None


def existential_site_report(s: ExistentialSite, j: Topology) -> VerificationReport:
    """Open, J-reflecting, reflecting linearization, Giraud containment and the implications between them."""
    if j.base is not s.base:
        raise InputError("base topology does not live on the base category")
    L, g = s.indexed, s.guards
    rep = VerificationReport(f"existential site {s.name}")

    bad = open_violation(s)
    rep.add("open", bad is None, bad)

    jr = j_reflecting_violation(s, j)
    rep.add("j-reflecting", jr is None, jr)

    if L.thin:
        rl = reflecting_linearization_violation(s)
        rep.add("reflecting-linearization", rl is None, rl)
        ps = is_prestack(s, j)
        rep.add("prestack", ps is None, ps)
    else:
        rl = ps = {"problem": "not checked"}
        rep.add_status("reflecting-linearization", Status.NOT_CHECKED, detail="poset fibres only")
        rep.add_status("prestack", Status.NOT_CHECKED, detail="poset fibres only")

    ext, ext_rep = existential_topology(s)
    gir = giraud_topology(s.groth, j, g)
    witness = gir.contained_in(ext, g)
    rep.add("giraud-contained", witness is None, witness)

    ext_valid = all(c.ok for c in ext_rep.checks if c.name.startswith("topology-"))
    if L.thin:
        rep.add(
            "implication-linearization",
            not (rl is None and ps is None) or jr is None,
            {"reflecting-linearization": rl is None, "prestack": ps is None, "j-reflecting": jr is None},
            bug=True,
        )
    if ext_valid and fibred_site_report(s).passed:
        rep.add(
            "implication-giraud",
            jr is not None or witness is None,
            {"j-reflecting": jr is None, "giraud-contained": witness is None},
            bug=True,
        )
    else:
        rep.add_status("implication-giraud", Status.NOT_CHECKED, detail="existential rule is not a topology")
    return rep


# -- cocartesian factorization and generation -----------------------------------------------------


def factor_cocartesian_vertical(s: ExistentialSite, arrow: str) -> tuple[str, str]:
    """Split ``(e, α) : (E', l') → (E, l)`` as ``(1_E, ᾱ) ∘ (e, η_e(l'))``."""
    g = s.groth
    if arrow not in g.arrow_data:
        raise InputError(f"{arrow!r} is not an arrow of the total")
    f, alpha, x = g.arrow_data[arrow]
    src = s.indexed.fibres[s.base.dom(f)].dom(alpha)
    ex = s.ex(f, src)
    coc = g.arrow(f, s.unit(f, src), ex)
    vert = g.arrow(s.base.id(s.base.cod(f)), s.transpose(f, alpha, x), x)
    if s.total.comp(vert, coc) != arrow:
        raise AssertionError(f"factorization of {arrow} does not compose back")
    return coc, vert


def cocartesian_coverage(s: ExistentialSite) -> dict[str, list[list[str]]]:
    """Vertical covering families plus singleton cocartesian lifts ``(e, η_e(l'))``."""
    g, B, L = s.groth, s.base, s.indexed
    cov: dict[str, list[list[str]]] = {}
    for (c, x), e in g.ids.items():
        fib = L.fibres[c]
        for b in s.topologies[c].covering(x, s.guards):
            cov.setdefault(e, []).append([g.arrow(B.id(c), a, x) for a in fib.bits_to_arrows(x, b)])
    for f, (src, tgt) in B.arrows.items():
        if f == B.id(src):
            continue
        for x in L.fibres[src].objects:
            ex = s.ex(f, x)
            cov.setdefault(g.obj(tgt, ex), []).append([g.arrow(f, s.unit(f, x), ex)])
    return cov


def check_coorthogonal_generation(
    s: ExistentialSite, t: Topology, j: Topology | None = None, include_cocartesian: bool = True
) -> VerificationReport:
    """The topology generated by vertical covers and cocartesian singletons equals ``t``;
    ``t`` contains the co-Giraud covers lifted from ``j``."""
    g = s.guards
    rep = VerificationReport(f"co-orthogonal generation for {s.name}")
    cov = cocartesian_coverage(s)
    if not include_cocartesian:
        cov = {e: [fam for fam in fams if all(s.groth.is_vertical(a) for a in fam)] for e, fams in cov.items()}
    gen = generate_topology(s.total, cov, g, name="co-orthogonal")
    missing = gen.contained_in(t, g)
    extra = t.contained_in(gen, g)
    rep.add("generated-equals-existential", missing is None and extra is None,
            {"only_generated": missing, "only_existential": extra})
    bad = next((a for a, tags in sorted(s.groth.tags.items()) if "cocartesian" in tags and not is_cocartesian(s.groth, a)), None)
    rep.add("cocartesian-tags", bad is None, {"arrow": bad}, bug=True)
    if j is not None:
        rep.extend(_co_giraud_check(s, t, j))
    return rep


def _co_giraud_check(s: ExistentialSite, t: Topology, j: Topology) -> VerificationReport:
    B, L, gd, T = s.base, s.indexed, s.groth, s.total
    rep = VerificationReport("co-giraud")
    bad = None
    budget = s.guards.search
    for c in B.objects:
        for cov in j.covering(c, s.guards):
            arrows = B.bits_to_arrows(c, cov)
            for y in L.fibres[c].objects:
                choices = [[x for x in L.fibres[B.dom(f)].objects if s.ex(f, x) == y] for f in arrows]
                if any(not ch for ch in choices):
                    continue
                for pick in itertools.product(*choices):
                    budget -= 1
                    if budget < 0:
                        rep.add_status("co-giraud-contained", Status.INCONCLUSIVE, {"guard": "search"})
                        return rep
                    fam = [gd.arrow(f, s.unit(f, x), y) for f, x in zip(arrows, pick)]
                    e = gd.obj(c, y)
                    if not t.covers(e, T.generated_bits(e, fam)):
                        bad = {"object": e, "family": fam}
                        break
                if bad:
                    break
            if bad:
                break
        if bad:
            break
    rep.add("co-giraud-contained", bad is None, bad)
    return rep


# -- morphisms ------------------------------------------------------------------------------------


def _natural_iso(F: FinFunctor, G: FinFunctor, guards: Guards):
    """Some natural isomorphism ``F ≅ G`` as components, or ``None``."""
    S, T = F.source, F.target
    objs = list(S.objects)
    options = []
    for x in objs:
        isos = [a for a in T.hom(F.ob(x), G.ob(x)) if T.is_iso(a)]
        if not isos:
            return None
        options.append(isos)
    budget = guards.search
    for comps in itertools.product(*options):
        budget -= 1
        if budget < 0:
            raise GuardExceeded("search", "natural isomorphism search exceeded the budget")
        theta = dict(zip(objs, comps))
        if all(
            T.comp(theta[y], F.ar(a)) == T.comp(G.ar(a), theta[x])
            for a, (x, y) in S.arrows.items()
        ):
            return theta
    return None


def check_existential_morphism(m: FibMorphism, s1: ExistentialSite, s2: ExistentialSite) -> VerificationReport:
    """Fibrewise morphisms of sites, ∃-squares commuting up to isomorphism, and
    the induced total functor as a morphism of the existential sites."""
    if s1.base.arrows != s2.base.arrows:
        raise InputError("existential sites over different bases")
    B, g = s1.base, s1.guards
    rep = VerificationReport(f"existential morphism {m.name}")
    bad = None
    for c in B.objects:
        r = site_morphism_report(m.components[c], s1.topologies[c], s2.topologies[c], g)
        fails = [x.name for x in r.checks if x.name in ("cover-preserving", "covering-flat") and not x.ok]
        if fails:
            bad = {"object": c, "failures": fails}
            break
    rep.add("fibrewise-morphism-of-sites", bad is None, bad)

    bad = None
    inconclusive = None
    for a, (src, tgt) in B.arrows.items():
        lhs = s1.adjoints.exists[a].then(m.components[tgt])
        rhs = m.components[src].then(s2.adjoints.exists[a])
        try:
            theta = _natural_iso(lhs, rhs, g)
        except GuardExceeded as e:
            inconclusive = e
            break
        if theta is None:
            x = next((x for x in lhs.source.objects if not lhs.target.isomorphic(lhs.ob(x), rhs.ob(x))), None)
            bad = {"arrow": a, "element": x,
                   "component_after_exists": lhs.ob(x) if x else None,
                   "exists_after_component": rhs.ob(x) if x else None}
            break
    if inconclusive is not None:
        rep.add_status("exists-squares", Status.INCONCLUSIVE, {"guard": inconclusive.guard}, str(inconclusive))
    else:
        rep.add("exists-squares", bad is None, bad)

    t1, _ = existential_topology(s1)
    t2, _ = existential_topology(s2)
    r = site_morphism_report(m.functor, t1, t2, g)
    fails = [x.name for x in r.checks if x.name in ("cover-preserving", "covering-flat") and not x.ok]
    rep.add("total-morphism-of-sites", not fails, {"failures": fails,
            "witnesses": {x.name: x.witness for x in r.checks if x.name in fails}})
    return rep

"""Internal locales, ideal completions (plain and fibred), and the fibre sites ``G_c^ext``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping

from .cat import FinCategory, FinFunctor, build_comma, has_finite_limits
from .existential import (
    AdjointError,
    ExistentialSite,
    adjoints_from_tables,
    beck_chevalley_violation,
    check_relative_bc,
    check_relative_frobenius,
    frobenius_equality_violation,
)
from .fibred import GrothTotal, IndexedCat, giraud_topology, validate_indexed
from .frames import (
    FiniteFrame,
    canonical_topology,
    frame_hom_violation,
    frame_homs,
    validate_frame,
)
from .guards import DEFAULT, Guards
from .presheaf import (
    FinPresheaf,
    Subpresheaf,
    close_subpresheaf,
    closed_subobject_frame,
    hom_presheaf,
    sheaf_report,
)
from .report import GuardExceeded, InputError, PreconditionError, Status, VerificationReport
from .topology import Topology, all_sieve_bits, can_enumerate, comorphism_report, describe, trivial_topology


# -- internal locale candidates --------------------------------------------------------------


@dataclass
class InternalLocaleCandidate:
    """A frame per base object, a frame map per arrow (``L(f) : L(cod f) → L(dom f)``),
    optional ``∃`` tables, and the base topology used for the sheaf condition."""

    base: FinCategory
    topology: Topology
    frames: dict[str, FiniteFrame]
    transitions: dict[str, dict[str, str]]
    exists: dict[str, dict[str, str]] | None = None
    name: str = ""

    def __post_init__(self):
        if self.topology.base is not self.base:
            raise InputError("base topology does not live on the base category")
        for c in self.base.objects:
            if c not in self.frames:
                raise InputError(f"no frame over {c!r}")

    def indexed(self) -> IndexedCat:
        return IndexedCat.of_posets(self.base, self.frames, self.transitions, name=self.name)

    def site(self, guards: Guards = DEFAULT) -> ExistentialSite:
        """The fibred site with canonical fibre topologies (raises ``AdjointError`` without adjoints)."""
        d = self.indexed()
        tops = {c: canonical_topology(self.frames[c], guards) for c in self.base.objects}
        adj = adjoints_from_tables(d, self.exists) if self.exists else None
        return ExistentialSite(d, tops, adj, name=self.name, guards=guards)

    def underlying_presheaf(self) -> FinPresheaf:
        return FinPresheaf(
            self.base,
            {c: self.frames[c].elements for c in self.base.objects},
            self.transitions,
            name=f"|{self.name}|",
        )


def internal_locale_report(l: InternalLocaleCandidate, guards: Guards = DEFAULT) -> VerificationReport:
    """Frames and frame homomorphisms with left adjoints, the sheaf condition,
    Beck-Chevalley on pullback squares, Frobenius reciprocity, and the
    span-form relative conditions; on cartesian bases the two pairs of
    conditions must agree."""
    rep = VerificationReport(f"internal locale {l.name}")
    bad = None
    for c in l.base.objects:
        r = validate_frame(l.frames[c])
        if not r.passed:
            bad = {"object": c, "failures": [x.to_dict() for x in r.failures]}
            break
    rep.add("frames", bad is None, bad)
    if bad is not None:
        for name in ("frame-homs", "functorial", "adjoints", "sheaf", "beck-chevalley", "frobenius",
                     "relative-bc", "relative-frobenius", "conditions-agree"):
            rep.add_status(name, Status.NOT_CHECKED, detail="fibres are not frames")
        return rep

    bad = None
    for f, (src, tgt) in l.base.arrows.items():
        v = frame_hom_violation(l.transitions.get(f, {x: x for x in l.frames[tgt].elements}), l.frames[tgt], l.frames[src])
        if v is not None:
            bad = dict(v, arrow=f)
            break
    rep.add("frame-homs", bad is None, bad)

    try:
        d = l.indexed()
        vi = validate_indexed(d)
        rep.add("functorial", vi.passed, None if vi.passed else [x.to_dict() for x in vi.failures])
    except InputError as e:
        rep.add("functorial", False, {"problem": str(e)})
        return rep

    sh = sheaf_report(l.topology, l.underlying_presheaf(), guards)
    rep.add("sheaf", sh["sheaf"].ok, sh["sheaf"].witness)

    try:
        s = l.site(guards)
    except AdjointError as e:
        rep.add("adjoints", False, e.witness, str(e))
        for name in ("beck-chevalley", "frobenius", "relative-bc", "relative-frobenius", "conditions-agree"):
            rep.add_status(name, Status.NOT_CHECKED, detail="no left adjoints")
        return rep
    rep.add("adjoints", True)

    bc = beck_chevalley_violation(s)
    rep.add("beck-chevalley", bc is None, bc)
    fr = frobenius_equality_violation(s)
    rep.add("frobenius", fr is None, fr)
    rbc = check_relative_bc(s)
    rfr = check_relative_frobenius(s)
    rep.add_status("relative-bc", rbc["relative-bc"].status, rbc["relative-bc"].witness)
    rep.add_status("relative-frobenius", rfr["relative-frobenius"].status, rfr["relative-frobenius"].witness)
    for name in ("relative-bc-forms-agree", "relative-frobenius-forms-agree"):
        src_rep = rbc if name in rbc else rfr
        if name in src_rep and not src_rep[name].ok:
            rep.add(name, False, src_rep[name].witness, bug=True)
    if has_finite_limits(l.base):
        absolute = bc is None and fr is None
        relative = rbc["relative-bc"].ok and rfr["relative-frobenius"].ok
        rep.add(
            "conditions-agree",
            absolute == relative,
            {"beck-chevalley+frobenius": absolute, "relative-bc+relative-frobenius": relative},
            bug=True,
        )
    else:
        rep.add_status("conditions-agree", Status.NOT_CHECKED, detail="base is not cartesian")
    return rep


# -- plain ideal completion ---------------------------------------------------------------------


def _set_name(s) -> str:
    return "{" + ",".join(sorted(s)) + "}"


@dataclass
class FrameOfIdeals:
    """``decode[name]`` is the ideal (a down-set of the source) an element names;
    ``canonical[x]`` is the closure of the principal ideal of ``x``."""

    frame: FiniteFrame
    decode: dict[str, frozenset[str]]
    canonical: dict[str, str]
    source: FinCategory
    mode: str = "exhaustive"

    def canonical_is_iso(self) -> dict[str, str] | None:
        """The canonical map as an order isomorphism, when it is one."""
        vals = set(self.canonical.values())
        if len(vals) != len(self.canonical) or vals != set(self.frame.elements):
            return None
        c = self.canonical
        if not all(self.source.leq(a, b) == self.frame.leq(c[a], c[b]) for a in c for b in c):
            return None
        return dict(c)


def _ideal_closure(p: FinCategory, k: Topology, s: frozenset[str]) -> frozenset[str]:
    """Least ideal containing ``s``: down-close, then add every object with a cover inside, repeat."""
    cur = set()
    for x in s:
        cur |= {p.dom(a) for a in p.into(x)}
    changed = True
    while changed:
        changed = False
        for x in p.objects:
            if x in cur:
                continue
            inside = 0
            for i, a in enumerate(p.into(x)):
                if p.dom(a) in cur:
                    inside |= 1 << i
            if k.covers(x, inside):
                cur |= {p.dom(a) for a in p.into(x)}
                changed = True
    return frozenset(cur)


def ideal_completion(p: FinCategory, k: Topology, guards: Guards = DEFAULT) -> FrameOfIdeals:
    """``k``-ideals of a preorder: down-sets containing every object they cover."""
    if not p.is_thin:
        raise InputError(f"{p.name} is not a preorder")
    if k.base is not p:
        raise InputError("topology does not live on the preorder")
    if len(p.objects) <= guards.ideals:
        ideals = set()
        objs = list(p.objects)
        for r in range(len(objs) + 1):
            for comb in itertools.combinations(objs, r):
                s = frozenset(comb)
                if _ideal_closure(p, k, s) == s:
                    ideals.add(s)
        mode = "exhaustive"
    else:
        mode = "generators"
        ideals = {_ideal_closure(p, k, frozenset())}
        frontier = {_ideal_closure(p, k, frozenset([x])) for x in p.objects}
        ideals |= frontier
        while frontier:
            new = {
                j for a in frontier for b in list(ideals)
                if (j := _ideal_closure(p, k, a | b)) not in ideals
            }
            ideals |= new
            frontier = new
    decode = {_set_name(i): i for i in ideals}
    frame = FiniteFrame(decode, [(a, b) for a in decode for b in decode if decode[a] <= decode[b]], name=f"Id({p.name})")
    canonical = {x: _set_name(_ideal_closure(p, k, frozenset([x]))) for x in p.objects}
    return FrameOfIdeals(frame, decode, canonical, p, mode)


def covers_to_joins_violation(p: FinCategory, k: Topology, ideals: FrameOfIdeals, guards: Guards = DEFAULT):
    """``None`` if the canonical map sends every ``k``-cover to a join."""
    for x in p.objects:
        for b in k.covering(x, guards):
            doms = [p.dom(a) for a in p.bits_to_arrows(x, b)]
            j = ideals.frame.join_all(ideals.canonical[d] for d in doms)
            if j != ideals.canonical[x]:
                return {"cover": describe(p, x, b), "join": j, "image": ideals.canonical[x]}
    return None


# -- fibred ideal completion ------------------------------------------------------------------


@dataclass
class FibredCompletion:
    """``locale`` is the fibred ideal completion; ``unit[c][x]`` names the element
    ``η(c)(x)``; ``decode[c]`` maps element names to closed subpresheaves."""

    locale: InternalLocaleCandidate
    unit: dict[str, dict[str, str]]
    decode: dict[str, dict[str, Subpresheaf]]
    report: VerificationReport = field(default_factory=lambda: VerificationReport("fibred completion"))


def _ambient_frames(g: GrothTotal, K: Topology, guards: Guards):
    if K.base is not g.total:
        raise InputError("total topology does not live on the given Grothendieck construction")
    B = g.indexed.base
    presheaves = {c: hom_presheaf(g.projection, c) for c in B.objects}
    frames = {c: closed_subobject_frame(K, presheaves[c], guards) for c in B.objects}
    return presheaves, frames


def fibred_ideal_completion(
    g: GrothTotal, K: Topology, J: Topology, guards: Guards = DEFAULT, check_giraud: bool = True
) -> FibredCompletion:
    """Closed subobjects of ``Hom(p(-), c)`` per base object, with pullback
    transitions, closed direct images as ``∃``, and the unit
    ``x ↦ closure of {g : c' → c | x' ≤ L(g)(x)}``."""
    P = g.indexed
    if not P.thin:
        raise InputError("fibred ideal completion needs poset fibres")
    B = P.base
    if J.base is not B:
        raise InputError("base topology does not live on the base category")
    presheaves, frames = _ambient_frames(g, K, guards)
    if check_giraud:
        w = giraud_topology(g, J, guards).contained_in(K, guards)
        if w is not None:
            raise PreconditionError("total topology does not contain the Giraud topology", w)

    transitions: dict[str, dict[str, str]] = {}
    exists: dict[str, dict[str, str]] = {}
    for f, (c1, c) in B.arrows.items():
        src, tgt = frames[c1], frames[c]
        H1 = presheaves[c1]
        m = {}
        for name, sub in tgt.decode.items():
            parts = {e: {h for h in H1.sections[e] if B.comp(f, h) in sub.at(e)} for e in g.total.objects}
            m[name] = src.encode(Subpresheaf.of(H1, parts))
        transitions[f] = m
        H = presheaves[c]
        ex = {}
        for name, sub in src.decode.items():
            parts = {e: {B.comp(f, h) for h in sub.at(e)} for e in g.total.objects}
            ex[name] = tgt.encode(close_subpresheaf(K, Subpresheaf.of(H, parts)))
        exists[f] = ex

    unit: dict[str, dict[str, str]] = {}
    for c in B.objects:
        H = presheaves[c]
        unit[c] = {}
        for x in P.fibres[c].objects:
            parts = {}
            for e in g.total.objects:
                c2, x2 = g.pairs[e]
                parts[e] = {h for h in H.sections[e] if P.fibres[c2].leq(x2, P.ob(h, x))}
            unit[c][x] = frames[c].encode(close_subpresheaf(K, Subpresheaf.of(H, parts)))

    locale = InternalLocaleCandidate(
        B, J, {c: frames[c].frame for c in B.objects}, transitions, exists, name=f"Id({P.name})"
    )
    rep = VerificationReport(f"fibred ideal completion of {P.name}")
    rep.data["modes"] = {c: frames[c].mode for c in B.objects}
    return FibredCompletion(locale, unit, {c: frames[c].decode for c in B.objects}, rep)


def check_completion(
    g: GrothTotal, K: Topology, J: Topology, fc: FibredCompletion, guards: Guards = DEFAULT
) -> VerificationReport:
    """The completion is an internal locale over ``J``, the unit is an indexed
    monotone map, and the frames do not depend on ``J``."""
    P = g.indexed
    rep = VerificationReport(f"fibred ideal completion of {P.name}")
    rep.extend(internal_locale_report(fc.locale, guards), "locale-")
    B = P.base
    bad = None
    for c in B.objects:
        fr, u = fc.locale.frames[c], fc.unit[c]
        for a, b in P.posets[c].order_pairs():
            if not fr.leq(u[a], u[b]):
                bad = {"object": c, "pair": [a, b]}
                break
        if bad:
            break
    rep.add("unit-monotone", bad is None, bad)
    bad = None
    for f, (c1, c) in B.arrows.items():
        for x in P.posets[c].elements:
            lhs = fc.locale.transitions[f][fc.unit[c][x]]
            rhs = fc.unit[c1][P.ob(f, x)]
            if lhs != rhs:
                bad = {"arrow": f, "element": x, "transition-of-unit": lhs, "unit-of-transition": rhs}
                break
        if bad:
            break
    rep.add("unit-natural", bad is None, bad)
    other = fibred_ideal_completion(g, K, trivial_topology(B), guards, check_giraud=False)
    same = all(
        other.locale.frames[c].order_pairs() == fc.locale.frames[c].order_pairs() for c in B.objects
    ) and other.locale.transitions == fc.locale.transitions and other.unit == fc.unit
    rep.add("independent-of-base-topology", same)
    return rep


def unit_isomorphism(P: IndexedCat, fc: FibredCompletion) -> dict[str, dict[str, str]] | None:
    """The unit as fibrewise order isomorphisms, when it is one."""
    out = {}
    for c in P.base.objects:
        u = fc.unit[c]
        fr = fc.locale.frames[c]
        if len(set(u.values())) != len(u) or set(u.values()) != set(fr.elements):
            return None
        if not all(P.posets[c].leq(a, b) == fr.leq(u[a], u[b]) for a in u for b in u):
            return None
        out[c] = dict(u)
    return out


# -- the fibre sites G_c^ext ----------------------------------------------------------------------


@dataclass
class FibreSite:
    """``G_c^ext(L)`` with ``J̃_c``, the projection to the total, ``i_c`` and ``ext_c``."""

    obj: str
    category: FinCategory
    topology: Topology
    projection: FinFunctor
    inclusion: FinFunctor
    ext: FinFunctor
    pairs: dict[str, tuple[str, str]]


def fibre_site(s: ExistentialSite, c: str) -> FibreSite:
    """Objects ``((d, y), f : d → c)``; ``J̃_c`` is induced from the existential topology."""
    if not s.indexed.thin:
        raise InputError("fibre sites are built for poset fibres")
    B, L, g = s.base, s.indexed, s.groth
    comma = build_comma(g.projection, c)
    G = comma.category

    def pred(o: str, bits: int) -> bool:
        e, _ = comma.pairs[o]
        tb = 0
        into_e = s.total.into_index(e)
        for a in G.bits_to_arrows(o, bits):
            tb |= 1 << into_e[comma.arrow_pairs[a][0]]
        return s.ext_covers(e, tb)

    if can_enumerate(G, s.guards):
        jt = Topology(G, {o: [b for b in all_sieve_bits(G, o, s.guards) if pred(o, b)] for o in G.objects}, name="J~")
    else:
        jt = Topology(G, predicate=pred, name="J~")

    fib = L.fibres[c]
    idc = B.id(c)
    inc_obj = {x: comma.ids[(g.obj(c, x), idc)] for x in fib.objects}
    inc_arr = {}
    for k, (x, x2) in fib.arrows.items():
        inc_arr[k] = f"({g.arrow(idc, k, x2)},{idc})"
    inclusion = FinFunctor(fib, G, inc_obj, inc_arr, name=f"i_{c}")

    ext_obj = {}
    for o, (e, f) in comma.pairs.items():
        d, y = g.pairs[e]
        ext_obj[o] = s.ex(f, y)
    ext = FinFunctor.from_object_map(G, fib, ext_obj, name=f"ext_{c}")
    return FibreSite(c, G, jt, comma.projection, inclusion, ext, {o: (g.pairs[e], f) for o, (e, f) in comma.pairs.items()})


def fibre_site_report(s: ExistentialSite, c: str, site: FibreSite | None = None) -> VerificationReport:
    """Comorphism ``p_c``, the hyperconnected criterion for ``i_c``, ``ext_c ∘ i_c = 1``,
    ``ext_c ⊣ i_c``, and compatibility of ``ext`` with composition along base arrows.

    ``site`` replaces the constructed fibre site (used to test altered ``J̃_c``)."""
    fs = site if site is not None else fibre_site(s, c)
    jt = fs.topology
    if jt.base is not fs.category or fs.obj != c:
        raise InputError("fibre site does not match its topology or base object")
    g, L, B = s.groth, s.indexed, s.base
    ext_top = Topology(s.total, predicate=s.ext_covers, name="existential")
    rep = VerificationReport(f"fibre site of {s.name} at {c}")

    pr = comorphism_report(fs.projection, jt, ext_top, s.guards)
    rep.add_status("projection-cover-lifting", pr["cover-lifting"].status, pr["cover-lifting"].witness)

    ir = comorphism_report(fs.inclusion, s.topologies[c], jt, s.guards)
    for name in ("cover-reflecting", "closed-sieve-lifting"):
        rep.add_status(f"inclusion-{name}", ir[name].status, ir[name].witness)

    fib = L.fibres[c]
    bad = next((x for x in fib.objects if fs.ext.ob(fs.inclusion.ob(x)) != x), None)
    if bad is None:
        bad = next((k for k in fib.arrows if fs.ext.ar(fs.inclusion.ar(k)) != k), None)
    rep.add("retract", bad is None, None if bad is None else {"at": bad})

    bad = None
    G = fs.category
    for o in G.objects:
        for x in fib.objects:
            n1 = len(fib.hom(fs.ext.ob(o), x))
            n2 = len(G.hom(o, fs.inclusion.ob(x)))
            if n1 != n2:
                bad = {"object": o, "element": x, "hom-ext": n1, "hom-inclusion": n2}
                break
        if bad:
            break
    rep.add("adjunction", bad is None, bad)

    bad = None
    for k, (c0, c1) in B.arrows.items():
        if c0 != c:
            continue
        other = fibre_site(s, c1)
        for o, ((d, y), f) in fs.pairs.items():
            lhs = other.ext.ob(f"({g.obj(d, y)},{B.comp(k, f)})")
            rhs = s.ex(k, fs.ext.ob(o))
            if not L.fibres[c1].isomorphic(lhs, rhs):
                bad = {"arrow": k, "object": o, "ext-after-compose": lhs, "exists-after-ext": rhs}
                break
        if bad:
            break
    rep.add("ext-commutes", bad is None, bad)
    return rep


# -- universal property of the fibred completion ---------------------------------------------


def universal_property_probe(
    g: GrothTotal,
    K: Topology,
    J: Topology,
    target: InternalLocaleCandidate,
    m: Mapping[str, Mapping[str, str]],
    guards: Guards = DEFAULT,
) -> VerificationReport:
    """Count indexed frame homomorphisms ``h`` out of the completion with ``h ∘ η = m``.

    ``h`` must be a frame homomorphism in each fibre, commute with transitions
    and with ``∃``.  Exactly one is a pass; the factorization is stored.
    """
    P = g.indexed
    tr = internal_locale_report(target, guards)
    if not tr.passed:
        raise PreconditionError("target is not an internal locale", [c.to_dict() for c in tr.failures])
    B = P.base
    for c in B.objects:
        for x in P.posets[c].elements:
            if m[c].get(x) not in target.frames[c]:
                raise InputError(f"m at {c!r} sends {x!r} outside the target frame")
    fc = fibred_ideal_completion(g, K, J, guards)
    src = fc.locale
    rep = VerificationReport(f"universal property of Id({P.name})")
    try:
        per_obj = {}
        for c in B.objects:
            hs = frame_homs(src.frames[c], target.frames[c], guards)
            per_obj[c] = [h for h in hs if all(h[fc.unit[c][x]] == m[c][x] for x in P.posets[c].elements)]
    except GuardExceeded as e:
        rep.add_status("unique-factorization", Status.INCONCLUSIVE, {"guard": e.guard}, str(e))
        return rep
    sols = []
    tex = target.site(guards)
    objs = list(B.objects)
    for combo in itertools.product(*(per_obj[c] for c in objs)):
        h = dict(zip(objs, combo))
        ok = True
        for f, (c1, c) in B.arrows.items():
            for z in src.frames[c].elements:
                if h[c1][src.transitions[f][z]] != target.transitions.get(f, {}).get(h[c][z], h[c][z]):
                    ok = False
                    break
            if not ok:
                break
            for z in src.frames[c1].elements:
                if h[c][src.exists[f][z]] != tex.ex(f, h[c1][z]):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            sols.append(h)
            if len(sols) > 1:
                break
    if len(sols) == 1:
        rep.add("unique-factorization", True)
        rep.data["factorization"] = sols[0]
    else:
        rep.add("unique-factorization", False, {"factorizations": len(sols) if len(sols) < 2 else "at least 2"})
    return rep

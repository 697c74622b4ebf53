"""The closed-sieve internal locale of a morphism of sites and the site-level
data of its hyperconnected-localic factorization."""

from __future__ import annotations

from dataclasses import dataclass

from .cat import FinCategory, FinFunctor, check_functor
from .existential import ExistentialSite, existential_topology
from .frames import FiniteFrame
from .guards import DEFAULT, Guards
from .locale import InternalLocaleCandidate, internal_locale_report
from .report import PreconditionError, Status, VerificationReport
from .topology import Topology, close_bits, closed_sieves, comorphism_report, site_morphism_report


def sieve_name(d: FinCategory, x: str, bits: int) -> str:
    return "{" + ",".join(d.bits_to_arrows(x, bits)) + "}"


@dataclass
class ClosedSieveLocale:
    """``L_A(c)`` = ``K``-closed sieves on ``A(c)``; ``decode[c][name]`` gives the bitmask."""

    functor: FinFunctor
    locale: InternalLocaleCandidate
    decode: dict[str, dict[str, int]]
    inclusion: FinFunctor | None = None
    site: ExistentialSite | None = None


def closed_sieve_locale(a: FinFunctor, j: Topology, k: Topology, guards: Guards = DEFAULT) -> ClosedSieveLocale:
    """Frames of closed sieves, transitions by pullback along ``A(f)``, ``∃_f`` by
    closing the sieve generated by ``A(f) ∘ g``, and ``i_A : c ↦ (c, maximal sieve)``."""
    C, D = a.source, a.target
    pre = site_morphism_report(a, j, k, guards)
    for name in ("cover-preserving", "covering-flat"):
        if not pre[name].ok:
            raise PreconditionError(f"{a.name or 'functor'} is not a morphism of sites ({name} fails)", pre[name].witness)

    frames, decode = {}, {}
    for c in C.objects:
        x = a.ob(c)
        cl = closed_sieves(k, x, guards)
        decode[c] = {sieve_name(D, x, b): b for b in cl}
        frames[c] = FiniteFrame(
            decode[c],
            [(p, q) for p, bp in decode[c].items() for q, bq in decode[c].items() if bp & ~bq == 0],
            name=f"ClSv({x})",
        )
    transitions, exists = {}, {}
    for f, (c, c2) in C.arrows.items():
        Af = a.ar(f)
        x, x2 = a.ob(c), a.ob(c2)
        transitions[f] = {n: sieve_name(D, x, D.pullback_bits(Af, b)) for n, b in decode[c2].items()}
        exists[f] = {}
        for n, b in decode[c].items():
            gen = D.generated_bits(x2, [D.comp(Af, g) for g in D.bits_to_arrows(x, b)])
            exists[f][n] = sieve_name(D, x2, close_bits(k, x2, gen))
    locale = InternalLocaleCandidate(C, j, frames, transitions, exists, name=f"L({a.name or 'A'})")
    return ClosedSieveLocale(a, locale, decode)


def _inclusion(csl: ClosedSieveLocale, s: ExistentialSite) -> FinFunctor:
    a, C, D = csl.functor, csl.functor.source, csl.functor.target
    g = s.groth
    top = {c: sieve_name(D, a.ob(c), D.max_bits(a.ob(c))) for c in C.objects}
    obj = {c: g.obj(c, top[c]) for c in C.objects}
    arr = {}
    for f, (c, c2) in C.arrows.items():
        fib = s.indexed.fibres[c]
        # L(f) of the maximal sieve is maximal, so the fibre arrow is an identity
        arr[f] = g.arrow(f, fib.id(top[c]), top[c2])
    return FinFunctor(C, s.total, obj, arr, name=f"i_{a.name or 'A'}")


def _comparison(csl: ClosedSieveLocale, s: ExistentialSite):
    """``(c, S) ↦ dom h`` when the closed sieve ``S`` on ``A(c)`` is generated by ``h``."""
    a, D = csl.functor, csl.functor.target
    g = s.groth
    gen: dict[str, str] = {}
    for e, (c, name) in g.pairs.items():
        x = a.ob(c)
        bits = csl.decode[c][name]
        hs = [h for h in D.into(x) if D.generated_bits(x, [h]) == bits]
        if not hs:
            return None, {"object": e, "closed_sieve": name}
        gen[e] = hs[0]
    obj = {e: D.dom(h) for e, h in gen.items()}
    arr = {}
    for aid, (f, alpha, x2) in g.arrow_data.items():
        e, e2 = s.total.arrows[aid]
        h, h2 = gen[e], gen[e2]
        target = D.comp(a.ar(f), h)
        us = [u for u in D.hom(obj[e], obj[e2]) if D.comp(h2, u) == target]
        if not us:
            return None, {"arrow": aid, "problem": "no comparison arrow"}
        arr[aid] = us[0]
    return FinFunctor(s.total, D, obj, arr, name="comparison"), None


def factorization_report(a: FinFunctor, j: Topology, k: Topology, guards: Guards = DEFAULT) -> VerificationReport:
    """``L_A`` is an internal locale, ``i_A`` is a morphism of sites into the
    existential topology and right adjoint to the projection, and the
    comparison back to ``D`` meets the hyperconnected criterion where it is
    defined."""
    csl = closed_sieve_locale(a, j, k, guards)
    rep = VerificationReport(f"factorization of {a.name or 'A'}")
    il = internal_locale_report(csl.locale, guards)
    rep.extend(il, "locale-")
    s = csl.locale.site(guards)
    csl.site = s
    ext, _ = existential_topology(s)
    inc = _inclusion(csl, s)
    csl.inclusion = inc
    fr = check_functor(inc)
    rep.add("inclusion-functor", fr.passed, None if fr.passed else [c.to_dict() for c in fr.failures])
    sm = site_morphism_report(inc, j, ext, guards)
    for name in ("cover-preserving", "covering-flat"):
        rep.add_status(f"inclusion-{name}", sm[name].status, sm[name].witness)

    C, T, p = a.source, s.total, s.groth.projection
    bad = None
    for e in T.objects:
        for c in C.objects:
            n1 = len(C.hom(p.ob(e), c))
            n2 = len(T.hom(e, inc.ob(c)))
            if n1 != n2:
                bad = {"object": e, "base_object": c, "hom-projection": n1, "hom-inclusion": n2}
                break
        if bad:
            break
    rep.add("inclusion-right-adjoint", bad is None, bad)

    z, missing = _comparison(csl, s)
    if z is None:
        rep.add_status("comparison-hyperconnected", Status.INCONCLUSIVE, missing, "a closed sieve is not principal")
    elif not check_functor(z).passed:
        rep.add_status("comparison-hyperconnected", Status.INCONCLUSIVE, None, "chosen generators are not functorial")
    else:
        cr = comorphism_report(z, ext, k, guards)
        ok = cr["cover-reflecting"].ok and cr["closed-sieve-lifting"].ok
        w = None if ok else {
            "cover-reflecting": cr["cover-reflecting"].witness,
            "closed-sieve-lifting": cr["closed-sieve-lifting"].witness,
        }
        rep.add("comparison-hyperconnected", ok, w)
    rep.data["frames"] = {c: list(csl.locale.frames[c].elements) for c in C.objects}
    return rep

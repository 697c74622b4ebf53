"""Brute-force reference implementations used to derive expected values.

Everything here works on plain sets of arrow names and re-derives structure
from the raw composition tables, so it shares no algorithm with the library
(no bitmasks, no closure operators, no cached pullback maps).
"""

from __future__ import annotations

from itertools import chain, combinations


def powerset(xs):
    xs = list(xs)
    return [frozenset(s) for s in chain.from_iterable(combinations(xs, r) for r in range(len(xs) + 1))]


def arrows_into(c, x):
    return [a for a, (_, t) in c.arrows.items() if t == x]


def comp(c, g, f):
    return c._comp[(g, f)]


def sieves(c, x):
    """All subsets of arrows into ``x`` closed under precomposition."""
    into = arrows_into(c, x)
    out = []
    for s in powerset(into):
        if all(comp(c, f, g) in s for f in s for g in arrows_into(c, c.arrows[f][0])):
            out.append(s)
    return out


def pull(c, f, s):
    return frozenset(g for g in arrows_into(c, c.arrows[f][0]) if comp(c, f, g) in s)


def generated(c, x, family):
    return frozenset(comp(c, f, g) for f in family for g in arrows_into(c, c.arrows[f][0]))


def maximal(c, x):
    return frozenset(arrows_into(c, x))


def axiom_failures(c, covers):
    """Names of the topology axioms violated by ``covers`` (object -> set of frozensets)."""
    bad = set()
    for x in c.objects:
        if maximal(c, x) not in covers[x]:
            bad.add("maximal")
        for s in covers[x]:
            for f in arrows_into(c, x):
                if pull(c, f, s) not in covers[c.arrows[f][0]]:
                    bad.add("stability")
            for r in sieves(c, x):
                if r not in covers[x] and all(pull(c, f, r) in covers[c.arrows[f][0]] for f in s):
                    bad.add("transitivity")
    return bad


def generate(c, families):
    """Least topology in which each listed family covers its object (naive saturation)."""
    covers = {x: {maximal(c, x)} for x in c.objects}
    for x, fams in families.items():
        for fam in fams:
            covers[x].add(generated(c, x, fam))
    all_sieves = {x: sieves(c, x) for x in c.objects}
    changed = True
    while changed:
        changed = False
        for x in c.objects:
            for s in list(covers[x]):
                for f in arrows_into(c, x):
                    p = pull(c, f, s)
                    y = c.arrows[f][0]
                    if p not in covers[y]:
                        covers[y].add(p)
                        changed = True
            for r in all_sieves[x]:
                if r in covers[x]:
                    continue
                if any(all(pull(c, f, r) in covers[c.arrows[f][0]] for f in s) for s in covers[x]):
                    covers[x].add(r)
                    changed = True
    return covers


def library_covers(t, c=None):
    """A library topology as object -> set of frozensets of arrow names."""
    c = c or t.base
    return {x: {frozenset(c.bits_to_arrows(x, b)) for b in t.covering(x)} for x in c.objects}


def closure(c, covers, x, s):
    return frozenset(f for f in arrows_into(c, x) if pull(c, f, s) in covers[c.arrows[f][0]])


# -- posets and frames ---------------------------------------------------------------


def leq_of(frame):
    return {(a, b) for a in frame.elements for b in frame.elements if b in frame.up[a]}


def is_distributive_lattice(elements, leq):
    def lub(a, b):
        ubs = [z for z in elements if (a, z) in leq and (b, z) in leq]
        least = [z for z in ubs if all((z, w) in leq for w in ubs)]
        return least[0] if least else None

    def glb(a, b):
        lbs = [z for z in elements if (z, a) in leq and (z, b) in leq]
        great = [z for z in lbs if all((w, z) in leq for w in lbs)]
        return great[0] if great else None

    for a in elements:
        for b in elements:
            if lub(a, b) is None or glb(a, b) is None:
                return False
    for a in elements:
        for b in elements:
            for d in elements:
                if glb(a, lub(b, d)) != lub(glb(a, b), glb(a, d)):
                    return False
    return bool(elements)


def ideals(elements, leq, covers):
    """Down-sets ``D`` with: every covering family of ``x`` inside ``D`` forces ``x`` in ``D``.

    ``covers`` maps an element to a list of sets of elements (the domains of each cover).
    """
    out = []
    for d in powerset(elements):
        if any((y, x) in leq and y not in d for x in d for y in elements):
            continue
        if any(x not in d and fam <= d for x, fams in covers.items() for fam in fams):
            continue
        out.append(d)
    return out


def is_chain(sets):
    s = sorted(sets, key=len)
    return all(a < b for a, b in zip(s, s[1:]))


def left_adjoint(src_elems, src_leq, dst_elems, dst_leq, right):
    """``∃`` for a monotone ``right : dst → src``: least ``y`` with ``x ≤ right(y)``."""
    out = {}
    for x in src_elems:
        cands = [y for y in dst_elems if (x, right[y]) in src_leq]
        least = [y for y in cands if all((y, z) in dst_leq for z in cands)]
        if not least:
            return None
        out[x] = least[0]
    return out


def oracle_exists(d):
    """``∃_f`` for every base arrow of a poset-fibred indexed category, via ``left_adjoint``."""
    out = {}
    for f, (c1, c) in d.base.arrows.items():
        src, dst = d.posets[c1], d.posets[c]
        out[f] = left_adjoint(src.elements, leq_of(src), dst.elements, leq_of(dst), d.fibre_map(f))
    return out


def existential_covers(site, g):
    """Covers of the existential rule on ``G(L)`` for poset fibres.

    A sieve on ``(c, x)`` covers iff the fibre sieve on ``x`` generated by the
    elements ``∃_f(x')`` of its arrows ``(f, α, x)`` covers in ``J_c``.
    """
    d = site.indexed
    ex = oracle_exists(d)
    T = g.total
    fib_cov = {c: library_covers(site.topologies[c]) for c in d.base.objects}
    out = {}
    for e in T.objects:
        c, x = g.pairs[e]
        fib = d.fibres[c]
        out[e] = set()
        for s in sieves(T, e):
            elems = set()
            for a in s:
                f, alpha, _ = g.arrow_data[a]
                elems.add(ex[f][d.fibres[d.base.dom(f)].arrows[alpha][0]])
            family = frozenset(fib.arrow_between(y, x) for y in elems)
            if generated(fib, x, family) in fib_cov[c][x]:
                out[e].add(s)
    return out

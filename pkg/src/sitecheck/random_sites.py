"""Seeded random instances for property sweeps.

Two families:

* ``random_preorder_site``: forest-shaped base posets (so transitions along
  composites are determined by the Hasse edges), random poset fibres, random
  monotone transitions that have left adjoints, and random fibre topologies
  enlarged until every transition is cover-preserving.
* ``random_frame_site``: frame-valued sites over small meet-semilattices with
  top.  A global poset ``Q`` and an up-set ``U_q`` of the base for each ``q``
  give ``P_c = {q | c ∈ U_q}``; the fibre over ``c`` is the frame of down-sets
  of ``P_c``, transitions intersect and ``∃`` takes down-closures.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from functools import lru_cache

from .cat import FinCategory
from .existential import ExistentialSite
from .fibred import IndexedCat
from .frames import FiniteFrame, canonical_topology
from .topology import Topology, generate_topology, image_bits, trivial_topology


@dataclass
class RandomInstance:
    seed: int
    site: ExistentialSite
    base_topology: Topology
    kind: str
    params: dict = field(default_factory=dict)


def _random_poset(rng: random.Random, n: int, prefix: str, density: float) -> FiniteFrame:
    names = [f"{prefix}{i}" for i in range(n)]
    leq = [(names[i], names[j]) for i in range(n) for j in range(i + 1, n) if rng.random() < density]
    return FiniteFrame(names, leq)


def _order_key(p: FiniteFrame) -> tuple:
    return (p.elements, tuple(p.order_pairs()))


@lru_cache(maxsize=4096)
def _adjointable_maps(src_key: tuple, dst_key: tuple) -> tuple[tuple[tuple[str, str], ...], ...]:
    """Monotone maps ``src → dst`` having a left adjoint, as sorted item tuples."""
    src = FiniteFrame(src_key[0], src_key[1])
    dst = FiniteFrame(dst_key[0], dst_key[1])
    out = []
    elems = src.elements
    for image in itertools.product(dst.elements, repeat=len(elems)):
        m = dict(zip(elems, image))
        if not all(dst.leq(m[a], m[b]) for a, b in src.order_pairs()):
            continue
        ok = True
        for q in dst.elements:
            ups = [p for p in elems if dst.leq(q, m[p])]
            if not any(all(src.leq(u, v) for v in ups) for u in ups):
                ok = False
                break
        if ok:
            out.append(tuple(sorted(m.items())))
    return tuple(out)


def _random_coverage(rng: random.Random, c: FinCategory, k: int) -> dict[str, list[list[str]]]:
    cov: dict[str, list[list[str]]] = {}
    for _ in range(k):
        x = rng.choice(c.objects)
        arrows = [a for a in c.into(x) if a != c.id(x)]
        if not arrows and rng.random() < 0.7:
            continue
        fam = [a for a in arrows if rng.random() < 0.5]
        cov.setdefault(x, []).append(fam)
    return cov


def _make_cover_preserving(d: IndexedCat, coverage: dict[str, dict[str, list[list[str]]]]) -> dict[str, Topology]:
    """Smallest enlargement of the fibre coverages making every transition cover-preserving."""
    B = d.base
    tops = {c: generate_topology(d.fibres[c], coverage[c]) for c in B.objects}
    changed = True
    while changed:
        changed = False
        for f, (src, tgt) in B.arrows.items():
            if f == B.id(src):
                continue
            Lf = d.transitions[f]
            fib_s = d.fibres[src]
            extra = []
            for x in d.fibres[tgt].objects:
                for b in tops[tgt].covering(x):
                    img = image_bits(Lf, x, b)
                    y = Lf.ob(x)
                    if not tops[src].covers(y, img):
                        extra.append((y, list(fib_s.bits_to_arrows(y, img))))
            if extra:
                for y, fam in extra:
                    coverage[src].setdefault(y, []).append(fam)
                tops[src] = generate_topology(fib_s, coverage[src])
                changed = True
    return tops


def random_preorder_site(seed: int, max_base: int = 4, max_fibre: int = 5) -> RandomInstance:
    rng = random.Random(seed)
    n = rng.choice([k for k in (1, 2, 2, 3, 3, 4) if k <= max_base])
    objs = [f"c{i}" for i in range(n)]
    parent = {}
    for i in range(1, n):
        if rng.random() < 0.85:
            parent[objs[i]] = objs[rng.randrange(i)]
    base = FinCategory.from_preorder(objs, [(c, p) for c, p in parent.items()], name=f"base{seed}")

    sizes = {c: rng.choice([k for k in (1, 2, 2, 3, 3, 3, 4, 4, 5) if k <= max_fibre]) for c in objs}
    density = rng.choice([0.3, 0.5, 0.7])
    posets = {c: _random_poset(rng, sizes[c], f"{c}.", density) for c in objs}

    # transitions along Hasse edges, composites by following the unique path upwards
    edge_maps: dict[str, dict[str, str]] = {}
    for c, p in parent.items():
        choices = _adjointable_maps(_order_key(posets[p]), _order_key(posets[c]))
        for _ in range(20):
            if choices:
                break
            # no right adjoint L(p) → L(c) exists; redraw the lower fibre
            posets[c] = _random_poset(rng, sizes[c], f"{c}.", density)
            choices = _adjointable_maps(_order_key(posets[p]), _order_key(posets[c]))
        if not choices:
            # a relabelled copy of the upper fibre always admits the identity
            rename = {e: f"{c}." + e.split(".", 1)[1] for e in posets[p].elements}
            posets[c] = FiniteFrame(rename.values(), [(rename[a], rename[b]) for a, b in posets[p].order_pairs()])
            sizes[c] = len(posets[c])
            choices = _adjointable_maps(_order_key(posets[p]), _order_key(posets[c]))
        edge_maps[c] = dict(rng.choice(choices))
    maps = {}
    for a, (x, y) in base.arrows.items():
        path = [x]
        while path[-1] != y:
            path.append(parent[path[-1]])
        m = {e: e for e in posets[y].elements}
        for lower in reversed(path[:-1]):
            # edge from lower to its parent: L(lower ≤ parent) : L(parent) → L(lower)
            em = edge_maps[lower]
            m = {e: em[v] for e, v in m.items()}
        maps[a] = m
    d = IndexedCat.of_posets(base, posets, maps, name=f"rand{seed}")
    coverage = {c: _random_coverage(rng, d.fibres[c], rng.randint(0, 3)) for c in objs}
    tops = _make_cover_preserving(d, coverage)
    site = ExistentialSite(d, tops, name=f"rand{seed}")
    j = generate_topology(base, _random_coverage(rng, base, rng.randint(0, 2)), name="base")
    return RandomInstance(seed, site, j, "preorder", {"base": n, "fibres": sizes, "density": density})


# -- frame-valued instances ----------------------------------------------------------------


def cartesian_bases() -> list[FiniteFrame]:
    """Meet-semilattices with top on at most four elements."""
    out = []
    for n in range(1, 5):
        out.append(FiniteFrame.chain([f"k{i}" for i in range(n)], name=f"chain{n}"))
    out.append(FiniteFrame(["b", "l", "r", "t"], [("b", "l"), ("b", "r"), ("l", "t"), ("r", "t")], name="square"))
    return out


def _downsets(p: FiniteFrame) -> list[frozenset[str]]:
    out = []
    elems = p.elements
    for r in range(len(elems) + 1):
        for comb in itertools.combinations(elems, r):
            s = frozenset(comb)
            if all(p.down[x] <= s for x in s):
                out.append(s)
    return out


def _ds_name(s: frozenset[str]) -> str:
    return "{" + ",".join(sorted(s)) + "}"


def frame_site_from_upsets(
    base_frame: FiniteFrame, q: FiniteFrame, upsets: dict[str, frozenset[str]], name: str
) -> ExistentialSite:
    base = base_frame.category
    support = {c: frozenset(x for x in q.elements if c in upsets[x]) for c in base.objects}
    posets, named = {}, {}
    for c in base.objects:
        sub = FiniteFrame(support[c], [(a, b) for a in support[c] for b in support[c] if q.leq(a, b)])
        ds = _downsets(sub)
        named[c] = {_ds_name(s): s for s in ds}
        posets[c] = FiniteFrame.from_sets(named[c], name=f"O({c})")
    maps = {}
    for a, (x, y) in base.arrows.items():
        maps[a] = {n: _ds_name(s & support[x]) for n, s in named[y].items()}
    d = IndexedCat.of_posets(base, posets, maps, name=name)
    tops = {c: canonical_topology(posets[c]) for c in base.objects}
    return ExistentialSite(d, tops, name=name)


def random_frame_site(seed: int) -> RandomInstance:
    rng = random.Random(10_000 + seed)
    bases = cartesian_bases()
    bf = rng.choice(bases)
    nq = rng.randint(1, 3)
    q = _random_poset(rng, nq, "q", rng.choice([0.3, 0.6]))
    ups = [u for u in _downsets(FiniteFrame(bf.elements, [(b, a) for a, b in bf.order_pairs()]))]
    upsets = {x: rng.choice(ups) for x in q.elements}
    site = frame_site_from_upsets(bf, q, upsets, name=f"frame{seed}")
    params = {"base": bf.name, "q": [list(p) for p in q.order_pairs()], "upsets": {k: sorted(v) for k, v in upsets.items()}}
    return RandomInstance(seed, site, trivial_topology(site.base), "frame", params)

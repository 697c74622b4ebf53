"""The acceptance criteria, one test each.

Every test prints one line ``PASS criterion N: ...`` or ``FAIL criterion N: ...``
(visible with ``pytest -s`` or when this file is run as a script).
"""

import json
import os
import random
import subprocess
import sys
import time

import pytest

import oracle as O
from sitecheck.bundle import load_bundle
from sitecheck.cli import BUNDLE_DIR, emit_report, run_command, shipped_fixtures
from sitecheck.existential import (
    AdjointError,
    check_coorthogonal_generation,
    check_relative_bc,
    check_relative_frobenius,
    existential_site_report,
    existential_topology,
)
from sitecheck.factorization import closed_sieve_locale, factorization_report
from sitecheck.fibred import giraud_topology
from sitecheck.fixtures import p2, pow2, pow2_with_base, sier
from sitecheck.frames import FiniteFrame, canonical_topology, frame_isomorphism
from sitecheck.locale import (
    InternalLocaleCandidate,
    check_completion,
    fibre_site_report,
    fibred_ideal_completion,
    ideal_completion,
    internal_locale_report,
    unit_isomorphism,
)
from sitecheck.negatives import NEGATIVES
from sitecheck.random_sites import random_frame_site, random_preorder_site
from sitecheck.topology import generate_topology, trivial_topology, validate_topology
from test_locale import over_one

RESULTS = {}


def report(n, ok, text):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}"
    RESULTS[n] = line
    print(line, file=sys.__stdout__, flush=True)
    return ok


def fixture_sites():
    """Every fibred site declared in the shipped bundles that has left adjoints."""
    out = []
    for name in shipped_fixtures():
        b = load_bundle(os.path.join(BUNDLE_DIR, f"{name}.site"))
        for ind in b.names("indexed"):
            try:
                out.append((f"{name}:{ind}", b.site(ind), b.base_topology(ind)))
            except AdjointError:
                pass
    return out


def corpus(n=200):
    sites = fixture_sites()
    for seed in range(n):
        inst = random_preorder_site(seed)
        sites.append((f"seed {seed}", inst.site, inst.base_topology))
    return sites


def locale_of(s, j):
    d = s.indexed
    return InternalLocaleCandidate(d.base, j, dict(d.posets), {f: d.fibre_map(f) for f in d.base.arrows}, name=s.name)


@pytest.mark.xfail(strict=True, reason="the literal biconditional omits openness; see the characterization test")
def test_criterion_1_existential_biconditional():
    start = time.monotonic()
    bad = []
    sites = corpus(200)
    for label, s, _ in sites:
        t, _ = existential_topology(s)
        is_top = validate_topology(t).passed
        conds = check_relative_bc(s)["relative-bc"].ok and check_relative_frobenius(s)["relative-frobenius"].ok
        if is_top != conds:
            bad.append(label)
    took = time.monotonic() - start
    ok = report(1, not bad and took < 60,
                f"{len(sites)} sites, {len(bad)} discrepancies (first: {bad[:3]}), {took:.1f}s")
    assert ok


def test_criterion_1_with_openness_holds():
    # the repaired statement the literal one is measured against
    bad = []
    for label, s, _ in corpus(200):
        t, _ = existential_topology(s)
        is_top = validate_topology(t).passed
        conds = check_relative_bc(s)["relative-bc"].ok and check_relative_frobenius(s)["relative-frobenius"].ok
        opn = existential_site_report(s, trivial_topology(s.base))["open"].ok
        if is_top != (conds and opn):
            bad.append(label)
    assert not bad


def test_criterion_2_internal_locale_equivalence():
    cands = []
    s, j = pow2_with_base()
    cands.append(locale_of(s, j))
    for name, ind in (("pow2-bc-broken", "POW2-BC"), ("arrow-frobenius-broken", "FROB")):
        cands.append(load_bundle(os.path.join(BUNDLE_DIR, f"{name}.site")).locale(ind))
    for seed in range(60):
        inst = random_frame_site(seed)
        cands.append(locale_of(inst.site, inst.base_topology))
    bad, counted = [], 0
    for c in cands:
        rep = internal_locale_report(c)
        if rep["beck-chevalley"].status.value == "not-checked":
            continue
        counted += 1
        absolute = rep["beck-chevalley"].ok and rep["frobenius"].ok
        relative = rep["relative-bc"].ok and rep["relative-frobenius"].ok
        if absolute != relative or rep.bugs:
            bad.append(c.name)
    ok = report(2, counted >= 50 and not bad, f"{counted} candidates, {len(bad)} discrepancies")
    assert ok


def test_criterion_3_implications():
    bad = []
    sites = corpus(200)
    for label, s, j in sites:
        rep = existential_site_report(s, j)
        if rep["prestack"].ok and rep["reflecting-linearization"].ok and not rep["j-reflecting"].ok:
            bad.append((label, "linearization"))
        if rep["j-reflecting"].ok:
            gir = O.library_covers(giraud_topology(s.groth, j))
            ext = O.library_covers(existential_topology(s)[0])
            if not rep["giraud-contained"].ok or any(not gir[x] <= ext[x] for x in gir):
                bad.append((label, "giraud"))
        if rep.bugs:
            bad.append((label, "bug"))
    ok = report(3, not bad, f"{len(sites)} sites, {len(bad)} violations {bad[:3]}")
    assert ok


def frame_sites(count):
    out, seed = [], 0
    while len(out) < count:
        inst = random_frame_site(seed)
        seed += 1
        if validate_topology(existential_topology(inst.site)[0]).passed:
            out.append((f"frame seed {seed - 1}", inst.site))
    return out


def test_criterion_4_fibre_sites():
    bad, n = [], 0
    for label, s in [("POW2", pow2())] + frame_sites(20):
        for c in s.base.objects:
            n += 1
            rep = fibre_site_report(s, c)
            if not rep.passed or rep.bugs:
                bad.append((label, c, sorted(x.name for x in rep.failures)))
    ok = report(4, not bad, f"{n} fibre sites over 21 fibred sites, {len(bad)} failing {bad[:2]}")
    assert ok


def random_preorder_topologies(count):
    rng = random.Random(61)
    out = []
    while len(out) < count:
        n = rng.randint(1, 5)
        names = [f"p{i}" for i in range(n)]
        p = FiniteFrame(names, [(a, b) for i, a in enumerate(names) for b in names[i + 1:] if rng.random() < 0.5])
        c = p.category
        fams = {}
        for x in c.objects:
            into = list(c.into(x))
            if rng.random() < 0.6:
                fams[x] = [rng.sample(into, rng.randint(0, len(into)))]
        out.append((p, generate_topology(c, fams)))
    return out


def test_criterion_5_completion_over_one():
    bad, isos = [], []
    for p, k in [(sier(), None)] + random_preorder_topologies(24):
        if k is None:
            from sitecheck.fixtures import sier_cover_topology
            k = sier_cover_topology(p)
        g, K = over_one(p, k)
        fc = fibred_ideal_completion(g, K, trivial_topology(g.indexed.base))
        iso = frame_isomorphism(fc.locale.frames["*"], ideal_completion(p.category, k).frame)
        if iso is None:
            bad.append(p.elements)
        isos.append(iso)
    ok = report(5, not bad and len(isos) >= 20, f"{len(isos)} pairs, isomorphism found for {len(isos) - len(bad)}")
    assert ok


def test_criterion_6_frame_self_completion():
    isos = {f.name or str(f.elements): ideal_completion(f.category, canonical_topology(f)).canonical_is_iso()
            for f in (sier(), p2())}
    ok = report(6, all(v is not None for v in isos.values()), f"canonical map is an isomorphism for {sorted(isos)}")
    assert ok


def test_criterion_7_unit_isomorphism():
    s, j = pow2_with_base()
    K, _ = existential_topology(s)
    fc = fibred_ideal_completion(s.groth, K, j)
    iso = unit_isomorphism(s.indexed, fc)
    ok = report(7, iso is not None and set(iso) == set(s.base.objects) and check_completion(s.groth, K, j, fc).passed,
                "unit of POW2 is an isomorphism at every base object")
    assert ok


def test_criterion_8_picking_top():
    b = load_bundle(os.path.join(BUNDLE_DIR, "p2-pick-zero.site"))
    a, j, k = b.functor("PICK-TOP"), b.topology("ONE-TRIVIAL"), b.topology("P2-CANONICAL")
    iso = frame_isomorphism(closed_sieve_locale(a, j, k).locale.frames["*"], p2())
    rep = factorization_report(a, j, k)
    locale_ok = all(c.ok for c in rep.checks if c.name.startswith("locale-"))
    ok = report(8, iso is not None and rep["inclusion-right-adjoint"].ok and locale_ok,
                f"L_A(*) = P2 via {iso}; right adjoint and internal locale checks pass")
    assert ok


def test_criterion_9_generation():
    bad, n = [], 0
    for label, s in [("POW2", pow2())] + frame_sites(20):
        n += 1
        t, _ = existential_topology(s)
        r = check_coorthogonal_generation(s, t)["generated-equals-existential"]
        if r.status.value != "pass":
            bad.append((label, r.status.value))
    ok = report(9, not bad, f"{n} sites, generated topology equals the existential one on {n - len(bad)}")
    assert ok


def test_criterion_10_negatives():
    bad = []
    for neg in NEGATIVES:
        names, failed, bug = neg.run()
        if names != set(neg.intended) or bug:
            bad.append(neg.name)
        elif not neg.expect_error and any(c.witness is None for c in failed):
            bad.append(neg.name)
    ok = report(10, not bad, f"{len(NEGATIVES)} mutations, {len(bad)} off target {bad}")
    assert ok


def suite_argvs():
    argvs = [["validate", f] for f in shipped_fixtures()]
    argvs += [list(n.argv) for n in NEGATIVES if n.argv]
    argvs += [
        ["giraud", "pow2"],
        ["existential-topology", "pow2"],
        ["ideal-completion", "sier", "--topology", "U-COVERS-TOP"],
        ["fibred-completion", "pow2"],
        ["fibre-site", "pow2", "--object", "{0,1}"],
        ["factorize", "p2-pick-zero", "--functor", "PICK-TOP"],
        ["corpus", "--seed", "7", "--count", "20", "--property", "existential-biconditional"],
        ["corpus", "--seed", "0", "--count", "10", "--property", "conditions-agree"],
    ]
    return argvs


SCRIPT = """
import json, sys
from sitecheck.cli import emit_report, run_command
for argv in json.loads(sys.argv[1]):
    sys.stdout.write(emit_report(run_command(argv), "structured"))
"""


def test_criterion_11_determinism():
    argvs = suite_argvs()
    runs = [subprocess.run([sys.executable, "-c", SCRIPT, json.dumps(argvs)], capture_output=True, text=True,
                           check=True, env=dict(os.environ, PYTHONHASHSEED=str(seed))).stdout
            for seed in (1, 2)]
    in_process = "".join(emit_report(run_command(a), "structured") for a in argvs)
    ok = report(11, runs[0] == runs[1] == in_process,
                f"{len(argvs)} structured reports byte-identical across 3 runs")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))

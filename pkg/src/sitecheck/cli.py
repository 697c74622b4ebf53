"""Command-line interface: load a site bundle, run one command, emit a report.

Exit status: 0 every check passes, 1 some check failed, 2 input or
precondition error (including usage errors), 3 only inconclusive or sampled
results stand in the way of a pass.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Any, Callable

from .bundle import SiteBundle, load_bundle
from .cat import check_functor, validate_category
from .existential import (
    AdjointError,
    check_adjunction,
    check_coorthogonal_generation,
    check_relative_bc,
    check_relative_frobenius,
    existential_site_report,
    existential_topology,
    fibred_site_report,
)
from .factorization import factorization_report
from .fibred import fibration_morphism_report, giraud_topology, tau_and_adjunction, validate_indexed
from .frames import validate_frame
from .guards import Guards, default_guards
from .locale import (
    check_completion,
    covers_to_joins_violation,
    fibre_site_report,
    fibred_ideal_completion,
    ideal_completion,
    internal_locale_report,
    unit_isomorphism,
)
from .presheaf import sheaf_report, validate_presheaf
from .random_sites import random_frame_site, random_preorder_site
from .report import (
    Check,
    GuardExceeded,
    InputError,
    PreconditionError,
    SiteCheckError,
    Status,
    VerificationReport,
    jsonable,
)
from .topology import Topology, comorphism_report, describe, site_morphism_report, validate_topology

SCHEMA = "sitecheck-report/1"
BUNDLE_DIR = os.path.join(os.path.dirname(__file__), "bundles")

# What each check establishes, quoted in human-readable reports.
STATEMENTS = {
    "composition-table": "composites are defined exactly on composable pairs",
    "identity-laws": "identities are units for composition",
    "associativity": "composition is associative",
    "endpoints": "functor preserves sources and targets",
    "identities": "functor preserves identities",
    "composition": "functor preserves composition",
    "covers-are-sieves": "declared covers are sieves",
    "maximal": "maximal sieves cover",
    "stability": "covers are stable under pullback",
    "transitivity": "local covers of a cover compose to a cover",
    "top": "a top element exists",
    "bottom": "a bottom element exists",
    "meets": "binary meets exist",
    "joins": "binary joins exist",
    "distributive": "finite meets distribute over joins",
    "fibres": "fibres are valid categories",
    "transitions": "transitions are functors",
    "strict-identities": "transitions along identities are identities",
    "strict-composition": "transitions compose strictly",
    "guard-exceeded": "the computation fits inside the size guards",
    "separated": "matching families have at most one amalgamation",
    "sheaf": "matching families amalgamate uniquely",
    "cover-preserving": "covers are sent to covers",
    "covering-flat": "cones factor locally through the image",
    "dense": "every object is covered by arrows from the image",
    "faithful": "parallel arrows agreeing in the image agree locally",
    "full": "arrows between images lift locally",
    "cover-lifting": "covers of an image lift to covers (comorphism of sites)",
    "cover-reflecting": "families sent to covers are covers",
    "closed-sieve-lifting": "closed sieves on an image are closures of images",
    "open-criterion": "the comorphism induces an open geometric morphism",
    "adjunction": "each existential map is left adjoint to its transition",
    "adjoints": "transitions have left adjoints",
    "relative-bc": "relative Beck-Chevalley condition",
    "relative-bc-forms-agree": "span form and pullback form of relative Beck-Chevalley agree",
    "relative-frobenius": "relative Frobenius condition",
    "relative-frobenius-forms-agree": "family form and equality form of relative Frobenius agree",
    "existential-biconditional": "the existential rule is a topology iff relative Beck-Chevalley and relative Frobenius hold",
    "existential-characterization": "the existential rule is a topology iff relative Beck-Chevalley, relative Frobenius and openness hold",
    "fibre-topologies": "fibre topologies satisfy the axioms",
    "transitions-cover-preserving": "transitions are cover-preserving",
    "open": "every existential map is cover-preserving",
    "j-reflecting": "fibre sieves whose restrictions along a base cover all cover are covers",
    "reflecting-linearization": "closed sieves are principal and transitions preserve generators",
    "prestack": "restrictions along a base cover jointly reflect the order",
    "giraud-contained": "the existential topology contains the Giraud topology",
    "implication-linearization": "prestack and reflecting linearization imply J-reflecting",
    "implication-giraud": "J-reflecting implies Giraud containment",
    "generated-equals-existential": "vertical covers and cocartesian singletons generate the existential topology",
    "cocartesian-tags": "arrows tagged cocartesian are cocartesian",
    "co-giraud-contained": "cocartesian lifts of base covers are existential covers",
    "frames": "every fibre is a frame",
    "frame-homs": "transitions are frame homomorphisms",
    "functorial": "transitions are strictly functorial",
    "beck-chevalley": "Beck-Chevalley on pullback squares",
    "frobenius": "Frobenius reciprocity",
    "conditions-agree": "absolute and relative Beck-Chevalley/Frobenius agree on a cartesian base",
    "projection-cover-lifting": "the fibre-site projection is a comorphism into the existential site",
    "inclusion-cover-reflecting": "the fibre inclusion is cover-reflecting",
    "inclusion-closed-sieve-lifting": "the fibre inclusion is closed-sieve-lifting",
    "retract": "ext after the inclusion is the identity",
    "ext-commutes": "ext commutes with composition along base arrows",
    "unit-monotone": "the unit is monotone",
    "unit-natural": "the unit commutes with transitions",
    "independent-of-base-topology": "the completion does not depend on the base topology",
    "unit-isomorphism": "the unit is an isomorphism of indexed frames",
    "covers-to-joins": "the canonical map sends covers to joins",
    "canonical-isomorphism": "the canonical map is an isomorphism",
    "inclusion-functor": "the unit-of-sieves functor is a functor",
    "inclusion-cover-preserving": "the inclusion is cover-preserving into the existential topology",
    "inclusion-covering-flat": "the inclusion is covering-flat into the existential topology",
    "inclusion-right-adjoint": "the inclusion is right adjoint to the projection",
    "comparison-hyperconnected": "the comparison functor meets the hyperconnected site criterion",
    "projection-commutes": "the morphism commutes with the projections",
    "preserves-cartesian": "cartesian arrows are preserved",
    "terminal-preserved": "the terminal object is preserved",
    "pullbacks-preserved": "pullbacks are preserved",
    "hom-bijection": "hom-sets into the right adjoint biject with base hom-sets",
    "projection-retracts": "the projection retracts the right adjoint",
    "giraud-cover-lifting": "the projection is a comorphism for the Giraud topology",
    "unique-factorization": "exactly one indexed frame map factors through the unit",
}

HUMAN_DATA_LIMIT = 2000

ALIASES = {"thm-5-1": "existential-biconditional"}


class UsageError(InputError):
    """Bad command line: unknown property, missing or ambiguous selection."""


def statement(name: str) -> str:
    base = name.split(":", 1)[-1]
    for prefix in ("locale-", "topology-", "hypothesis-", "functor-", "frame-"):
        if base not in STATEMENTS and base.startswith(prefix):
            base = base[len(prefix):]
    return STATEMENTS.get(base, "")


# -- selection of bundle items ----------------------------------------------------------------


@dataclass
class Context:
    bundle: SiteBundle
    args: argparse.Namespace
    guards: Guards

    def pick(self, option: str, *kinds: str) -> str:
        value = getattr(self.args, option.replace("-", "_"), None)
        if value:
            return value
        names = self.bundle.names(*kinds)
        if len(names) == 1:
            return names[0]
        what = " or ".join(kinds)
        if not names:
            raise UsageError(f"the bundle declares no {what}")
        raise UsageError(f"several {what} declarations ({', '.join(names)}); choose one with --{option}")

    def indexed_name(self) -> str:
        return self.pick("indexed", "indexed")

    def site(self):
        return self.bundle.site(self.indexed_name())

    def base_topology(self) -> Topology:
        name = self.indexed_name()
        if self.args.base_topology:
            t = self.bundle.topology(self.args.base_topology)
            if t.base is not self.bundle.indexed(name).base:
                raise UsageError("--base-topology does not live on the base of the indexed category")
            return t
        return self.bundle.base_topology(name)

    def topology(self, option: str, on) -> Topology:
        value = getattr(self.args, option.replace("-", "_"), None)
        if not value or value == "trivial":
            from .topology import trivial_topology

            return trivial_topology(on)
        t = self.bundle.topology(value)
        if t.base is not on:
            raise UsageError(f"--{option} {value} does not live on {on.name or 'the required category'}")
        return t


# -- property families -------------------------------------------------------------------------


def _family_internal_locale(ctx: Context) -> VerificationReport:
    return internal_locale_report(ctx.bundle.locale(ctx.indexed_name()), ctx.guards)


def _family_existential_topology(ctx: Context) -> VerificationReport:
    return existential_topology(ctx.site())[1]


def _family_existential_site(ctx: Context) -> VerificationReport:
    return existential_site_report(ctx.site(), ctx.base_topology())


def _family_fibred_site(ctx: Context) -> VerificationReport:
    return fibred_site_report(ctx.site())


def _family_relative_bc(ctx: Context) -> VerificationReport:
    return check_relative_bc(ctx.site())


def _family_relative_frobenius(ctx: Context) -> VerificationReport:
    return check_relative_frobenius(ctx.site())


def _family_adjunction(ctx: Context) -> VerificationReport:
    name = ctx.indexed_name()
    d = ctx.bundle.indexed(name)
    tables = ctx.bundle.exists_tables(name)
    from .existential import adjoints_from_tables, compute_adjoints

    adj = adjoints_from_tables(d, tables) if tables else compute_adjoints(d)
    return check_adjunction(d, adj)


def _family_coorthogonal(ctx: Context) -> VerificationReport:
    s = ctx.site()
    t, _ = existential_topology(s)
    return check_coorthogonal_generation(s, t, ctx.base_topology(), include_cocartesian=not ctx.args.without_cocartesian)


def _family_tau(ctx: Context) -> VerificationReport:
    return tau_and_adjunction(ctx.bundle.total(ctx.indexed_name()))[1]


def _functor_topologies(ctx: Context):
    f = ctx.bundle.functor(ctx.pick("functor", "functor"))
    return f, ctx.topology("source-topology", f.source), ctx.topology("target-topology", f.target)


def _family_site_morphism(ctx: Context) -> VerificationReport:
    f, j, k = _functor_topologies(ctx)
    return site_morphism_report(f, j, k, ctx.guards)


def _family_comorphism(ctx: Context) -> VerificationReport:
    f, k, j = _functor_topologies(ctx)
    return comorphism_report(f, k, j, ctx.guards)


def _family_fibration_morphism(ctx: Context) -> VerificationReport:
    return fibration_morphism_report(ctx.bundle.fibmorphism(ctx.pick("morphism", "fibmorphism")))


def _family_sheaf(ctx: Context) -> VerificationReport:
    p = ctx.bundle.presheaf(ctx.pick("presheaf", "presheaf"))
    return sheaf_report(ctx.topology("topology", p.base), p, ctx.guards)


FAMILIES: dict[str, tuple[Callable[[Context], VerificationReport], tuple[str, ...]]] = {
    "internal-locale": (
        _family_internal_locale,
        ("frames", "frame-homs", "functorial", "sheaf", "adjoints", "beck-chevalley", "frobenius", "conditions-agree"),
    ),
    "existential-topology": (
        _family_existential_topology,
        ("topology-covers-are-sieves", "topology-maximal", "topology-stability", "topology-transitivity",
         "existential-biconditional", "existential-characterization"),
    ),
    "existential-site": (
        _family_existential_site,
        ("open", "j-reflecting", "reflecting-linearization", "prestack", "giraud-contained",
         "implication-linearization", "implication-giraud"),
    ),
    "fibred-site": (_family_fibred_site, ("fibre-topologies", "transitions-cover-preserving")),
    "relative-bc": (_family_relative_bc, ("relative-bc", "relative-bc-forms-agree")),
    "relative-frobenius": (_family_relative_frobenius, ("relative-frobenius", "relative-frobenius-forms-agree")),
    "adjunction": (_family_adjunction, ("adjunction",)),
    "coorthogonal-generation": (_family_coorthogonal, ("generated-equals-existential", "cocartesian-tags", "co-giraud-contained")),
    "tau": (_family_tau, ("hom-bijection", "projection-retracts")),
    "site-morphism": (_family_site_morphism, ("cover-preserving", "covering-flat", "dense", "faithful", "full")),
    "comorphism": (_family_comorphism, ("cover-lifting", "cover-reflecting", "closed-sieve-lifting", "open-criterion")),
    "fibration-morphism": (
        _family_fibration_morphism,
        ("projection-commutes", "preserves-cartesian", "terminal-preserved", "pullbacks-preserved"),
    ),
    "sheaf": (_family_sheaf, ("separated",)),
}
PROPERTY_FAMILY = {name: fam for fam, (_, names) in FAMILIES.items() for name in names}
PROPERTY_FAMILY["sheaf"] = "sheaf"


def property_names() -> list[str]:
    return sorted(set(FAMILIES) | set(PROPERTY_FAMILY) | set(ALIASES))


def _only(rep: VerificationReport, name: str) -> VerificationReport:
    out = VerificationReport(rep.subject, data=rep.data)
    if name not in rep:
        raise UsageError(f"property {name!r} was not computed for this input")
    for c in rep.checks:
        if c.name == name or (c.bug and c.status == Status.FAIL):
            out.checks.append(c)
    return out


# -- commands -----------------------------------------------------------------------------------


def cmd_validate(ctx: Context) -> VerificationReport:
    b = ctx.bundle
    rep = VerificationReport("bundle")
    for s in b.sections:
        n = s.name
        if s.kind == "category":
            rep.extend(validate_category(b.category(n)), f"{n}:")
        elif s.kind == "poset":
            rep.extend(validate_category(b.poset(n).category), f"{n}:")
            rep.extend(validate_frame(b.poset(n)), f"{n}:")
        elif s.kind == "topology":
            rep.extend(validate_topology(b.topology(n), ctx.guards), f"{n}:")
        elif s.kind == "functor":
            rep.extend(check_functor(b.functor(n)), f"{n}:")
        elif s.kind == "indexed":
            rep.extend(validate_indexed(b.indexed(n)), f"{n}:")
        elif s.kind == "presheaf":
            rep.extend(validate_presheaf(b.presheaf(n)), f"{n}:")
        elif s.kind == "fibmorphism":
            rep.extend(check_functor(b.fibmorphism(n).functor), f"{n}:functor-")
    rep.data["declarations"] = b.counts()
    return rep


def _covers_data(t: Topology, guards: Guards) -> dict[str, list[list[str]]]:
    c = t.base
    return {x: sorted(describe(c, x, b)["arrows"] for b in t.covering(x, guards)) for x in c.objects}


def cmd_giraud(ctx: Context) -> VerificationReport:
    name = ctx.indexed_name()
    g = ctx.bundle.total(name)
    j = ctx.base_topology()
    t = giraud_topology(g, j, ctx.guards)
    rep = VerificationReport(f"Giraud topology of {name}")
    rep.extend(validate_topology(t, ctx.guards), "topology-")
    cl = comorphism_report(g.projection, t, j, ctx.guards)["cover-lifting"]
    rep.add_status("giraud-cover-lifting", cl.status, cl.witness)
    rep.data["covers"] = _covers_data(t, ctx.guards)
    return rep


def cmd_existential_topology(ctx: Context) -> VerificationReport:
    s = ctx.site()
    t, rep = existential_topology(s)
    if t.explicit:
        rep.data["covers"] = _covers_data(t, ctx.guards)
    return rep


def cmd_check(ctx: Context) -> VerificationReport:
    prop = ALIASES.get(ctx.args.property, ctx.args.property)
    if prop in FAMILIES:
        return FAMILIES[prop][0](ctx)
    fam = PROPERTY_FAMILY.get(prop)
    if fam is None:
        raise UsageError(f"unknown property {ctx.args.property!r}; known: {', '.join(property_names())}")
    return _only(FAMILIES[fam][0](ctx), prop)


def cmd_ideal_completion(ctx: Context) -> VerificationReport:
    name = ctx.pick("poset", "poset", "category")
    p = ctx.bundle.category(name)
    k = ctx.topology("topology", p)
    ideals = ideal_completion(p, k, ctx.guards)
    rep = VerificationReport(f"ideal completion of {name}")
    rep.extend(validate_frame(ideals.frame), "frame-")
    w = covers_to_joins_violation(p, k, ideals, ctx.guards)
    rep.add("covers-to-joins", w is None, w)
    iso = ideals.canonical_is_iso()
    rep.data.update(
        elements={n: sorted(v) for n, v in ideals.decode.items()},
        order=ideals.frame.order_pairs(),
        canonical=ideals.canonical,
        canonical_is_isomorphism=iso is not None,
        mode=ideals.mode,
    )
    return rep


def _total_topology(ctx: Context, name: str) -> Topology:
    value = ctx.args.total_topology
    s = ctx.site()
    if value in (None, "existential"):
        return existential_topology(s)[0]
    t = ctx.bundle.topology(value)
    if t.base is not s.total:
        raise UsageError(f"--total-topology {value} must be declared on total:{name}")
    return t


def cmd_fibred_completion(ctx: Context) -> VerificationReport:
    name = ctx.indexed_name()
    K = _total_topology(ctx, name)
    g = ctx.bundle.total(name)
    J = ctx.base_topology()
    fc = fibred_ideal_completion(g, K, J, ctx.guards)
    rep = check_completion(g, K, J, fc, ctx.guards)
    iso = unit_isomorphism(g.indexed, fc)
    rep.data.update(
        frames={c: fc.locale.frames[c].order_pairs() for c in g.indexed.base.objects},
        unit=fc.unit,
        unit_is_isomorphism=iso is not None,
    )
    return rep


def cmd_fibre_site(ctx: Context) -> VerificationReport:
    s = ctx.site()
    c = ctx.args.object
    if c is None:
        raise UsageError("fibre-site needs --object")
    if c not in s.base.objects:
        raise UsageError(f"{c!r} is not an object of the base")
    return fibre_site_report(s, c)


def cmd_factorize(ctx: Context) -> VerificationReport:
    f, j, k = _functor_topologies(ctx)
    return factorization_report(f, j, k, ctx.guards)


def corpus_check(prop: str, seed: int) -> tuple[Check, dict]:
    """One corpus instance: the named property on the seeded random site."""
    if prop in ("conditions-agree", "internal-locale"):
        inst = random_frame_site(seed)
        from .locale import InternalLocaleCandidate

        s = inst.site
        cand = InternalLocaleCandidate(
            s.base, inst.base_topology, dict(s.indexed.posets),
            {f: dict(s.indexed.transitions[f].obj_map) for f in s.base.arrows}, name=s.name,
        )
        rep = internal_locale_report(cand)
        check = rep["conditions-agree"] if prop == "conditions-agree" else Check(
            "internal-locale", Status.PASS if rep.passed else Status.FAIL,
            None if rep.passed else [c.to_dict() for c in rep.failures])
        return check, inst.params
    inst = random_preorder_site(seed)
    s = inst.site
    if prop in ("existential-biconditional", "existential-characterization", "relative-bc", "relative-frobenius"):
        rep = existential_topology(s)[1]
    elif prop in FAMILIES["existential-site"][1]:
        rep = existential_site_report(s, inst.base_topology)
    elif prop == "generated-equals-existential":
        rep = check_coorthogonal_generation(s, existential_topology(s)[0])
    else:
        raise UsageError(f"property {prop!r} is not available for the corpus")
    return rep[prop], inst.params


CORPUS_PROPERTIES = (
    "existential-biconditional", "existential-characterization", "relative-bc", "relative-frobenius",
    "open", "j-reflecting", "giraud-contained", "implication-linearization", "implication-giraud",
    "generated-equals-existential", "conditions-agree", "internal-locale",
)


def cmd_corpus(ctx: Context) -> VerificationReport:
    prop = ALIASES.get(ctx.args.property, ctx.args.property)
    if prop not in CORPUS_PROPERTIES:
        raise UsageError(f"unknown corpus property {ctx.args.property!r}; known: {', '.join(CORPUS_PROPERTIES)}")
    if ctx.args.count < 0:
        raise UsageError("--count must be non-negative")
    rep = VerificationReport(f"corpus {prop}")
    tally: dict[str, int] = {}
    for seed in range(ctx.args.seed, ctx.args.seed + ctx.args.count):
        check, params = corpus_check(prop, seed)
        w = check.witness
        if check.status == Status.FAIL:
            w = {"params": params, "witness": check.witness}
        rep.add_status(f"seed-{seed}", check.status, w, check.detail)
        tally[check.status.value] = tally.get(check.status.value, 0) + 1
    rep.data.update(property=prop, first_seed=ctx.args.seed, count=ctx.args.count, tally=tally)
    return rep


COMMANDS: dict[str, Callable[[Context], VerificationReport]] = {
    "validate": cmd_validate,
    "giraud": cmd_giraud,
    "existential-topology": cmd_existential_topology,
    "check": cmd_check,
    "ideal-completion": cmd_ideal_completion,
    "fibred-completion": cmd_fibred_completion,
    "fibre-site": cmd_fibre_site,
    "factorize": cmd_factorize,
    "corpus": cmd_corpus,
}


# -- results and emission -------------------------------------------------------------------------


@dataclass
class Result:
    command: str
    arguments: dict[str, Any]
    guards: Guards
    report: VerificationReport | None = None
    error: dict[str, Any] | None = None
    seed: int | None = None

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return 2
        statuses = [c.status for c in self.report.checks]
        if Status.FAIL in statuses:
            return 1
        if Status.INCONCLUSIVE in statuses or Status.SAMPLED in statuses:
            return 3
        return 0

    @property
    def status(self) -> str:
        return {0: "pass", 1: "fail", 2: "error", 3: "inconclusive"}[self.exit_code]

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "schema": SCHEMA,
            "command": self.command,
            "arguments": self.arguments,
            "seed": self.seed,
            "guards": self.guards.as_dict(),
            "status": self.status,
            "exit_code": self.exit_code,
        }
        if self.error is not None:
            out["error"] = self.error
        if self.report is not None:
            out.update(self.report.to_dict())
        return jsonable(out)


def emit_report(result: Result, fmt: str = "human") -> str:
    """``structured``: sorted-key JSON following ``SCHEMA``; ``human``: one line per check."""
    if fmt == "structured":
        return json.dumps(result.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    lines = []
    subject = result.report.subject if result.report is not None else ""
    lines.append(f"{result.command}: {subject}".rstrip(": ").rstrip())
    if result.error is not None:
        e = result.error
        lines.append(f"ERROR ({e['type']}) {e['message']}")
        if e.get("witness") is not None:
            lines.append("  witness: " + json.dumps(jsonable(e["witness"]), sort_keys=True, ensure_ascii=False))
    if result.report is not None:
        for c in result.report.checks:
            label = {"pass": "PASS", "fail": "FAIL", "inconclusive": "INCONCLUSIVE", "sampled": "SAMPLED",
                     "not-checked": "SKIP"}[c.status.value]
            text = statement(c.name)
            line = f"{label} {c.name}" + (f" ({text})" if text else "")
            if c.bug:
                line += " [toolkit bug]"
            lines.append(line)
            if c.detail:
                lines.append(f"  note: {c.detail}")
            if c.witness is not None and c.status != Status.PASS:
                lines.append("  witness: " + json.dumps(jsonable(c.witness), sort_keys=True, ensure_ascii=False))
        if result.report.data and result.command not in ("check", "validate"):
            text = json.dumps(jsonable(result.report.data), sort_keys=True, ensure_ascii=False)
            if len(text) > HUMAN_DATA_LIMIT:
                text = f"{len(text)} characters; use --format structured to see it"
            lines.append("data: " + text)
    lines.append(f"status: {result.status}")
    return "\n".join(lines) + "\n"


# -- argument parsing -----------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sitecheck", description="Exact checks for finite sites, fibred sites and internal locales.")
    p.add_argument("--format", choices=("human", "structured"), default="human")
    p.add_argument("--guards", default="", help="guard overrides, e.g. sieves=18,search=200000")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def with_bundle(name: str, help_: str) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("bundle", help="bundle file, or the name of a shipped fixture (e.g. pow2)")
        return sp

    with_bundle("validate", "check every declaration in the bundle")
    for name, help_ in (("giraud", "Giraud topology on the total category"),
                        ("existential-topology", "existential topology and its characterization")):
        sp = with_bundle(name, help_)
        sp.add_argument("--indexed")
        sp.add_argument("--base-topology")
    sp = with_bundle("check", "one property or property family")
    sp.add_argument("--property", required=True)
    for opt in ("indexed", "base-topology", "functor", "source-topology", "target-topology", "morphism",
                "presheaf", "topology"):
        sp.add_argument(f"--{opt}")
    sp.add_argument("--without-cocartesian", action="store_true", help="drop the cocartesian generators")
    sp = with_bundle("ideal-completion", "frame of ideals of a preorder")
    sp.add_argument("--poset")
    sp.add_argument("--topology")
    sp = with_bundle("fibred-completion", "fibred ideal completion and its unit")
    sp.add_argument("--indexed")
    sp.add_argument("--base-topology")
    sp.add_argument("--total-topology", help="topology declared on total:NAME, or 'existential' (default)")
    sp = with_bundle("fibre-site", "the fibre site over one base object")
    sp.add_argument("--indexed")
    sp.add_argument("--object")
    sp = with_bundle("factorize", "closed-sieve locale of a morphism of sites")
    sp.add_argument("--functor")
    sp.add_argument("--source-topology")
    sp.add_argument("--target-topology")
    sp = sub.add_parser("corpus", help="sweep a property over seeded random sites")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=50)
    sp.add_argument("--property", required=True)
    return p


def resolve_bundle_path(ref: str) -> str:
    if os.path.exists(ref):
        return ref
    shipped = os.path.join(BUNDLE_DIR, ref.lower() + ("" if ref.endswith(".site") else ".site"))
    if os.path.exists(shipped):
        return shipped
    raise InputError(f"no bundle file or shipped fixture named {ref!r}")


def shipped_fixtures() -> list[str]:
    return sorted(f[: -len(".site")] for f in os.listdir(BUNDLE_DIR) if f.endswith(".site"))


def _arguments(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"command", "format", "guards"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip and v not in (None, False)}


def run_command(argv: list[str]) -> Result:
    """Parse ``argv`` and run the command; never raises for toolkit errors."""
    guards = default_guards()
    command = argv[0] if argv else ""
    result = Result(command, {"argv": list(argv)}, guards)
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("no command given")
        guards = guards.with_overrides(args.guards)
        result = Result(args.command, _arguments(args), guards, seed=getattr(args, "seed", None))
        if args.command == "corpus":
            ctx = Context(None, args, guards)  # type: ignore[arg-type]
        else:
            ctx = Context(load_bundle(resolve_bundle_path(args.bundle), guards), args, guards)
        result.report = COMMANDS[args.command](ctx)
    except AdjointError as e:
        result.error = {"type": "precondition", "message": str(e), "witness": e.witness}
    except PreconditionError as e:
        result.error = {"type": "precondition", "message": str(e), "witness": e.witness}
    except GuardExceeded as e:
        # a guard stops the computation but decides nothing: inconclusive, not an error
        result.report = VerificationReport(f"guard {e.guard} exceeded")
        result.report.add_status("guard-exceeded", Status.INCONCLUSIVE, {"guard": e.guard}, str(e))
    except UsageError as e:
        result.error = {"type": "usage", "message": str(e)}
    except InputError as e:
        err: dict[str, Any] = {"type": "input", "message": str(e)}
        if getattr(e, "line", 0):
            err.update(line=e.line, column=e.column)
        result.error = err
    except SiteCheckError as e:
        result.error = {"type": "error", "message": str(e)}
    return result


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv in ([], ["-h"], ["--help"]) or (argv and argv[-1] in ("-h", "--help")):
        try:
            build_parser().parse_args(argv or ["--help"])
        except SystemExit as e:
            return int(e.code or 0)
    fmt = "structured" if "--format=structured" in argv or _flag_value(argv, "--format") == "structured" else "human"
    result = run_command(argv)
    sys.stdout.write(emit_report(result, fmt))
    return result.exit_code


def _flag_value(argv: list[str], flag: str) -> str | None:
    for i, a in enumerate(argv[:-1]):
        if a == flag:
            return argv[i + 1]
    return None


if __name__ == "__main__":
    raise SystemExit(main())

"""Catalogue of shipped mutated fixtures and the checks each must fail.

Each entry names the command line to run and the set of checks expected to
fail. Where one defect logically forces another check to fail too (a broken
Beck-Chevalley square also breaks its relative form), the set lists both.
Two mutations change a procedure rather than a bundle; they run in-process.
Witnesses replay: the same argv always yields the same failing checks.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

from .cli import Result, run_command
from .existential import check_coorthogonal_generation, existential_topology
from .fixtures import pow2
from .locale import fibre_site, fibre_site_report
from .report import Status, VerificationReport
from .topology import Topology


@dataclass(frozen=True)
class Negative:
    name: str
    argv: tuple[str, ...]
    intended: frozenset[str]
    description: str
    # run the mutated procedure in-process instead of through the CLI
    procedure: Callable[[], VerificationReport] | None = None
    expect_error: bool = False

    def run(self) -> tuple[set[str], list, bool]:
        """Failed check names, failed checks (with witnesses), whether any toolkit bug fired."""
        if self.procedure is not None:
            rep = self.procedure()
            failed = [c for c in rep.checks if c.status == Status.FAIL]
            return {c.name for c in failed}, failed, bool(rep.bugs)
        result = run_command(list(self.argv))
        if result.error is not None:
            return ({"precondition"} if result.error["type"] == "precondition" else {result.error["type"]}), [result.error], False
        failed = [c for c in result.report.checks if c.status == Status.FAIL]
        return {c.name for c in failed}, failed, bool(result.report.bugs)

    def result(self) -> Result | None:
        return None if self.procedure is not None else run_command(list(self.argv))


def pow2_without_cocartesian() -> VerificationReport:
    """Generate from vertical covers only; the cocartesian singletons are needed."""
    s = pow2()
    t, _ = existential_topology(s)
    return check_coorthogonal_generation(s, t, include_cocartesian=False)


DROPPED_OBJECT = "(({0,1},{0}),{0,1}<={0,1})"
DROPPED_SIEVE = 62


def pow2_fibre_site_dropped_cover() -> VerificationReport:
    """Fibre site over ``{0,1}`` with one covering sieve removed from its topology."""
    s = pow2()
    fs = fibre_site(s, "{0,1}")
    t = fs.topology
    covers = {x: set(t.covering(x)) for x in t.base.objects}
    covers[DROPPED_OBJECT].discard(DROPPED_SIEVE)
    mutated = Topology(t.base, covers, name="dropped-cover")
    return fibre_site_report(s, "{0,1}", dataclasses.replace(fs, topology=mutated))


NEGATIVES: tuple[Negative, ...] = (
    Negative("broken-arrow", ("validate", "broken-arrow"), frozenset({"BROKEN-ARROW:composition-table"}),
             "composite of f with an identity points at the wrong arrow"),
    Negative("m3", ("validate", "m3"), frozenset({"M3:distributive"}), "the diamond lattice is not distributive"),
    Negative("sier-nontransitive", ("validate", "sier-nontransitive"), frozenset({"NONTRANSITIVE:transitivity"}),
             "covers u<=top and bot<=u do not compose to a cover"),
    Negative("arrow-no-maximal", ("validate", "arrow-no-maximal"),
             frozenset({"NO-MAXIMAL:maximal", "NO-MAXIMAL:stability"}),
             "no cover on a; pulling the maximal sieve on b back to a must cover"),
    Negative("chain3-presheaf", ("validate", "chain3-presheaf"), frozenset({"SWAP:composition"}),
             "restrictions swap sections along each step but not along the composite"),
    Negative("pow2-bc-broken", ("check", "pow2-bc-broken", "--property", "internal-locale"),
             frozenset({"beck-chevalley", "relative-bc"}), "a transition of POW2 swaps the two atoms"),
    Negative("pow2-nonadjoint", ("check", "pow2-nonadjoint", "--property", "internal-locale"),
             frozenset({"adjoints"}), "an explicit existential table that is not left adjoint"),
    Negative("arrow-frobenius-broken", ("check", "arrow-frobenius-broken", "--property", "internal-locale"),
             frozenset({"frobenius", "relative-frobenius"}), "a frame map Sier -> 2 whose adjoint breaks Frobenius"),
    Negative("arrow-frobenius-broken-topology", ("existential-topology", "arrow-frobenius-broken"),
             frozenset({"topology-stability", "relative-frobenius"}),
             "without Frobenius the existential rule is not pullback-stable"),
    Negative("arrow-collapse", ("check", "arrow-collapse", "--property", "existential-site"),
             frozenset({"j-reflecting", "prestack", "giraud-contained"}),
             "restriction along a covering arrow forgets the order of the fibre"),
    Negative("arrow-noncovering-transition", ("check", "arrow-noncovering-transition", "--property", "fibred-site"),
             frozenset({"transitions-cover-preserving"}), "a transition sends a cover to a non-cover"),
    Negative("sier-top-to-u", ("check", "sier-top-to-u", "--property", "fibration-morphism"),
             frozenset({"terminal-preserved"}), "fibrewise map sending top to u"),
    Negative("p2-pick-zero", ("check", "p2-pick-zero", "--property", "site-morphism", "--functor", "PICK-ZERO",
                              "--target-topology", "P2-CANONICAL"),
             frozenset({"covering-flat", "dense"}), "picking {0} in P2 is not covering-flat"),
    Negative("p2-pick-zero-factorize", ("factorize", "p2-pick-zero", "--functor", "PICK-ZERO",
                                        "--target-topology", "P2-CANONICAL"),
             frozenset({"precondition"}), "factorization refuses a non-morphism of sites", expect_error=True),
    Negative("arrow-collapse-functor", ("check", "arrow-collapse-functor", "--property", "comorphism"),
             frozenset({"cover-reflecting"}), "collapsing ARROW to ONE sends a non-cover to a cover"),
    Negative("pow2-no-cocartesian", ("check", "pow2", "--property", "coorthogonal-generation", "--without-cocartesian"),
             frozenset({"generated-equals-existential"}), "vertical covers alone do not generate"),
    Negative("pow2-no-cocartesian-procedure", (), frozenset({"generated-equals-existential"}),
             "same mutation, run in-process", procedure=pow2_without_cocartesian),
    Negative("pow2-fibre-site-dropped-cover", (), frozenset({"projection-cover-lifting", "inclusion-closed-sieve-lifting"}),
             "fibre-site topology over {0,1} missing one cover", procedure=pow2_fibre_site_dropped_cover),
)


def by_name(name: str) -> Negative:
    for n in NEGATIVES:
        if n.name == name:
            return n
    raise KeyError(name)

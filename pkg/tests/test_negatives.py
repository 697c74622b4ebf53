import json

import pytest

from sitecheck.cli import emit_report, run_command, shipped_fixtures
from sitecheck.negatives import NEGATIVES, by_name

CLEAN = {"one", "arrow", "sier", "p2", "pow2", "fpre"}


@pytest.mark.parametrize("neg", NEGATIVES, ids=lambda n: n.name)
def test_fails_exactly_the_intended_checks(neg):
    names, failed, bug = neg.run()
    assert names == set(neg.intended)
    assert not bug
    if not neg.expect_error:
        assert all(c.witness is not None for c in failed)


@pytest.mark.parametrize("neg", [n for n in NEGATIVES if n.procedure is None], ids=lambda n: n.name)
def test_witnesses_replay(neg):
    a, b = neg.result(), neg.result()
    assert emit_report(a, "structured") == emit_report(b, "structured")
    assert a.exit_code == (2 if neg.expect_error else 1)


def test_every_mutated_fixture_is_catalogued():
    used = {n.argv[1] for n in NEGATIVES if n.argv}
    assert set(shipped_fixtures()) - CLEAN <= used


@pytest.mark.parametrize("name", sorted(CLEAN))
def test_clean_fixtures_validate(name):
    r = run_command(["validate", name])
    assert r.exit_code == 0, json.dumps(r.to_dict()["checks"])


def test_procedure_mutations_are_deterministic():
    neg = by_name("pow2-fibre-site-dropped-cover")
    first = [c.to_dict() for c in neg.run()[1]]
    assert first == [c.to_dict() for c in neg.run()[1]]

"""Size guards for the exponential enumerations.

Defaults can be overridden with the ``SITECHECK_GUARDS`` environment variable,
e.g. ``SITECHECK_GUARDS="sieves=18,search=200000"``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

from .report import InputError


@dataclass(frozen=True)
class Guards:
    sieves: int = 20          # max arrows into an object for sieve enumeration
    sections: int = 16        # max total sections for exhaustive subpresheaf enumeration
    ideals: int = 14          # max preorder size for exhaustive ideal enumeration
    search: int = 1_000_000   # functor / homomorphism search budget
    sample: int = 4096        # sieves sampled when a topology is too large to enumerate

    def with_overrides(self, spec: str) -> "Guards":
        names = {f.name for f in fields(self)}
        values = {}
        for item in filter(None, (s.strip() for s in spec.split(","))):
            key, _, val = item.partition("=")
            key = key.strip()
            if key not in names:
                raise InputError(f"unknown guard {key!r}")
            try:
                values[key] = int(val)
            except ValueError:
                raise InputError(f"guard {key!r} needs an integer, got {val!r}") from None
        return replace(self, **values)

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def default_guards() -> Guards:
    return Guards().with_overrides(os.environ.get("SITECHECK_GUARDS", ""))


DEFAULT = default_guards()

"""Exact checks for Grothendieck topologies on finite categories, fibred sites
and internal locales, with a site-bundle file format and a CLI."""

from .bundle import SiteBundle, load_bundle, parse_site_bundle
from .cli import emit_report, run_command
from .guards import Guards
from .report import (
    Check,
    GuardExceeded,
    InputError,
    PreconditionError,
    SiteCheckError,
    Status,
    VerificationReport,
)

__all__ = [
    "Check",
    "GuardExceeded",
    "Guards",
    "InputError",
    "PreconditionError",
    "SiteBundle",
    "SiteCheckError",
    "Status",
    "VerificationReport",
    "emit_report",
    "load_bundle",
    "parse_site_bundle",
    "run_command",
]

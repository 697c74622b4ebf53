"""Verification reports and the error hierarchy shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable


class SiteCheckError(Exception):
    """Base class for toolkit errors."""


class InputError(SiteCheckError, ValueError):
    """Malformed input: dangling identifiers, non-total tables, bad syntax."""


class PreconditionError(SiteCheckError):
    """An operation's precondition does not hold for the given data."""

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


class GuardExceeded(SiteCheckError):
    """A size guard was exceeded where no degraded mode is available."""

    def __init__(self, guard: str, message: str):
        super().__init__(message)
        self.guard = guard


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"
    SAMPLED = "sampled"
    NOT_CHECKED = "not-checked"


@dataclass
class Check:
    name: str
    status: Status
    witness: Any = None
    detail: str = ""
    # set for internal-consistency assertions whose failure indicates a toolkit bug
    bug: bool = False

    @property
    def ok(self) -> bool:
        return self.status in (Status.PASS, Status.SAMPLED)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "status": self.status.value}
        if self.witness is not None:
            out["witness"] = jsonable(self.witness)
        if self.detail:
            out["detail"] = self.detail
        if self.bug:
            out["toolkit_bug"] = True
        return out


@dataclass
class VerificationReport:
    subject: str
    checks: list[Check] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)

    def add(self, name: str, ok: bool, witness: Any = None, detail: str = "", bug: bool = False) -> Check:
        check = Check(name, Status.PASS if ok else Status.FAIL, None if ok else witness, detail, bug and not ok)
        self.checks.append(check)
        return check

    def add_status(self, name: str, status: Status, witness: Any = None, detail: str = "") -> Check:
        check = Check(name, status, witness, detail)
        self.checks.append(check)
        return check

    def extend(self, other: "VerificationReport", prefix: str = "") -> None:
        for c in other.checks:
            self.checks.append(Check(prefix + c.name, c.status, c.witness, c.detail, c.bug))

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(c.name == name for c in self.checks)

    @property
    def passed(self) -> bool:
        return all(c.ok or c.status == Status.NOT_CHECKED for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.status == Status.FAIL]

    @property
    def bugs(self) -> list[Check]:
        return [c for c in self.checks if c.bug]

    def status(self, name: str) -> Status:
        return self[name].status

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"subject": self.subject, "checks": [c.to_dict() for c in self.checks]}
        if self.data:
            out["data"] = jsonable(self.data)
        return out


def jsonable(value: Any) -> Any:
    """Convert witnesses (tuples, frozensets, nested dicts) to a JSON-stable form."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    if isinstance(value, (frozenset, set)):
        return sorted((jsonable(v) for v in value), key=_sort_key)
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, "to_dict"):
        return value.to_dict()
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def _sort_key(v: Any) -> str:
    return repr(v)


def merge_status(statuses: Iterable[Status]) -> Status:
    statuses = list(statuses)
    if any(s == Status.FAIL for s in statuses):
        return Status.FAIL
    if any(s == Status.INCONCLUSIVE for s in statuses):
        return Status.INCONCLUSIVE
    if any(s == Status.SAMPLED for s in statuses):
        return Status.SAMPLED
    return Status.PASS

"""Error types shared across the hub, protocol, registry and simulator.

Every error that can cross the wire carries a stable ``code`` (its class
name) so clients can match on it without parsing messages.
"""

from __future__ import annotations


class DuiHubError(Exception):
    """Base class for all duihub errors."""

    @property
    def code(self) -> str:
        return type(self).__name__

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        msg = super().__str__()
        return msg if msg else self.code


# --- domain model ---------------------------------------------------------

class MalformedLocator(DuiHubError):
    pass


class EmptyName(DuiHubError):
    pass


class UnknownSession(DuiHubError):
    pass


class UnknownObject(DuiHubError):
    pass


class UnknownBehaviour(DuiHubError):
    pass


class StereotypeMismatch(DuiHubError):
    pass


# --- wire protocol --------------------------------------------------------

class MalformedFrame(DuiHubError):
    pass


class UnknownKind(DuiHubError):
    pass


class SchemaViolation(DuiHubError):
    pass


class AlreadySequenced(DuiHubError):
    pass


# --- behaviour registry ---------------------------------------------------

class DuplicateId(DuiHubError):
    pass


class InvalidParamSpec(DuiHubError):
    pass


class BindingError(DuiHubError):
    pass


class MissingParam(BindingError):
    def __init__(self, name: str):
        super().__init__(f"missing required parameter {name!r}")
        self.name = name


class KindMismatch(BindingError):
    def __init__(self, name: str, detail: str = ""):
        super().__init__(f"parameter {name!r} has wrong kind" + (f": {detail}" if detail else ""))
        self.name = name


class PlannerError(DuiHubError):
    """A behaviour planner refused to produce a plan; wraps the cause code."""

    def __init__(self, cause: DuiHubError):
        super().__init__(str(cause))
        self.cause = cause

    @property
    def code(self) -> str:
        return f"PlannerError({self.cause.code})"


class SameSession(DuiHubError):
    pass


class ObjectOffline(DuiHubError):
    pass


class NoLiveSession(DuiHubError):
    pass


class MixedOrigins(DuiHubError):
    pass


# --- rule engine ----------------------------------------------------------

class RuleInvalid(DuiHubError):
    """A rule failed structural validation (empty condition, bad slot refs)."""


# --- hub ------------------------------------------------------------------

class AuthFailed(DuiHubError):
    pass


class SpoofedSession(DuiHubError):
    pass


class NotOwner(DuiHubError):
    pass


class TargetGone(DuiHubError):
    pass


class InvalidDescriptor(DuiHubError):
    pass


class CorruptStore(DuiHubError):
    pass


# --- simulator ------------------------------------------------------------

class ScenarioError(DuiHubError):
    def __init__(self, step_index: int, cause: str):
        super().__init__(f"step {step_index}: {cause}")
        self.step_index = step_index
        self.cause = cause

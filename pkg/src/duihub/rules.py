"""Edge-triggered distribution rules.

A rule is a conjunction of presence/device predicates over named session
slots plus an ordered list of behaviour invocations. The engine re-checks
each enabled rule whenever presence or the session directory changes and
fires only on the false-to-true transition of the whole condition, so a
condition that stays true does not re-fire.

Session slots are declared per rule (``selectors``) and referenced by name
from predicates and from action bindings (a binding of kind "selector" is
substituted with the matched session before planning). Evaluation finds an
assignment of live sessions to slots satisfying every predicate; the
witness returned is deterministic: the lexicographically smallest session
tuple in slot declaration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Union

from .behaviours import BehaviourRegistry, Bindings, BoundValue, validate_bindings
from .errors import BindingError, RuleInvalid, UnknownBehaviour, UnknownObject
from .model import (
    DeviceId,
    DeviceKind,
    ObjectId,
    PresenceLedger,
    RuleId,
    SessionId,
    UIObject,
    UserId,
)

# --- selectors --------------------------------------------------------------

@dataclass(frozen=True)
class ExactSession:
    session_id: SessionId


@dataclass(frozen=True)
class OnDevice:
    device_id: DeviceId


@dataclass(frozen=True)
class OfDeviceKind:
    kind: DeviceKind


@dataclass(frozen=True)
class AnySessionOfUser:
    pass


@dataclass(frozen=True)
class SecondSessionSameDevice:
    """A different session on the same device as another matched slot."""

    of: str  # name of a previously declared slot


Selector = Union[ExactSession, OnDevice, OfDeviceKind, AnySessionOfUser, SecondSessionSameDevice]


# --- predicates ---------------------------------------------------------------

@dataclass(frozen=True)
class ObjectOnlineIn:
    object_id: ObjectId
    selector: str  # slot name


@dataclass(frozen=True)
class ObjectOfflineIn:
    object_id: ObjectId
    selector: str


@dataclass(frozen=True)
class SessionsSameDevice:
    """Two distinct matched sessions hosted by one device."""

    a: str
    b: str


Predicate = Union[ObjectOnlineIn, ObjectOfflineIn, SessionsSameDevice]


@dataclass(frozen=True)
class RuleAction:
    behaviour_id: str
    bindings: Mapping[str, BoundValue]


@dataclass(frozen=True)
class Rule:
    rule_id: RuleId
    owner: UserId
    selectors: Mapping[str, Selector]  # declaration order is significant
    condition: tuple[Predicate, ...]
    actions: tuple[RuleAction, ...]
    enabled: bool = True


@dataclass(frozen=True)
class CompiledRule:
    rule: Rule
    slots: tuple[str, ...]  # declaration order


def compile_rule(
    rule: Rule,
    registry: BehaviourRegistry,
    objects: Mapping[ObjectId, UIObject],
) -> CompiledRule:
    """Validate every reference a rule makes; raises on dangling ones.

    Checks: non-empty condition and actions, slot references resolve,
    same-device back-references point at earlier slots, referenced objects
    exist in the owner's collection, behaviours are registered and their
    required parameters are all bound with agreeing kinds.
    """
    if not rule.condition:
        raise RuleInvalid("rule condition must contain at least one predicate")
    if not rule.actions:
        raise RuleInvalid("rule must list at least one action")
    slots = tuple(rule.selectors.keys())
    order = {name: i for i, name in enumerate(slots)}
    for name, selector in rule.selectors.items():
        if isinstance(selector, SecondSessionSameDevice):
            if selector.of not in order:
                raise RuleInvalid(f"slot {name!r} references unknown slot {selector.of!r}")
            if order[selector.of] >= order[name]:
                raise RuleInvalid(f"slot {name!r} must be declared after {selector.of!r}")
    for pred in rule.condition:
        for slot in _predicate_slots(pred):
            if slot not in order:
                raise RuleInvalid(f"predicate references unknown slot {slot!r}")
        oid = getattr(pred, "object_id", None)
        if oid is not None and oid not in objects:
            raise UnknownObject(oid)
    for action in rule.actions:
        descriptor = registry.lookup(action.behaviour_id)
        if descriptor is None:
            raise UnknownBehaviour(action.behaviour_id)
        for name, bound in action.bindings.items():
            if bound.kind == "selector" and bound.value not in order:
                raise BindingError(f"action binds unknown slot {bound.value!r} to {name!r}")
            if bound.kind == "object":
                values = bound.value if isinstance(bound.value, (list, tuple)) else [bound.value]
                for oid in values:
                    if oid not in objects:
                        raise UnknownObject(str(oid))
        validate_bindings(descriptor, action.bindings)
    return CompiledRule(rule=rule, slots=slots)


def _predicate_slots(pred: Predicate) -> tuple[str, ...]:
    if isinstance(pred, SessionsSameDevice):
        return (pred.a, pred.b)
    return (pred.selector,)


# --- evaluation ---------------------------------------------------------------

def evaluate_condition(
    compiled: CompiledRule, ledger: PresenceLedger
) -> tuple[bool, Optional[dict[str, SessionId]]]:
    """Search for a satisfying assignment of live sessions to slots.

    Backtracks over slots in declaration order with sorted session domains,
    so the first assignment found is the lexicographically smallest witness.
    """
    rule = compiled.rule
    sessions = ledger.sessions_of(rule.owner)
    if not sessions and compiled.slots:
        return False, None
    assignment: dict[str, SessionId] = {}

    def candidates(slot: str) -> list[SessionId]:
        selector = rule.selectors[slot]
        out = []
        for info in sessions:
            if isinstance(selector, ExactSession) and info.session_id != selector.session_id:
                continue
            if isinstance(selector, OnDevice) and info.device.device_id != selector.device_id:
                continue
            if isinstance(selector, OfDeviceKind) and info.device.kind is not selector.kind:
                continue
            if isinstance(selector, SecondSessionSameDevice):
                other = ledger.directory.get(assignment[selector.of])
                if other is None:
                    return []
                if info.session_id == other.session_id:
                    continue
                if info.device.device_id != other.device.device_id:
                    continue
            out.append(info.session_id)
        return out

    def holds(pred: Predicate) -> bool:
        if isinstance(pred, ObjectOnlineIn):
            return ledger.is_online(pred.object_id, assignment[pred.selector])
        if isinstance(pred, ObjectOfflineIn):
            return not ledger.is_online(pred.object_id, assignment[pred.selector])
        a, b = ledger.directory.get(assignment[pred.a]), ledger.directory.get(assignment[pred.b])
        if a is None or b is None:
            return False
        return a.session_id != b.session_id and a.device.device_id == b.device.device_id

    def ready(pred: Predicate) -> bool:
        return all(slot in assignment for slot in _predicate_slots(pred))

    def search(i: int) -> bool:
        if i == len(compiled.slots):
            return all(holds(p) for p in rule.condition)
        slot = compiled.slots[i]
        for sid in candidates(slot):
            assignment[slot] = sid
            # prune on predicates whose slots are all bound
            if all(holds(p) for p in rule.condition if ready(p)):
                if search(i + 1):
                    return True
            del assignment[slot]
        return False

    if search(0):
        return True, dict(assignment)
    return False, None


def resolve_action_bindings(
    action: RuleAction, witness: Mapping[str, SessionId]
) -> dict[str, BoundValue]:
    """Substitute matched sessions for selector-slot bindings."""
    resolved = {}
    for name, bound in action.bindings.items():
        if bound.kind == "selector":
            resolved[name] = BoundValue.session(witness[str(bound.value)])
        else:
            resolved[name] = bound
    return resolved


# --- edge-triggered engine ------------------------------------------------------

@dataclass
class FiringRecord:
    last_value: bool = False
    last_witness: Optional[dict[str, SessionId]] = None


@dataclass(frozen=True)
class RuleFiring:
    rule: Rule
    witness: dict[str, SessionId]


class RuleEngine:
    """Tracks per-rule condition values and reports false-to-true edges.

    ``sweep`` re-evaluates every compiled rule (in the order given, which
    callers keep as rule creation order) against the post-event ledger and
    returns the rules that just became true. A rule unknown to the firing
    state counts as previously-false, so a rule added while its condition
    already holds fires exactly once on arrival.
    """

    def __init__(self) -> None:
        self.state: dict[RuleId, FiringRecord] = {}

    def forget(self, rule_id: RuleId) -> None:
        self.state.pop(rule_id, None)

    def sweep(
        self, compiled_rules: Sequence[CompiledRule], ledger: PresenceLedger
    ) -> list[RuleFiring]:
        firings: list[RuleFiring] = []
        for compiled in compiled_rules:
            rule = compiled.rule
            if not rule.enabled:
                # disabled rules neither fire nor track state; re-enabling
                # re-arms them like a fresh rule
                self.state.pop(rule.rule_id, None)
                continue
            value, witness = evaluate_condition(compiled, ledger)
            record = self.state.setdefault(rule.rule_id, FiringRecord())
            if value and not record.last_value:
                firings.append(RuleFiring(rule=rule, witness=witness or {}))
            record.last_value = value
            record.last_witness = witness
        return firings

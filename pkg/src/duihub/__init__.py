"""duihub: distribute pieces of existing web pages across your sessions.

Collect any page element into a personal, hub-synchronized collection,
then show it somewhere else, replay interaction on another display, drive
one session's navigation from another, or mirror edits between devices --
manually, or automatically through presence-triggered rules. The sites
themselves need no cooperation.

Layers, bottom up: :mod:`duihub.model` (objects, presence),
:mod:`duihub.wire` (frames), :mod:`duihub.behaviours` (pluggable
distribution planners), :mod:`duihub.rules` (edge-triggered automation),
:mod:`duihub.hub` (the synchronization point), :mod:`duihub.sim`
(deterministic virtual sessions) and :mod:`duihub.server` (WebSocket
transport).
"""

from .behaviours import (
    BehaviourDescriptor,
    BehaviourRegistry,
    BoundValue,
    InvocationPlan,
    ParameterSpec,
    ParamKind,
    builtin_registry,
)
from .commands import CommandAction, SessionCommand
from .errors import DuiHubError
from .hub import Hub
from .model import (
    DeviceInfo,
    DeviceKind,
    Locator,
    PresenceLedger,
    PresenceRecord,
    PresenceState,
    SessionInfo,
    Stereotype,
    UIObject,
    apply_presence_update,
    collect_object,
    resolve_presence,
)
from .rules import Rule, RuleAction, RuleEngine, compile_rule, evaluate_condition
from .store import AuthStore
from .wire import WireMessage, decode, encode

__version__ = "0.1.0"

__all__ = [
    "AuthStore",
    "BehaviourDescriptor",
    "BehaviourRegistry",
    "BoundValue",
    "CommandAction",
    "DeviceInfo",
    "DeviceKind",
    "DuiHubError",
    "Hub",
    "InvocationPlan",
    "Locator",
    "ParamKind",
    "ParameterSpec",
    "PresenceLedger",
    "PresenceRecord",
    "PresenceState",
    "Rule",
    "RuleAction",
    "RuleEngine",
    "SessionCommand",
    "SessionInfo",
    "Stereotype",
    "UIObject",
    "WireMessage",
    "apply_presence_update",
    "builtin_registry",
    "collect_object",
    "compile_rule",
    "decode",
    "encode",
    "evaluate_condition",
    "resolve_presence",
]

"""Pluggable distribution behaviours: descriptors, parameter schemas, planners.

A behaviour is described by a discoverable parameter schema (so a client
can render its configuration form without knowing the behaviour) plus a
planner: a pure function from (bindings, ledger snapshot, object universe)
to an invocation plan. A plan is the list of session commands to route now
and the standing routes the hub should keep (event redirection, content
mirroring, navigation control).

Behaviours are either stereotype-agnostic or restricted to a set of
stereotypes; the registry answers "which behaviours apply to this kind of
object" in registration order.

Planners never execute user-supplied code: community behaviours uploaded
for sharing keep their script blob opaque (clients run it, the hub only
stores and lists it).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from . import commands as cmd
from .commands import CommandAction, EffectKind, MediaVerb, SessionCommand
from .errors import (
    BindingError,
    DuplicateId,
    InvalidParamSpec,
    KindMismatch,
    MissingParam,
    MixedOrigins,
    NoLiveSession,
    ObjectOffline,
    SameSession,
    StereotypeMismatch,
    UnknownObject,
    UnknownSession,
)
from .model import (
    BehaviourId,
    DeviceId,
    ObjectId,
    PresenceLedger,
    SessionId,
    Stereotype,
    UIObject,
    UserId,
)


class ParamKind(str, Enum):
    SESSION_REF = "SessionRef"
    DEVICE_REF = "DeviceRef"
    OBJECT_REF = "ObjectRef"
    TEXT = "Text"
    ENUM = "Enum"


@dataclass(frozen=True)
class ParameterSpec:
    """One declared parameter of a behaviour, renderable as a form field.

    repeated=True means the bound value is a non-empty list (used for
    object lists); Enum kinds carry their option set.
    """

    name: str
    kind: ParamKind
    required: bool = True
    repeated: bool = False
    options: tuple[str, ...] = ()


@dataclass(frozen=True)
class BoundValue:
    """A tagged parameter value. kind is one of session/device/object/text/
    enum, or selector for rule actions bound to a condition slot (resolved
    to a session before planning)."""

    kind: str
    value: object

    @staticmethod
    def session(session_id: SessionId) -> "BoundValue":
        return BoundValue("session", session_id)

    @staticmethod
    def device(device_id: DeviceId) -> "BoundValue":
        return BoundValue("device", device_id)

    @staticmethod
    def object(object_id: ObjectId) -> "BoundValue":
        return BoundValue("object", object_id)

    @staticmethod
    def objects(object_ids: Sequence[ObjectId]) -> "BoundValue":
        return BoundValue("object", tuple(object_ids))

    @staticmethod
    def text(value: str) -> "BoundValue":
        return BoundValue("text", value)

    @staticmethod
    def enum(value: str) -> "BoundValue":
        return BoundValue("enum", value)

    @staticmethod
    def selector(slot: str) -> "BoundValue":
        return BoundValue("selector", slot)


Bindings = Mapping[str, BoundValue]

_KIND_FOR_PARAM = {
    ParamKind.SESSION_REF: "session",
    ParamKind.DEVICE_REF: "device",
    ParamKind.OBJECT_REF: "object",
    ParamKind.TEXT: "text",
    ParamKind.ENUM: "enum",
}


@dataclass(frozen=True)
class RepoMeta:
    """Sharing flags for a behaviour stored in the repository."""

    owner: UserId = ""
    reviews_enabled: bool = False
    bug_tracking_enabled: bool = False
    public: bool = False


# Standing routes a plan installs on the hub. They survive until a session
# they reference closes or the behaviour is torn down.
@dataclass(frozen=True)
class RedirectRoute:
    """Forward captured events on an object from source to target."""

    object_id: ObjectId
    source: SessionId
    target: SessionId


@dataclass(frozen=True)
class NavigationRoute:
    """Navigation intents captured at controller run at controlled."""

    object_id: ObjectId
    controller: SessionId
    controlled: SessionId


@dataclass(frozen=True)
class MirrorRoute:
    """Fan content edits of an object out to every other online session."""

    object_id: ObjectId


Route = Union[RedirectRoute, NavigationRoute, MirrorRoute]


@dataclass(frozen=True)
class InvocationPlan:
    commands: tuple[SessionCommand, ...] = ()
    routes: tuple[Route, ...] = ()


@dataclass(frozen=True)
class PlanContext:
    """Snapshot a planner sees: the ledger (incl. session directory), the
    owner's objects, and the owning user (plans never cross users)."""

    ledger: PresenceLedger
    objects: Mapping[ObjectId, UIObject]
    user: UserId

    def user_sessions(self) -> list[SessionId]:
        return [info.session_id for info in self.ledger.sessions_of(self.user)]

    def require_session(self, session_id: SessionId) -> None:
        info = self.ledger.directory.get(session_id)
        if info is None or info.user_id != self.user:
            raise UnknownSession(session_id)

    def require_object(self, object_id: ObjectId) -> UIObject:
        obj = self.objects.get(object_id)
        if obj is None:
            raise UnknownObject(object_id)
        return obj

    def online_user_sessions(self, object_id: ObjectId) -> list[SessionId]:
        mine = set(self.user_sessions())
        return [s for s in self.ledger.online_sessions(object_id) if s in mine]


Planner = Callable[[Bindings, PlanContext], InvocationPlan]


@dataclass(frozen=True)
class BehaviourDescriptor:
    """A registered behaviour: identity, applicability, parameter schema,
    optional planner, and repository metadata.

    applicability None means stereotype-agnostic. Descriptors without a
    planner (community uploads) can be listed, attached and fetched but not
    invoked hub-side.
    """

    behaviour_id: BehaviourId
    display_name: str
    params: tuple[ParameterSpec, ...] = ()
    applicability: Optional[frozenset[Stereotype]] = None
    planner: Optional[Planner] = None
    repo: RepoMeta = RepoMeta()

    def applies_to(self, stereotype: Stereotype) -> bool:
        return self.applicability is None or stereotype in self.applicability


def validate_param_specs(params: Sequence[ParameterSpec]) -> None:
    seen: set[str] = set()
    for spec in params:
        if not spec.name:
            raise InvalidParamSpec("parameter name must be non-empty")
        if spec.name in seen:
            raise InvalidParamSpec(f"duplicate parameter name {spec.name!r}")
        seen.add(spec.name)
        if spec.kind is ParamKind.ENUM and not spec.options:
            raise InvalidParamSpec(f"enum parameter {spec.name!r} needs at least one option")
        if spec.kind is not ParamKind.ENUM and spec.options:
            raise InvalidParamSpec(f"only enum parameters carry options ({spec.name!r})")


def validate_bindings(descriptor: BehaviourDescriptor, bindings: Bindings) -> None:
    """Check required coverage and kind agreement; raises BindingError."""
    by_name = {spec.name: spec for spec in descriptor.params}
    for name in bindings:
        if name not in by_name:
            raise KindMismatch(name, "not a declared parameter")
    for spec in descriptor.params:
        bound = bindings.get(spec.name)
        if bound is None:
            if spec.required:
                raise MissingParam(spec.name)
            continue
        _check_value(spec, bound)


def _check_value(spec: ParameterSpec, bound: BoundValue) -> None:
    expected = _KIND_FOR_PARAM[spec.kind]
    if bound.kind == "selector":
        # slot references stand in for sessions and are resolved pre-plan
        if spec.kind is not ParamKind.SESSION_REF:
            raise KindMismatch(spec.name, "selector slots only bind session parameters")
        return
    if bound.kind != expected:
        raise KindMismatch(spec.name, f"expected {expected}, got {bound.kind}")
    if spec.repeated:
        if not isinstance(bound.value, (list, tuple)) or not bound.value:
            raise KindMismatch(spec.name, "expected a non-empty list")
        if not all(isinstance(v, str) and v for v in bound.value):
            raise KindMismatch(spec.name, "list elements must be non-empty strings")
    else:
        if not isinstance(bound.value, str) or not bound.value:
            raise KindMismatch(spec.name, "expected a non-empty string")
        if spec.kind is ParamKind.ENUM and bound.value not in spec.options:
            raise KindMismatch(spec.name, f"{bound.value!r} not in {spec.options}")


class BehaviourRegistry:
    """Registration-ordered descriptor store with applicability lookup."""

    def __init__(self) -> None:
        self._descriptors: dict[BehaviourId, BehaviourDescriptor] = {}

    def register(self, descriptor: BehaviourDescriptor) -> BehaviourId:
        if not descriptor.behaviour_id:
            raise InvalidParamSpec("behaviour id must be non-empty")
        if descriptor.behaviour_id in self._descriptors:
            raise DuplicateId(descriptor.behaviour_id)
        validate_param_specs(descriptor.params)
        self._descriptors[descriptor.behaviour_id] = descriptor
        return descriptor.behaviour_id

    def lookup(self, behaviour_id: BehaviourId) -> Optional[BehaviourDescriptor]:
        return self._descriptors.get(behaviour_id)

    def lookup_applicable(self, stereotype: Stereotype) -> list[BehaviourDescriptor]:
        return [d for d in self._descriptors.values() if d.applies_to(stereotype)]

    def all(self) -> list[BehaviourDescriptor]:
        return list(self._descriptors.values())


# --- binding accessors used by planners ------------------------------------

def _session_arg(bindings: Bindings, name: str) -> SessionId:
    return str(bindings[name].value)


def _object_arg(bindings: Bindings, name: str) -> ObjectId:
    return str(bindings[name].value)


# --- built-in planners ------------------------------------------------------

def plan_show_only_in(bindings: Bindings, ctx: PlanContext) -> InvocationPlan:
    """Show the object only in the chosen session: hide it everywhere else
    it is currently online, show it at the target."""
    obj = ctx.require_object(_object_arg(bindings, "object"))
    target = _session_arg(bindings, "target")
    ctx.require_session(target)
    hides = [
        cmd.hide(s, obj.object_id)
        for s in ctx.online_user_sessions(obj.object_id)
        if s != target
    ]
    return InvocationPlan(commands=tuple(hides) + (cmd.show(target, obj.object_id),))


def plan_redirect_interaction(bindings: Bindings, ctx: PlanContext) -> InvocationPlan:
    """Replay events made on the object in one session at another.

    The capture subscription lives hub-side: a standing route turns each
    incoming event from the source on this object into exactly one replay
    at the target.
    """
    obj = ctx.require_object(_object_arg(bindings, "object"))
    source = _session_arg(bindings, "source")
    target = _session_arg(bindings, "target")
    if source == target:
        raise SameSession(source)
    ctx.require_session(source)
    ctx.require_session(target)
    return InvocationPlan(routes=(RedirectRoute(obj.object_id, source, target),))


def plan_control_navigation(bindings: Bindings, ctx: PlanContext) -> InvocationPlan:
    """Drive one session's navigation from the control object shown in
    another.

    The controlled session hides the control object; the controller shows
    only it and captures navigation intents, which the hub turns into
    Navigate commands at the controlled session.
    """
    obj = ctx.require_object(_object_arg(bindings, "controlsBy"))
    controller = _session_arg(bindings, "controlsFrom")
    ctx.require_session(controller)
    online = ctx.online_user_sessions(obj.object_id)
    if "controlsIn" in bindings:
        controlled = _session_arg(bindings, "controlsIn")
        ctx.require_session(controlled)
    else:
        candidates = [s for s in online if s != controller]
        if not candidates:
            raise ObjectOffline(obj.object_id)
        controlled = candidates[0]
    if controller == controlled:
        raise SameSession(controller)
    if controlled not in online:
        raise ObjectOffline(f"{obj.object_id} not online in {controlled}")
    return InvocationPlan(
        commands=(
            cmd.hide(controlled, obj.object_id),
            cmd.show_only(controller, obj.object_id, capture_navigation=True),
        ),
        routes=(NavigationRoute(obj.object_id, controller, controlled),),
    )


def plan_open_in(bindings: Bindings, ctx: PlanContext) -> InvocationPlan:
    """Open a URL on another device rendering only the chosen objects.

    One command goes to one live session of the target device; that session
    loads the URL and reports the listed objects online.
    """
    raw = bindings["objects"].value
    object_ids = tuple(str(v) for v in raw) if isinstance(raw, (list, tuple)) else (str(raw),)
    if not object_ids:
        raise BindingError("objects list must be non-empty")
    objects = [ctx.require_object(oid) for oid in object_ids]
    if "url" not in bindings:
        # direct invocations inherit the invoking session's URL; elsewhere
        # the binding is mandatory
        raise BindingError("url must be bound")
    url = str(bindings["url"].value)
    for obj in objects:
        if not obj.locator.matches_url(url):
            raise MixedOrigins(f"{obj.object_id} does not live at {url}")
    device_id = str(bindings["device"].value)
    live = [
        s
        for s in ctx.user_sessions()
        if ctx.ledger.directory[s].device.device_id == device_id
    ]
    if not live:
        raise NoLiveSession(device_id)
    return InvocationPlan(commands=(cmd.open_url_with_objects(live[0], url, object_ids),))


def plan_mirror_content(bindings: Bindings, ctx: PlanContext) -> InvocationPlan:
    """Keep the object's content identical across sessions: every edit is
    fanned out to all other sessions where it is online, in hub order."""
    obj = ctx.require_object(_object_arg(bindings, "object"))
    if not ctx.online_user_sessions(obj.object_id):
        raise ObjectOffline(obj.object_id)
    return InvocationPlan(routes=(MirrorRoute(obj.object_id),))


def plan_remote_effect(bindings: Bindings, ctx: PlanContext) -> InvocationPlan:
    obj = ctx.require_object(_object_arg(bindings, "object"))
    target = _session_arg(bindings, "target")
    ctx.require_session(target)
    if target not in ctx.online_user_sessions(obj.object_id):
        raise ObjectOffline(f"{obj.object_id} not online in {target}")
    effect = EffectKind(str(bindings["effect"].value))
    return InvocationPlan(commands=(cmd.apply_effect(target, obj.object_id, effect),))


def plan_media_control(bindings: Bindings, ctx: PlanContext) -> InvocationPlan:
    obj = ctx.require_object(_object_arg(bindings, "object"))
    if obj.stereotype is not Stereotype.VIDEO:
        raise StereotypeMismatch(f"{obj.object_id} is {obj.stereotype.value}, not Video")
    target = _session_arg(bindings, "target")
    ctx.require_session(target)
    if target not in ctx.online_user_sessions(obj.object_id):
        raise ObjectOffline(f"{obj.object_id} not online in {target}")
    verb = MediaVerb(str(bindings["verb"].value))
    return InvocationPlan(commands=(cmd.media_control(target, obj.object_id, verb),))


SHOW_ONLY_IN = "ShowOnlyIn"
REDIRECT_INTERACTION = "RedirectInteraction"
CONTROL_NAVIGATION = "ControlNavigation"
OPEN_IN = "OpenIn"
MIRROR_CONTENT = "MirrorContent"
REMOTE_EFFECT = "RemoteEffect"
PLAY_VIDEO_ON = "PlayVideoOn"


def builtin_descriptors() -> list[BehaviourDescriptor]:
    obj_param = ParameterSpec("object", ParamKind.OBJECT_REF)
    return [
        BehaviourDescriptor(
            SHOW_ONLY_IN,
            "Show only in...",
            params=(obj_param, ParameterSpec("target", ParamKind.SESSION_REF)),
            planner=plan_show_only_in,
        ),
        BehaviourDescriptor(
            REDIRECT_INTERACTION,
            "Redirect interaction to...",
            params=(
                obj_param,
                ParameterSpec("source", ParamKind.SESSION_REF),
                ParameterSpec("target", ParamKind.SESSION_REF),
            ),
            planner=plan_redirect_interaction,
        ),
        BehaviourDescriptor(
            CONTROL_NAVIGATION,
            "Control navigation from...",
            params=(
                ParameterSpec("controlsBy", ParamKind.OBJECT_REF),
                ParameterSpec("controlsFrom", ParamKind.SESSION_REF),
                ParameterSpec("controlsIn", ParamKind.SESSION_REF, required=False),
            ),
            planner=plan_control_navigation,
        ),
        BehaviourDescriptor(
            OPEN_IN,
            "Open in...",
            params=(
                ParameterSpec("objects", ParamKind.OBJECT_REF, repeated=True),
                ParameterSpec("device", ParamKind.DEVICE_REF),
                ParameterSpec("url", ParamKind.TEXT, required=False),
            ),
            planner=plan_open_in,
        ),
        BehaviourDescriptor(
            MIRROR_CONTENT,
            "Mirror content",
            params=(obj_param,),
            planner=plan_mirror_content,
        ),
        BehaviourDescriptor(
            REMOTE_EFFECT,
            "Remote effect",
            params=(
                obj_param,
                ParameterSpec("effect", ParamKind.ENUM, options=tuple(e.value for e in EffectKind)),
                ParameterSpec("target", ParamKind.SESSION_REF),
            ),
            planner=plan_remote_effect,
        ),
        BehaviourDescriptor(
            PLAY_VIDEO_ON,
            "Play video on...",
            params=(
                obj_param,
                ParameterSpec("verb", ParamKind.ENUM, options=tuple(v.value for v in MediaVerb)),
                ParameterSpec("target", ParamKind.SESSION_REF),
            ),
            applicability=frozenset({Stereotype.VIDEO}),
            planner=plan_media_control,
        ),
    ]


def builtin_registry() -> BehaviourRegistry:
    registry = BehaviourRegistry()
    for descriptor in builtin_descriptors():
        registry.register(descriptor)
    return registry

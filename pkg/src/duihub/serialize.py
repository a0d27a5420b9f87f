"""Strict JSON-dict conversions for every entity that crosses the wire or
hits disk.

Parsing is schema-checked: unknown fields, wrong types and empty
identifiers are rejected with SchemaViolation, so a parsed value always
re-serializes to the exact canonical form it came from.
"""

from __future__ import annotations

from typing import Any, Mapping, Optional

from .behaviours import (
    BehaviourDescriptor,
    BoundValue,
    ParamKind,
    ParameterSpec,
    RepoMeta,
)
from .commands import (
    CommandAction,
    ContentMutationDescriptor,
    DomEventDescriptor,
    EffectKind,
    MediaVerb,
    SessionCommand,
    validate_command,
)
from .errors import SchemaViolation
from .model import (
    DeviceInfo,
    DeviceKind,
    Locator,
    PresenceRecord,
    PresenceState,
    SessionInfo,
    Stereotype,
    UIObject,
)
from .rules import (
    AnySessionOfUser,
    ExactSession,
    ObjectOfflineIn,
    ObjectOnlineIn,
    OfDeviceKind,
    OnDevice,
    Predicate,
    Rule,
    RuleAction,
    SecondSessionSameDevice,
    Selector,
    SessionsSameDevice,
)


def _require(d: Any, fields: set[str], optional: set[str] = frozenset(), where: str = "") -> None:
    if not isinstance(d, dict):
        raise SchemaViolation(f"{where or 'value'} must be an object")
    missing = fields - d.keys()
    if missing:
        raise SchemaViolation(f"{where}: missing {sorted(missing)}")
    unknown = d.keys() - fields - optional
    if unknown:
        raise SchemaViolation(f"{where}: unknown fields {sorted(unknown)}")


def _str(d: Mapping, key: str, where: str, allow_empty: bool = False) -> str:
    v = d.get(key)
    if not isinstance(v, str) or (not allow_empty and not v):
        raise SchemaViolation(f"{where}.{key} must be a non-empty string")
    return v


def _int(d: Mapping, key: str, where: str, minimum: int = 0) -> int:
    v = d.get(key)
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise SchemaViolation(f"{where}.{key} must be an integer >= {minimum}")
    return v


def _bool(d: Mapping, key: str, where: str) -> bool:
    v = d.get(key)
    if not isinstance(v, bool):
        raise SchemaViolation(f"{where}.{key} must be a boolean")
    return v


def _enum(cls, raw: Any, where: str):
    try:
        return cls(raw)
    except (ValueError, TypeError):
        raise SchemaViolation(f"{where}: {raw!r} is not one of {[e.value for e in cls]}") from None


def _str_list(raw: Any, where: str, allow_empty_list: bool = True) -> list[str]:
    if not isinstance(raw, list) or not all(isinstance(v, str) and v for v in raw):
        raise SchemaViolation(f"{where} must be a list of non-empty strings")
    if not raw and not allow_empty_list:
        raise SchemaViolation(f"{where} must be non-empty")
    return raw


# --- model entities ---------------------------------------------------------

def device_to_dict(device: DeviceInfo) -> dict:
    return {"deviceId": device.device_id, "kind": device.kind.value, "label": device.label}


def device_from_dict(d: Any, where: str = "device") -> DeviceInfo:
    _require(d, {"deviceId", "kind", "label"}, where=where)
    return DeviceInfo(
        device_id=_str(d, "deviceId", where),
        kind=_enum(DeviceKind, d["kind"], f"{where}.kind"),
        label=_str(d, "label", where, allow_empty=True),
    )


def locator_to_dict(locator: Locator) -> dict:
    return {"urlPattern": locator.url_pattern, "elementPath": locator.element_path}


def locator_from_dict(d: Any, where: str = "locator") -> Locator:
    _require(d, {"urlPattern", "elementPath"}, where=where)
    return Locator(
        url_pattern=_str(d, "urlPattern", where),
        element_path=_str(d, "elementPath", where),
    )


def object_to_dict(obj: UIObject) -> dict:
    return {
        "objectId": obj.object_id,
        "owner": obj.owner,
        "name": obj.name,
        "tags": sorted(obj.tags),
        "stereotype": obj.stereotype.value,
        "locator": locator_to_dict(obj.locator),
        "enabledBehaviours": sorted(obj.enabled_behaviours),
        "createdAt": obj.created_at,
    }


def object_from_dict(d: Any, where: str = "object") -> UIObject:
    _require(
        d,
        {"objectId", "owner", "name", "tags", "stereotype", "locator", "enabledBehaviours", "createdAt"},
        where=where,
    )
    return UIObject(
        object_id=_str(d, "objectId", where),
        owner=_str(d, "owner", where),
        name=_str(d, "name", where),
        tags=frozenset(_str_list(d["tags"], f"{where}.tags")),
        stereotype=_enum(Stereotype, d["stereotype"], f"{where}.stereotype"),
        locator=locator_from_dict(d["locator"], f"{where}.locator"),
        enabled_behaviours=frozenset(_str_list(d["enabledBehaviours"], f"{where}.enabledBehaviours")),
        created_at=_int(d, "createdAt", where),
    )


def record_to_dict(rec: PresenceRecord) -> dict:
    return {
        "objectId": rec.object_id,
        "sessionId": rec.session_id,
        "state": rec.state.value,
        "seq": rec.seq,
    }


def record_from_dict(d: Any, where: str = "record") -> PresenceRecord:
    _require(d, {"objectId", "sessionId", "state", "seq"}, where=where)
    return PresenceRecord(
        object_id=_str(d, "objectId", where),
        session_id=_str(d, "sessionId", where),
        state=_enum(PresenceState, d["state"], f"{where}.state"),
        seq=_int(d, "seq", where, minimum=0),
    )


def session_info_to_dict(info: SessionInfo) -> dict:
    return {
        "sessionId": info.session_id,
        "userId": info.user_id,
        "device": device_to_dict(info.device),
        "currentUrl": info.current_url,
    }


def session_info_from_dict(d: Any, where: str = "session") -> SessionInfo:
    _require(d, {"sessionId", "userId", "device", "currentUrl"}, where=where)
    return SessionInfo(
        session_id=_str(d, "sessionId", where),
        user_id=_str(d, "userId", where),
        device=device_from_dict(d["device"], f"{where}.device"),
        current_url=_str(d, "currentUrl", where, allow_empty=True),
    )


# --- bindings and parameter schemas ------------------------------------------

_VALUE_KINDS = {"session", "device", "object", "text", "enum", "selector"}


def bound_value_to_dict(bound: BoundValue) -> dict:
    value = list(bound.value) if isinstance(bound.value, tuple) else bound.value
    return {"kind": bound.kind, "value": value}


def bound_value_from_dict(d: Any, where: str) -> BoundValue:
    _require(d, {"kind", "value"}, where=where)
    kind = _str(d, "kind", where)
    if kind not in _VALUE_KINDS:
        raise SchemaViolation(f"{where}.kind: unknown value kind {kind!r}")
    raw = d["value"]
    if isinstance(raw, list):
        if kind != "object":
            raise SchemaViolation(f"{where}: only object bindings may be lists")
        return BoundValue(kind, tuple(_str_list(raw, f"{where}.value", allow_empty_list=False)))
    if not isinstance(raw, str):
        raise SchemaViolation(f"{where}.value must be a string or list of strings")
    return BoundValue(kind, raw)


def bindings_to_dict(bindings: Mapping[str, BoundValue]) -> dict:
    return {name: bound_value_to_dict(v) for name, v in sorted(bindings.items())}


def bindings_from_dict(d: Any, where: str = "bindings") -> dict[str, BoundValue]:
    if not isinstance(d, dict):
        raise SchemaViolation(f"{where} must be an object")
    out = {}
    for name, raw in d.items():
        if not name:
            raise SchemaViolation(f"{where}: empty parameter name")
        out[name] = bound_value_from_dict(raw, f"{where}.{name}")
    return out


def param_spec_to_dict(spec: ParameterSpec) -> dict:
    out = {
        "name": spec.name,
        "kind": spec.kind.value,
        "required": spec.required,
        "repeated": spec.repeated,
    }
    if spec.kind is ParamKind.ENUM:
        out["options"] = list(spec.options)
    return out


def param_spec_from_dict(d: Any, where: str = "param") -> ParameterSpec:
    _require(d, {"name", "kind", "required", "repeated"}, optional={"options"}, where=where)
    kind = _enum(ParamKind, d["kind"], f"{where}.kind")
    options: tuple[str, ...] = ()
    if "options" in d:
        options = tuple(_str_list(d["options"], f"{where}.options", allow_empty_list=False))
    return ParameterSpec(
        name=_str(d, "name", where),
        kind=kind,
        required=_bool(d, "required", where),
        repeated=_bool(d, "repeated", where),
        options=options,
    )


def descriptor_meta_to_dict(descriptor: BehaviourDescriptor) -> dict:
    applicability: Any = "agnostic"
    if descriptor.applicability is not None:
        applicability = sorted(s.value for s in descriptor.applicability)
    return {
        "behaviourId": descriptor.behaviour_id,
        "displayName": descriptor.display_name,
        "applicability": applicability,
        "params": [param_spec_to_dict(p) for p in descriptor.params],
    }


def descriptor_meta_from_dict(d: Any, where: str = "meta") -> BehaviourDescriptor:
    _require(d, {"behaviourId", "displayName", "applicability", "params"}, where=where)
    raw_app = d["applicability"]
    if raw_app == "agnostic":
        applicability = None
    elif isinstance(raw_app, list):
        applicability = frozenset(
            _enum(Stereotype, s, f"{where}.applicability") for s in raw_app
        )
        if not applicability:
            raise SchemaViolation(f"{where}.applicability list must be non-empty")
    else:
        raise SchemaViolation(f"{where}.applicability must be 'agnostic' or a stereotype list")
    if not isinstance(d["params"], list):
        raise SchemaViolation(f"{where}.params must be a list")
    return BehaviourDescriptor(
        behaviour_id=_str(d, "behaviourId", where),
        display_name=_str(d, "displayName", where),
        applicability=applicability,
        params=tuple(param_spec_from_dict(p, f"{where}.params[{i}]") for i, p in enumerate(d["params"])),
    )


# --- rules --------------------------------------------------------------------

def selector_to_dict(selector: Selector) -> dict:
    if isinstance(selector, ExactSession):
        return {"type": "exact", "sessionId": selector.session_id}
    if isinstance(selector, OnDevice):
        return {"type": "onDevice", "deviceId": selector.device_id}
    if isinstance(selector, OfDeviceKind):
        return {"type": "deviceKind", "kind": selector.kind.value}
    if isinstance(selector, AnySessionOfUser):
        return {"type": "any"}
    return {"type": "secondSessionSameDevice", "of": selector.of}


def selector_from_dict(d: Any, where: str) -> Selector:
    if not isinstance(d, dict) or "type" not in d:
        raise SchemaViolation(f"{where} must be an object with a type")
    t = d["type"]
    if t == "exact":
        _require(d, {"type", "sessionId"}, where=where)
        return ExactSession(_str(d, "sessionId", where))
    if t == "onDevice":
        _require(d, {"type", "deviceId"}, where=where)
        return OnDevice(_str(d, "deviceId", where))
    if t == "deviceKind":
        _require(d, {"type", "kind"}, where=where)
        return OfDeviceKind(_enum(DeviceKind, d["kind"], f"{where}.kind"))
    if t == "any":
        _require(d, {"type"}, where=where)
        return AnySessionOfUser()
    if t == "secondSessionSameDevice":
        _require(d, {"type", "of"}, where=where)
        return SecondSessionSameDevice(_str(d, "of", where))
    raise SchemaViolation(f"{where}: unknown selector type {t!r}")


def predicate_to_dict(pred: Predicate) -> dict:
    if isinstance(pred, ObjectOnlineIn):
        return {"type": "objectOnlineIn", "objectId": pred.object_id, "selector": pred.selector}
    if isinstance(pred, ObjectOfflineIn):
        return {"type": "objectOfflineIn", "objectId": pred.object_id, "selector": pred.selector}
    return {"type": "sessionsSameDevice", "a": pred.a, "b": pred.b}


def predicate_from_dict(d: Any, where: str) -> Predicate:
    if not isinstance(d, dict) or "type" not in d:
        raise SchemaViolation(f"{where} must be an object with a type")
    t = d["type"]
    if t == "objectOnlineIn":
        _require(d, {"type", "objectId", "selector"}, where=where)
        return ObjectOnlineIn(_str(d, "objectId", where), _str(d, "selector", where))
    if t == "objectOfflineIn":
        _require(d, {"type", "objectId", "selector"}, where=where)
        return ObjectOfflineIn(_str(d, "objectId", where), _str(d, "selector", where))
    if t == "sessionsSameDevice":
        _require(d, {"type", "a", "b"}, where=where)
        return SessionsSameDevice(_str(d, "a", where), _str(d, "b", where))
    raise SchemaViolation(f"{where}: unknown predicate type {t!r}")


def rule_to_dict(rule: Rule) -> dict:
    return {
        "ruleId": rule.rule_id,
        "owner": rule.owner,
        "selectors": {name: selector_to_dict(sel) for name, sel in rule.selectors.items()},
        "condition": [predicate_to_dict(p) for p in rule.condition],
        "actions": [
            {"behaviourId": a.behaviour_id, "bindings": bindings_to_dict(a.bindings)}
            for a in rule.actions
        ],
        "enabled": rule.enabled,
    }


def rule_from_dict(d: Any, where: str = "rule", allow_blank_id: bool = False) -> Rule:
    _require(d, {"ruleId", "owner", "selectors", "condition", "actions", "enabled"}, where=where)
    if not isinstance(d["selectors"], dict):
        raise SchemaViolation(f"{where}.selectors must be an object")
    if not isinstance(d["condition"], list) or not isinstance(d["actions"], list):
        raise SchemaViolation(f"{where}: condition and actions must be lists")
    selectors = {
        name: selector_from_dict(sel, f"{where}.selectors.{name}")
        for name, sel in d["selectors"].items()
    }
    actions = []
    for i, raw in enumerate(d["actions"]):
        aw = f"{where}.actions[{i}]"
        _require(raw, {"behaviourId", "bindings"}, where=aw)
        actions.append(
            RuleAction(
                behaviour_id=_str(raw, "behaviourId", aw),
                bindings=bindings_from_dict(raw["bindings"], f"{aw}.bindings"),
            )
        )
    return Rule(
        rule_id=_str(d, "ruleId", where, allow_empty=allow_blank_id),
        owner=_str(d, "owner", where),
        selectors=selectors,
        condition=tuple(
            predicate_from_dict(p, f"{where}.condition[{i}]") for i, p in enumerate(d["condition"])
        ),
        actions=tuple(actions),
        enabled=_bool(d, "enabled", where),
    )


# --- events, mutations, commands ----------------------------------------------

def dom_event_to_dict(event: DomEventDescriptor) -> dict:
    out = {
        "objectId": event.object_id,
        "eventType": event.event_type,
        "relativeTargetPath": event.relative_target_path,
    }
    if event.payload is not None:
        out["payload"] = event.payload
    return out


def dom_event_from_dict(d: Any, where: str = "event") -> DomEventDescriptor:
    _require(d, {"objectId", "eventType", "relativeTargetPath"}, optional={"payload"}, where=where)
    payload = None
    if "payload" in d:
        payload = _str(d, "payload", where, allow_empty=True)
    return DomEventDescriptor(
        object_id=_str(d, "objectId", where),
        event_type=_str(d, "eventType", where),
        relative_target_path=_str(d, "relativeTargetPath", where, allow_empty=True),
        payload=payload,
    )


def mutation_to_dict(mutation: ContentMutationDescriptor) -> dict:
    out: dict[str, Any] = {
        "objectId": mutation.object_id,
        "relativeTargetPath": mutation.relative_target_path,
        "originSeq": mutation.origin_seq,
    }
    if mutation.new_text is not None:
        out["newText"] = mutation.new_text
    if mutation.attribute is not None:
        out["attribute"] = {"name": mutation.attribute[0], "value": mutation.attribute[1]}
    return out


def mutation_from_dict(d: Any, where: str = "mutation") -> ContentMutationDescriptor:
    _require(
        d,
        {"objectId", "relativeTargetPath", "originSeq"},
        optional={"newText", "attribute"},
        where=where,
    )
    if ("newText" in d) == ("attribute" in d):
        raise SchemaViolation(f"{where}: exactly one of newText / attribute")
    attribute = None
    if "attribute" in d:
        _require(d["attribute"], {"name", "value"}, where=f"{where}.attribute")
        attribute = (
            _str(d["attribute"], "name", f"{where}.attribute"),
            _str(d["attribute"], "value", f"{where}.attribute", allow_empty=True),
        )
    return ContentMutationDescriptor(
        object_id=_str(d, "objectId", where),
        relative_target_path=_str(d, "relativeTargetPath", where, allow_empty=True),
        new_text=_str(d, "newText", where, allow_empty=True) if "newText" in d else None,
        attribute=attribute,
        origin_seq=_int(d, "originSeq", where, minimum=1),
    )


_COMMAND_FIELDS = {
    CommandAction.HIDE: {"objectId"},
    CommandAction.SHOW: {"objectId"},
    CommandAction.SHOW_ONLY: {"objectId", "captureNavigation"},
    CommandAction.NAVIGATE: {"url"},
    CommandAction.REPLAY_EVENT: {"objectId", "event"},
    CommandAction.APPLY_MUTATION: {"objectId", "mutation"},
    CommandAction.OPEN_URL_WITH_OBJECTS: {"url", "objectIds"},
    CommandAction.APPLY_EFFECT: {"objectId", "effect"},
    CommandAction.MEDIA_CONTROL: {"objectId", "verb"},
}
_COMMAND_OPTIONAL = {CommandAction.NAVIGATE: {"objectId"}}


def command_to_dict(command: SessionCommand) -> dict:
    args: dict[str, Any] = {}
    if command.object_id is not None:
        args["objectId"] = command.object_id
    if command.url is not None:
        args["url"] = command.url
    if command.event is not None:
        args["event"] = dom_event_to_dict(command.event)
    if command.mutation is not None:
        args["mutation"] = mutation_to_dict(command.mutation)
    if command.effect is not None:
        args["effect"] = command.effect.value
    if command.verb is not None:
        args["verb"] = command.verb.value
    if command.object_ids:
        args["objectIds"] = list(command.object_ids)
    if command.action is CommandAction.SHOW_ONLY:
        args["captureNavigation"] = command.capture_navigation
    return {"target": command.target, "action": command.action.value, "args": args}


def command_from_dict(d: Any, where: str = "command") -> SessionCommand:
    _require(d, {"target", "action", "args"}, where=where)
    action = _enum(CommandAction, d["action"], f"{where}.action")
    args = d["args"]
    wa = f"{where}.args"
    _require(args, _COMMAND_FIELDS[action], optional=_COMMAND_OPTIONAL.get(action, set()), where=wa)
    command = SessionCommand(
        target=_str(d, "target", where),
        action=action,
        object_id=_str(args, "objectId", wa) if "objectId" in args else None,
        url=_str(args, "url", wa) if "url" in args else None,
        event=dom_event_from_dict(args["event"], f"{wa}.event") if "event" in args else None,
        mutation=mutation_from_dict(args["mutation"], f"{wa}.mutation") if "mutation" in args else None,
        effect=_enum(EffectKind, args["effect"], f"{wa}.effect") if "effect" in args else None,
        verb=_enum(MediaVerb, args["verb"], f"{wa}.verb") if "verb" in args else None,
        object_ids=tuple(_str_list(args["objectIds"], f"{wa}.objectIds", allow_empty_list=False))
        if "objectIds" in args
        else (),
        capture_navigation=_bool(args, "captureNavigation", wa) if "captureNavigation" in args else False,
    )
    validate_command(command)
    return command

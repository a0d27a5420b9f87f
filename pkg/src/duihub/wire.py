"""Typed message envelope and canonical framing for client/hub traffic.

One frame is one UTF-8 JSON document, at most 1 MiB:

    {"kind": "<Kind>", "msgId": "<unique>", "serverSeq": <int, optional>,
     "payload": {...kind-specific...}}

``serverSeq`` is present exactly when the hub has accepted the message;
the hub assigns a strictly increasing value to every accepted frame, which
totally orders all traffic. Encoding is canonical (sorted keys, no
whitespace), so encode(decode(b)) == b for every frame this module
produced, and decode(encode(m)) == m for every well-formed message.

Field names and kind strings below are the public protocol; see
docs/PROTOCOL.md for the bit-exact schema of every payload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping, Optional, Union

from . import serialize as ser
from .behaviours import BehaviourDescriptor, BoundValue
from .commands import ContentMutationDescriptor, DomEventDescriptor, SessionCommand
from .errors import AlreadySequenced, MalformedFrame, SchemaViolation, UnknownKind
from .model import (
    DeviceInfo,
    Locator,
    PresenceRecord,
    SessionInfo,
    Stereotype,
    UIObject,
)
from .rules import Rule
from .serialize import _bool, _int, _require, _str  # shared strict helpers

MAX_FRAME_BYTES = 1 << 20


class Kind(str, Enum):
    HELLO = "Hello"
    WELCOME = "Welcome"
    COLLECT_OBJECT = "CollectObject"
    UPDATE_OBJECT = "UpdateObject"
    DELETE_OBJECT = "DeleteObject"
    PRESENCE_UPDATE = "PresenceUpdate"
    INVOKE_BEHAVIOUR = "InvokeBehaviour"
    SESSION_COMMAND = "SessionCommand"
    DOM_EVENT = "DomEvent"
    NAVIGATION_COMMAND = "NavigationCommand"
    CONTENT_MUTATION = "ContentMutation"
    UPLOAD_BEHAVIOUR = "UploadBehaviour"
    FETCH_BEHAVIOUR = "FetchBehaviour"
    ACK = "Ack"
    ERROR = "Error"


# --- payloads ----------------------------------------------------------------

@dataclass(frozen=True)
class Hello:
    user_id: str
    credentials: str
    device: DeviceInfo


@dataclass(frozen=True)
class Welcome:
    session_id: str
    token: str
    objects: tuple[UIObject, ...] = ()
    rules: tuple[Rule, ...] = ()
    ledger: tuple[PresenceRecord, ...] = ()
    sessions: tuple[SessionInfo, ...] = ()
    behaviours: tuple[BehaviourDescriptor, ...] = ()  # meta only, no planners


@dataclass(frozen=True)
class CollectObject:
    locator: Locator
    stereotype: Stereotype
    name: str
    tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class UpdateObject:
    """Carries exactly one entry of the personal collection: an object or a rule."""

    object: Optional[UIObject] = None
    rule: Optional[Rule] = None


@dataclass(frozen=True)
class DeleteObject:
    object_id: Optional[str] = None
    rule_id: Optional[str] = None


@dataclass(frozen=True)
class PresenceUpdate:
    """Object-scope: one presence record. Session-scope: a directory event
    (joined / left / url), carrying the session's info."""

    scope: str  # "object" | "session"
    record: Optional[PresenceRecord] = None
    event: Optional[str] = None  # "joined" | "left" | "url"
    session: Optional[SessionInfo] = None


@dataclass(frozen=True)
class InvokeBehaviour:
    behaviour_id: str
    bindings: Mapping[str, BoundValue] = field(default_factory=dict)


@dataclass(frozen=True)
class SessionCommandMsg:
    command: SessionCommand


@dataclass(frozen=True)
class DomEvent:
    event: DomEventDescriptor


@dataclass(frozen=True)
class NavigationCommand:
    """A navigation intent captured at a controlling session."""

    object_id: str
    url: str


@dataclass(frozen=True)
class ContentMutation:
    mutation: ContentMutationDescriptor


@dataclass(frozen=True)
class UploadBehaviour:
    meta: BehaviourDescriptor  # meta only; script stays an opaque blob
    script: str
    public: bool = False
    reviews_enabled: bool = False
    bug_tracking_enabled: bool = False


@dataclass(frozen=True)
class FetchBehaviour:
    behaviour_id: Optional[str] = None  # None lists all visible behaviours


@dataclass(frozen=True)
class Ack:
    in_reply_to: str
    result: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Error:
    code: str
    message: str = ""
    in_reply_to: Optional[str] = None


Payload = Union[
    Hello, Welcome, CollectObject, UpdateObject, DeleteObject, PresenceUpdate,
    InvokeBehaviour, SessionCommandMsg, DomEvent, NavigationCommand,
    ContentMutation, UploadBehaviour, FetchBehaviour, Ack, Error,
]

_KIND_FOR_PAYLOAD = {
    Hello: Kind.HELLO,
    Welcome: Kind.WELCOME,
    CollectObject: Kind.COLLECT_OBJECT,
    UpdateObject: Kind.UPDATE_OBJECT,
    DeleteObject: Kind.DELETE_OBJECT,
    PresenceUpdate: Kind.PRESENCE_UPDATE,
    InvokeBehaviour: Kind.INVOKE_BEHAVIOUR,
    SessionCommandMsg: Kind.SESSION_COMMAND,
    DomEvent: Kind.DOM_EVENT,
    NavigationCommand: Kind.NAVIGATION_COMMAND,
    ContentMutation: Kind.CONTENT_MUTATION,
    UploadBehaviour: Kind.UPLOAD_BEHAVIOUR,
    FetchBehaviour: Kind.FETCH_BEHAVIOUR,
    Ack: Kind.ACK,
    Error: Kind.ERROR,
}


@dataclass(frozen=True)
class WireMessage:
    msg_id: str
    payload: Payload
    server_seq: Optional[int] = None

    @property
    def kind(self) -> Kind:
        return _KIND_FOR_PAYLOAD[type(self.payload)]


def assign_server_seq(msg: WireMessage, counter: int) -> tuple[WireMessage, int]:
    """Stamp the next hub sequence number onto an accepted message."""
    if msg.server_seq is not None:
        raise AlreadySequenced(f"{msg.msg_id} already carries seq {msg.server_seq}")
    return WireMessage(msg.msg_id, msg.payload, server_seq=counter), counter + 1


# --- payload (de)serialization --------------------------------------------------

def _payload_to_dict(payload: Payload) -> dict:
    if isinstance(payload, Hello):
        return {
            "userId": payload.user_id,
            "credentials": payload.credentials,
            "device": ser.device_to_dict(payload.device),
        }
    if isinstance(payload, Welcome):
        return {
            "sessionId": payload.session_id,
            "token": payload.token,
            "objects": [ser.object_to_dict(o) for o in payload.objects],
            "rules": [ser.rule_to_dict(r) for r in payload.rules],
            "ledger": [ser.record_to_dict(r) for r in payload.ledger],
            "sessions": [ser.session_info_to_dict(s) for s in payload.sessions],
            "behaviours": [ser.descriptor_meta_to_dict(b) for b in payload.behaviours],
        }
    if isinstance(payload, CollectObject):
        return {
            "locator": ser.locator_to_dict(payload.locator),
            "stereotype": payload.stereotype.value,
            "name": payload.name,
            "tags": sorted(payload.tags),
        }
    if isinstance(payload, UpdateObject):
        if (payload.object is None) == (payload.rule is None):
            raise SchemaViolation("UpdateObject carries exactly one of object / rule")
        if payload.object is not None:
            return {"object": ser.object_to_dict(payload.object)}
        return {"rule": ser.rule_to_dict(payload.rule)}
    if isinstance(payload, DeleteObject):
        if (payload.object_id is None) == (payload.rule_id is None):
            raise SchemaViolation("DeleteObject carries exactly one of objectId / ruleId")
        if payload.object_id is not None:
            return {"objectId": payload.object_id}
        return {"ruleId": payload.rule_id}
    if isinstance(payload, PresenceUpdate):
        if payload.scope == "object":
            if payload.record is None:
                raise SchemaViolation("object-scope PresenceUpdate needs a record")
            return {"scope": "object", "record": ser.record_to_dict(payload.record)}
        if payload.scope != "session" or payload.session is None or payload.event is None:
            raise SchemaViolation("session-scope PresenceUpdate needs event and session")
        return {
            "scope": "session",
            "event": payload.event,
            "session": ser.session_info_to_dict(payload.session),
        }
    if isinstance(payload, InvokeBehaviour):
        return {
            "behaviourId": payload.behaviour_id,
            "bindings": ser.bindings_to_dict(payload.bindings),
        }
    if isinstance(payload, SessionCommandMsg):
        return ser.command_to_dict(payload.command)
    if isinstance(payload, DomEvent):
        return {"event": ser.dom_event_to_dict(payload.event)}
    if isinstance(payload, NavigationCommand):
        return {"objectId": payload.object_id, "url": payload.url}
    if isinstance(payload, ContentMutation):
        return {"mutation": ser.mutation_to_dict(payload.mutation)}
    if isinstance(payload, UploadBehaviour):
        return {
            "meta": ser.descriptor_meta_to_dict(payload.meta),
            "script": payload.script,
            "public": payload.public,
            "reviewsEnabled": payload.reviews_enabled,
            "bugTrackingEnabled": payload.bug_tracking_enabled,
        }
    if isinstance(payload, FetchBehaviour):
        return {"behaviourId": payload.behaviour_id} if payload.behaviour_id else {}
    if isinstance(payload, Ack):
        return {"inReplyTo": payload.in_reply_to, "result": _to_plain(payload.result)}
    if isinstance(payload, Error):
        out = {"code": payload.code, "message": payload.message}
        if payload.in_reply_to is not None:
            out["inReplyTo"] = payload.in_reply_to
        return out
    raise SchemaViolation(f"unserializable payload {type(payload).__name__}")


def _to_plain(value: Any) -> Any:
    # Ack results are freeform JSON; normalize mappings for canonical output
    if isinstance(value, Mapping):
        return {str(k): _to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_plain(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if value is None or isinstance(value, (str, int, float, bool)):
        return value
    raise SchemaViolation(f"non-JSON value in ack result: {type(value).__name__}")


_SCRIPT_LIMIT = 512 * 1024


def _payload_from_dict(kind: Kind, d: Any) -> Payload:
    w = kind.value
    if not isinstance(d, dict):
        raise SchemaViolation(f"{w}: payload must be an object")
    if kind is Kind.HELLO:
        _require(d, {"userId", "credentials", "device"}, where=w)
        return Hello(
            user_id=_str(d, "userId", w),
            credentials=_str(d, "credentials", w, allow_empty=True),
            device=ser.device_from_dict(d["device"], f"{w}.device"),
        )
    if kind is Kind.WELCOME:
        _require(d, {"sessionId", "token", "objects", "rules", "ledger", "sessions", "behaviours"}, where=w)
        for key in ("objects", "rules", "ledger", "sessions", "behaviours"):
            if not isinstance(d[key], list):
                raise SchemaViolation(f"{w}.{key} must be a list")
        return Welcome(
            session_id=_str(d, "sessionId", w),
            token=_str(d, "token", w),
            objects=tuple(ser.object_from_dict(o, f"{w}.objects") for o in d["objects"]),
            rules=tuple(ser.rule_from_dict(r, f"{w}.rules") for r in d["rules"]),
            ledger=tuple(ser.record_from_dict(r, f"{w}.ledger") for r in d["ledger"]),
            sessions=tuple(ser.session_info_from_dict(s, f"{w}.sessions") for s in d["sessions"]),
            behaviours=tuple(ser.descriptor_meta_from_dict(b, f"{w}.behaviours") for b in d["behaviours"]),
        )
    if kind is Kind.COLLECT_OBJECT:
        _require(d, {"locator", "stereotype", "name", "tags"}, where=w)
        return CollectObject(
            locator=ser.locator_from_dict(d["locator"], f"{w}.locator"),
            stereotype=ser._enum(Stereotype, d["stereotype"], f"{w}.stereotype"),
            name=_str(d, "name", w, allow_empty=True),  # emptiness rejected later: EmptyName
            tags=tuple(ser._str_list(d["tags"], f"{w}.tags")),
        )
    if kind is Kind.UPDATE_OBJECT:
        _require(d, set(), optional={"object", "rule"}, where=w)
        if ("object" in d) == ("rule" in d):
            raise SchemaViolation(f"{w}: exactly one of object / rule")
        if "object" in d:
            return UpdateObject(object=ser.object_from_dict(d["object"], f"{w}.object"))
        return UpdateObject(rule=ser.rule_from_dict(d["rule"], f"{w}.rule", allow_blank_id=True))
    if kind is Kind.DELETE_OBJECT:
        _require(d, set(), optional={"objectId", "ruleId"}, where=w)
        if ("objectId" in d) == ("ruleId" in d):
            raise SchemaViolation(f"{w}: exactly one of objectId / ruleId")
        if "objectId" in d:
            return DeleteObject(object_id=_str(d, "objectId", w))
        return DeleteObject(rule_id=_str(d, "ruleId", w))
    if kind is Kind.PRESENCE_UPDATE:
        scope = d.get("scope")
        if scope == "object":
            _require(d, {"scope", "record"}, where=w)
            return PresenceUpdate(scope="object", record=ser.record_from_dict(d["record"], f"{w}.record"))
        if scope == "session":
            _require(d, {"scope", "event", "session"}, where=w)
            event = _str(d, "event", w)
            if event not in ("joined", "left", "url"):
                raise SchemaViolation(f"{w}.event must be joined/left/url")
            return PresenceUpdate(
                scope="session",
                event=event,
                session=ser.session_info_from_dict(d["session"], f"{w}.session"),
            )
        raise SchemaViolation(f"{w}.scope must be 'object' or 'session'")
    if kind is Kind.INVOKE_BEHAVIOUR:
        _require(d, {"behaviourId", "bindings"}, where=w)
        return InvokeBehaviour(
            behaviour_id=_str(d, "behaviourId", w),
            bindings=ser.bindings_from_dict(d["bindings"], f"{w}.bindings"),
        )
    if kind is Kind.SESSION_COMMAND:
        return SessionCommandMsg(command=ser.command_from_dict(d, w))
    if kind is Kind.DOM_EVENT:
        _require(d, {"event"}, where=w)
        return DomEvent(event=ser.dom_event_from_dict(d["event"], f"{w}.event"))
    if kind is Kind.NAVIGATION_COMMAND:
        _require(d, {"objectId", "url"}, where=w)
        return NavigationCommand(object_id=_str(d, "objectId", w), url=_str(d, "url", w))
    if kind is Kind.CONTENT_MUTATION:
        _require(d, {"mutation"}, where=w)
        return ContentMutation(mutation=ser.mutation_from_dict(d["mutation"], f"{w}.mutation"))
    if kind is Kind.UPLOAD_BEHAVIOUR:
        _require(d, {"meta", "script", "public", "reviewsEnabled", "bugTrackingEnabled"}, where=w)
        script = _str(d, "script", w, allow_empty=True)
        if len(script.encode("utf-8")) > _SCRIPT_LIMIT:
            raise SchemaViolation(f"{w}.script exceeds {_SCRIPT_LIMIT} bytes")
        return UploadBehaviour(
            meta=ser.descriptor_meta_from_dict(d["meta"], f"{w}.meta"),
            script=script,
            public=_bool(d, "public", w),
            reviews_enabled=_bool(d, "reviewsEnabled", w),
            bug_tracking_enabled=_bool(d, "bugTrackingEnabled", w),
        )
    if kind is Kind.FETCH_BEHAVIOUR:
        _require(d, set(), optional={"behaviourId"}, where=w)
        return FetchBehaviour(behaviour_id=_str(d, "behaviourId", w) if "behaviourId" in d else None)
    if kind is Kind.ACK:
        _require(d, {"inReplyTo", "result"}, where=w)
        if not isinstance(d["result"], dict):
            raise SchemaViolation(f"{w}.result must be an object")
        return Ack(in_reply_to=_str(d, "inReplyTo", w), result=d["result"])
    if kind is Kind.ERROR:
        _require(d, {"code", "message"}, optional={"inReplyTo"}, where=w)
        return Error(
            code=_str(d, "code", w),
            message=_str(d, "message", w, allow_empty=True),
            in_reply_to=_str(d, "inReplyTo", w) if "inReplyTo" in d else None,
        )
    raise UnknownKind(kind.value)  # pragma: no cover - kinds are exhaustive


# --- framing --------------------------------------------------------------------

def message_to_dict(msg: WireMessage) -> dict:
    if not msg.msg_id:
        raise SchemaViolation("msgId must be non-empty")
    out: dict[str, Any] = {
        "kind": msg.kind.value,
        "msgId": msg.msg_id,
        "payload": _payload_to_dict(msg.payload),
    }
    if msg.server_seq is not None:
        out["serverSeq"] = msg.server_seq
    return out


def message_from_dict(d: Any) -> WireMessage:
    _require(d, {"kind", "msgId", "payload"}, optional={"serverSeq"}, where="frame")
    raw_kind = d["kind"]
    if not isinstance(raw_kind, str):
        raise SchemaViolation("frame.kind must be a string")
    try:
        kind = Kind(raw_kind)
    except ValueError:
        raise UnknownKind(raw_kind) from None
    msg_id = _str(d, "msgId", "frame")
    server_seq = None
    if "serverSeq" in d:
        server_seq = _int(d, "serverSeq", "frame", minimum=1)
    payload = _payload_from_dict(kind, d["payload"])
    return WireMessage(msg_id=msg_id, payload=payload, server_seq=server_seq)


def encode(msg: WireMessage) -> bytes:
    """Canonical frame bytes: sorted keys, compact separators, UTF-8."""
    doc = message_to_dict(msg)
    message_from_dict(doc)  # enforce the kind schema: only decodable frames leave
    data = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    if len(data) > MAX_FRAME_BYTES:
        raise SchemaViolation(f"frame of {len(data)} bytes exceeds {MAX_FRAME_BYTES}")
    return data


def decode(data) -> WireMessage:
    """Parse and validate one frame; never raises anything but typed errors.

    Accepts bytes or str (transports may deliver either framing).
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    if not isinstance(data, (bytes, bytearray)):
        raise MalformedFrame("frame must be bytes or str")
    if len(data) > MAX_FRAME_BYTES:
        raise MalformedFrame(f"frame of {len(data)} bytes exceeds {MAX_FRAME_BYTES}")
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFrame(str(exc)) from None
    return message_from_dict(doc)

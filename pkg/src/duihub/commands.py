"""Session commands: the typed instructions the hub routes to live sessions.

Every distribution behaviour ultimately reduces to a list of these. A
command targets exactly one session; the argument schema is fixed by the
action. Object-scoped actions always carry the object id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import SchemaViolation
from .model import ObjectId, SessionId


class CommandAction(str, Enum):
    HIDE = "Hide"
    SHOW = "Show"
    SHOW_ONLY = "ShowOnly"
    NAVIGATE = "Navigate"
    REPLAY_EVENT = "ReplayEvent"
    APPLY_MUTATION = "ApplyMutation"
    OPEN_URL_WITH_OBJECTS = "OpenUrlWithObjects"
    APPLY_EFFECT = "ApplyEffect"
    MEDIA_CONTROL = "MediaControl"


class EffectKind(str, Enum):
    HIGHLIGHT = "Highlight"
    HIDE = "Hide"
    FOCUS = "Focus"


class MediaVerb(str, Enum):
    PLAY = "Play"
    STOP = "Stop"


@dataclass(frozen=True)
class DomEventDescriptor:
    """A captured user event, replayable at another session.

    relative_target_path addresses a node inside the wrapped element's
    subtree ("" means the element itself).
    """

    object_id: ObjectId
    event_type: str  # "click", "input", ...
    relative_target_path: str = ""
    payload: Optional[str] = None


@dataclass(frozen=True)
class ContentMutationDescriptor:
    """One content edit inside a wrapped element.

    Exactly one of new_text / attribute is set. origin_seq increases
    strictly per (object, originating session) so receivers and the hub can
    drop duplicates and stale retries.
    """

    object_id: ObjectId
    relative_target_path: str = ""
    new_text: Optional[str] = None
    attribute: Optional[tuple[str, str]] = None
    origin_seq: int = 1


@dataclass(frozen=True)
class SessionCommand:
    target: SessionId
    action: CommandAction
    object_id: Optional[ObjectId] = None
    url: Optional[str] = None
    event: Optional[DomEventDescriptor] = None
    mutation: Optional[ContentMutationDescriptor] = None
    effect: Optional[EffectKind] = None
    verb: Optional[MediaVerb] = None
    object_ids: tuple[ObjectId, ...] = ()
    capture_navigation: bool = False


def hide(target: SessionId, object_id: ObjectId) -> SessionCommand:
    return SessionCommand(target, CommandAction.HIDE, object_id=object_id)


def show(target: SessionId, object_id: ObjectId) -> SessionCommand:
    return SessionCommand(target, CommandAction.SHOW, object_id=object_id)


def show_only(target: SessionId, object_id: ObjectId, capture_navigation: bool = False) -> SessionCommand:
    return SessionCommand(
        target, CommandAction.SHOW_ONLY, object_id=object_id, capture_navigation=capture_navigation
    )


def navigate(target: SessionId, url: str, object_id: Optional[ObjectId] = None) -> SessionCommand:
    return SessionCommand(target, CommandAction.NAVIGATE, url=url, object_id=object_id)


def replay_event(target: SessionId, event: DomEventDescriptor) -> SessionCommand:
    return SessionCommand(target, CommandAction.REPLAY_EVENT, object_id=event.object_id, event=event)


def apply_mutation(target: SessionId, mutation: ContentMutationDescriptor) -> SessionCommand:
    return SessionCommand(
        target, CommandAction.APPLY_MUTATION, object_id=mutation.object_id, mutation=mutation
    )


def open_url_with_objects(target: SessionId, url: str, object_ids: tuple[ObjectId, ...]) -> SessionCommand:
    return SessionCommand(target, CommandAction.OPEN_URL_WITH_OBJECTS, url=url, object_ids=object_ids)


def apply_effect(target: SessionId, object_id: ObjectId, effect: EffectKind) -> SessionCommand:
    return SessionCommand(target, CommandAction.APPLY_EFFECT, object_id=object_id, effect=effect)


def media_control(target: SessionId, object_id: ObjectId, verb: MediaVerb) -> SessionCommand:
    return SessionCommand(target, CommandAction.MEDIA_CONTROL, object_id=object_id, verb=verb)


# per-action argument contract: which optional fields must be present
_REQUIRES: dict[CommandAction, tuple[str, ...]] = {
    CommandAction.HIDE: ("object_id",),
    CommandAction.SHOW: ("object_id",),
    CommandAction.SHOW_ONLY: ("object_id",),
    CommandAction.NAVIGATE: ("url",),
    CommandAction.REPLAY_EVENT: ("object_id", "event"),
    CommandAction.APPLY_MUTATION: ("object_id", "mutation"),
    CommandAction.OPEN_URL_WITH_OBJECTS: ("url", "object_ids"),
    CommandAction.APPLY_EFFECT: ("object_id", "effect"),
    CommandAction.MEDIA_CONTROL: ("object_id", "verb"),
}


def validate_command(cmd: SessionCommand) -> None:
    if not cmd.target:
        raise SchemaViolation("command target must be non-empty")
    for name in _REQUIRES[cmd.action]:
        value = getattr(cmd, name)
        if value is None or value == () or value == "":
            raise SchemaViolation(f"{cmd.action.value} command requires {name}")
    if cmd.mutation is not None:
        _validate_mutation(cmd.mutation)


def _validate_mutation(mutation: ContentMutationDescriptor) -> None:
    has_text = mutation.new_text is not None
    has_attr = mutation.attribute is not None
    if has_text == has_attr:
        raise SchemaViolation("mutation carries exactly one of new_text / attribute")
    if mutation.origin_seq < 1:
        raise SchemaViolation("mutation origin_seq must be >= 1")

"""Domain model: users, devices, sessions, collected UI objects and presence.

Everything in this module is pure state logic. Values are immutable
dataclasses; the ledger is copy-on-write. No I/O, no clocks, no transport.

A collected object wraps a locatable element of some web page. It is
"online" in a session when that session's current URL matches the object's
URL pattern and the wrapped element can be resolved in the live document.
Presence is session-lifetime state: each session is the sole writer of its
own records, ordered by a per-session sequence counter, and the merged
ledger is last-seq-wins per (object, session) key, which makes it converge
regardless of delivery order.
"""

from __future__ import annotations

import fnmatch
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Mapping, Optional
from urllib.parse import urlsplit

from .errors import EmptyName, MalformedLocator, StereotypeMismatch, UnknownBehaviour, UnknownSession

# Opaque identifier aliases. All are non-empty strings, unique within their
# namespace. A session is one live content display: two windows on one
# device are two sessions sharing a DeviceId.
UserId = str
DeviceId = str
SessionId = str
ObjectId = str
RuleId = str
BehaviourId = str


class DeviceKind(str, Enum):
    DESKTOP = "Desktop"
    MOBILE = "Mobile"
    TABLET = "Tablet"
    OTHER = "Other"


class Stereotype(str, Enum):
    """Declared widget kind of a collected object.

    Gates which stereotype-specific behaviours may be attached. PAGE marks
    a whole-document body wrapper.
    """

    GENERIC = "Generic"
    IMAGE = "Image"
    IMAGE_COLLECTION = "ImageCollection"
    TEXT = "Text"
    FORM = "Form"
    VIDEO = "Video"
    CONTAINER = "Container"
    PAGE = "Page"


class PresenceState(str, Enum):
    ONLINE = "Online"
    OFFLINE = "Offline"


@dataclass(frozen=True)
class DeviceInfo:
    device_id: DeviceId
    kind: DeviceKind
    label: str = ""


# element paths: "/" is the document body; "/0/2" walks child indices from
# the body; "#someid" anchors at the unique element with that id, with an
# optional child-index suffix ("#toc/1"). Resolution either finds exactly
# one node or fails, deterministically.
_PATH_RE = re.compile(r"^(#[^/#\s]+)?(/\d+)*$|^/$")


@dataclass(frozen=True)
class Locator:
    """Where an object lives: a URL glob plus a structural element path."""

    url_pattern: str
    element_path: str

    def matches_url(self, url: str) -> bool:
        """Glob-match over scheme+host+path; query and fragment ignored."""
        return fnmatch.fnmatchcase(_normalize_url(url), self.url_pattern)


def _normalize_url(url: str) -> str:
    parts = urlsplit(url)
    path = parts.path or "/"
    return f"{parts.scheme}://{parts.netloc}{path}"


def validate_locator(locator: Locator) -> None:
    """Raise MalformedLocator unless the locator is well formed.

    The pattern must look like an absolute URL (scheme://host...), and a
    pattern without wildcards must match its own literal URL.
    """
    pat = locator.url_pattern
    if not pat:
        raise MalformedLocator("empty url pattern")
    parts = urlsplit(pat)
    if not parts.scheme or not parts.netloc:
        raise MalformedLocator(f"url pattern must be absolute: {pat!r}")
    if "*" not in pat and not locator.matches_url(pat):
        raise MalformedLocator(f"pattern does not match its own URL: {pat!r}")
    path = locator.element_path
    if not path or not (path == "/" or _PATH_RE.match(path)):
        raise MalformedLocator(f"bad element path: {path!r}")


@dataclass(frozen=True)
class UIObject:
    """A collected, stereotyped wrapper around a locatable page element."""

    object_id: ObjectId
    owner: UserId
    name: str
    tags: frozenset[str]
    stereotype: Stereotype
    locator: Locator
    enabled_behaviours: frozenset[BehaviourId] = frozenset()
    created_at: int = 0  # logical timestamp assigned by the hub


@dataclass(frozen=True)
class PresenceRecord:
    object_id: ObjectId
    session_id: SessionId
    state: PresenceState
    seq: int  # strictly increasing per originating session


@dataclass(frozen=True)
class SessionInfo:
    session_id: SessionId
    user_id: UserId
    device: DeviceInfo
    current_url: str = ""


@dataclass(frozen=True)
class PresenceLedger:
    """Per (object, session) presence plus the live-session directory.

    Records only ever reference sessions present in the directory; removing
    a session drops all of its records (the observable equivalent of
    marking them Offline). Applying the same update set in any order yields
    the same ledger: per-key last-seq-wins.
    """

    records: Mapping[tuple[ObjectId, SessionId], PresenceRecord] = field(default_factory=dict)
    directory: Mapping[SessionId, SessionInfo] = field(default_factory=dict)

    def record_for(self, object_id: ObjectId, session_id: SessionId) -> Optional[PresenceRecord]:
        return self.records.get((object_id, session_id))

    def is_online(self, object_id: ObjectId, session_id: SessionId) -> bool:
        rec = self.records.get((object_id, session_id))
        return rec is not None and rec.state is PresenceState.ONLINE

    def online_sessions(self, object_id: ObjectId) -> list[SessionId]:
        """Sessions where the object is online, sorted for determinism."""
        return sorted(
            sid
            for (oid, sid), rec in self.records.items()
            if oid == object_id and rec.state is PresenceState.ONLINE
        )

    def sessions_of(self, user_id: UserId) -> list[SessionInfo]:
        return sorted(
            (info for info in self.directory.values() if info.user_id == user_id),
            key=lambda info: info.session_id,
        )

    def with_session(self, info: SessionInfo) -> "PresenceLedger":
        directory = dict(self.directory)
        directory[info.session_id] = info
        return replace(self, directory=directory)

    def without_session(self, session_id: SessionId) -> "PresenceLedger":
        directory = dict(self.directory)
        directory.pop(session_id, None)
        records = {key: rec for key, rec in self.records.items() if key[1] != session_id}
        return PresenceLedger(records=records, directory=directory)

    def records_of_session(self, session_id: SessionId) -> list[PresenceRecord]:
        return sorted(
            (rec for key, rec in self.records.items() if key[1] == session_id),
            key=lambda rec: rec.object_id,
        )

    def without_object(self, object_id: ObjectId) -> "PresenceLedger":
        records = {key: rec for key, rec in self.records.items() if key[0] != object_id}
        return replace(self, records=records)


def resolve_presence(obj: UIObject, session_url: str, element_found: bool) -> PresenceState:
    """Online iff the object's URL pattern matches and its element was found.

    Pure and total; callers supply the element-resolution outcome.
    """
    if element_found and obj.locator.matches_url(session_url):
        return PresenceState.ONLINE
    return PresenceState.OFFLINE


def apply_presence_update(
    ledger: PresenceLedger, record: PresenceRecord
) -> tuple[PresenceLedger, bool]:
    """Merge one record, last-seq-wins. Returns (ledger', state changed).

    Stale or duplicate records (seq <= current seq for the key) leave the
    ledger untouched, which makes duplicate delivery a no-op and the final
    ledger independent of application order.
    """
    if record.session_id not in ledger.directory:
        raise UnknownSession(record.session_id)
    key = (record.object_id, record.session_id)
    current = ledger.records.get(key)
    if current is not None and record.seq <= current.seq:
        return ledger, False
    records = dict(ledger.records)
    records[key] = record
    changed = current is None or current.state is not record.state
    return replace(ledger, records=records), changed


class IdSource:
    """Deterministic identifier factory: prefix + counter."""

    def __init__(self, prefix: str, start: int = 1):
        self.prefix = prefix
        self.next_value = start

    def take(self) -> str:
        value = f"{self.prefix}{self.next_value}"
        self.next_value += 1
        return value


def collect_object(
    owner: UserId,
    locator: Locator,
    stereotype: Stereotype,
    name: str,
    tags: Iterable[str] = (),
    *,
    ids: IdSource,
    created_at: int = 0,
) -> UIObject:
    """Wrap a selected element as a fresh object with no behaviours attached."""
    if not name:
        raise EmptyName("object name must be non-empty")
    validate_locator(locator)
    return UIObject(
        object_id=ids.take(),
        owner=owner,
        name=name,
        tags=frozenset(tags),
        stereotype=stereotype,
        locator=locator,
        enabled_behaviours=frozenset(),
        created_at=created_at,
    )


def attach_behaviour(obj: UIObject, behaviour_id: BehaviourId, registry) -> UIObject:
    """Enable a registered behaviour on the object.

    Stereotype-specific behaviours only attach to matching stereotypes.
    """
    descriptor = registry.lookup(behaviour_id)
    if descriptor is None:
        raise UnknownBehaviour(behaviour_id)
    if not descriptor.applies_to(obj.stereotype):
        raise StereotypeMismatch(
            f"{behaviour_id} is not applicable to {obj.stereotype.value}"
        )
    return replace(obj, enabled_behaviours=obj.enabled_behaviours | {behaviour_id})

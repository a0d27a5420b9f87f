"""On-disk state for the hub: the collection snapshot and the credential file.

Both files are canonical JSON (sorted keys). The snapshot keeps everything
that must survive a restart: per-user objects and rules (rules in creation
order), the shared behaviour repository, and the id/sequence counters so a
restarted hub continues the same total order. Presence and standing routes
are deliberately absent: they are session-lifetime state.

Unreadable or schema-invalid files raise CorruptStore; a hub refuses to
start rather than run on a partial state.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Optional

from . import serialize as ser
from .behaviours import BehaviourDescriptor
from .errors import CorruptStore, SchemaViolation
from .model import UIObject, UserId
from .rules import Rule

STORE_FORMAT = "duihub-store-1"
AUTH_FORMAT = "duihub-auth-1"


def _write_atomic(path: str, doc: dict) -> None:
    data = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        return None
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptStore(f"{path}: {exc}") from None


@dataclass
class RepoRecord:
    """One shared behaviour: descriptor meta plus the opaque script blob."""

    meta: BehaviourDescriptor
    script: str
    owner: UserId
    public: bool = False
    reviews_enabled: bool = False
    bug_tracking_enabled: bool = False

    def to_dict(self) -> dict:
        return {
            "meta": ser.descriptor_meta_to_dict(self.meta),
            "script": self.script,
            "owner": self.owner,
            "public": self.public,
            "reviewsEnabled": self.reviews_enabled,
            "bugTrackingEnabled": self.bug_tracking_enabled,
        }

    @staticmethod
    def from_dict(d: Any) -> "RepoRecord":
        ser._require(
            d,
            {"meta", "script", "owner", "public", "reviewsEnabled", "bugTrackingEnabled"},
            where="behaviour",
        )
        return RepoRecord(
            meta=ser.descriptor_meta_from_dict(d["meta"], "behaviour.meta"),
            script=ser._str(d, "script", "behaviour", allow_empty=True),
            owner=ser._str(d, "owner", "behaviour"),
            public=ser._bool(d, "public", "behaviour"),
            reviews_enabled=ser._bool(d, "reviewsEnabled", "behaviour"),
            bug_tracking_enabled=ser._bool(d, "bugTrackingEnabled", "behaviour"),
        )


@dataclass
class UserSpace:
    """One user's synchronized collection: objects plus rules in creation order."""

    objects: dict[str, UIObject] = field(default_factory=dict)
    rules: dict[str, Rule] = field(default_factory=dict)


@dataclass
class Snapshot:
    users: dict[UserId, UserSpace] = field(default_factory=dict)
    behaviours: dict[str, RepoRecord] = field(default_factory=dict)  # upload order
    server_seq: int = 1
    counters: dict[str, int] = field(default_factory=lambda: {"session": 1, "object": 1, "rule": 1, "msg": 1, "conn": 1})

    def to_dict(self) -> dict:
        return {
            "format": STORE_FORMAT,
            "serverSeq": self.server_seq,
            "counters": dict(self.counters),
            "users": {
                uid: {
                    "objects": [ser.object_to_dict(o) for o in sorted(space.objects.values(), key=lambda o: o.object_id)],
                    "rules": [ser.rule_to_dict(r) for r in space.rules.values()],
                }
                for uid, space in sorted(self.users.items())
            },
            "behaviours": [rec.to_dict() for rec in self.behaviours.values()],
        }


def save_snapshot(path: str, snapshot: Snapshot) -> None:
    _write_atomic(path, snapshot.to_dict())


def load_snapshot(path: str) -> Optional[Snapshot]:
    """Read a snapshot; None if the file does not exist, CorruptStore if bad."""
    doc = _read_json(path)
    if doc is None:
        return None
    try:
        ser._require(doc, {"format", "serverSeq", "counters", "users", "behaviours"}, where="store")
        if doc["format"] != STORE_FORMAT:
            raise CorruptStore(f"unsupported store format {doc['format']!r}")
        counters = doc["counters"]
        if not isinstance(counters, dict) or any(
            not isinstance(v, int) or v < 1 for v in counters.values()
        ):
            raise SchemaViolation("store.counters must map to positive integers")
        users: dict[UserId, UserSpace] = {}
        if not isinstance(doc["users"], dict):
            raise SchemaViolation("store.users must be an object")
        for uid, raw in doc["users"].items():
            ser._require(raw, {"objects", "rules"}, where=f"store.users.{uid}")
            space = UserSpace()
            for od in raw["objects"]:
                obj = ser.object_from_dict(od)
                space.objects[obj.object_id] = obj
            for rd in raw["rules"]:
                rule = ser.rule_from_dict(rd)
                space.rules[rule.rule_id] = rule
            users[uid] = space
        behaviours: dict[str, RepoRecord] = {}
        if not isinstance(doc["behaviours"], list):
            raise SchemaViolation("store.behaviours must be a list")
        for raw in doc["behaviours"]:
            rec = RepoRecord.from_dict(raw)
            behaviours[rec.meta.behaviour_id] = rec
        return Snapshot(
            users=users,
            behaviours=behaviours,
            server_seq=ser._int(doc, "serverSeq", "store", minimum=1),
            counters={str(k): int(v) for k, v in counters.items()},
        )
    except SchemaViolation as exc:
        raise CorruptStore(f"{path}: {exc}") from None


class AuthStore:
    """Username -> salted password hash, file-backed when given a path."""

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.users: dict[str, dict[str, str]] = {}
        if path is not None:
            doc = _read_json(path)
            if doc is not None:
                try:
                    ser._require(doc, {"format", "users"}, where="auth")
                    if doc["format"] != AUTH_FORMAT:
                        raise CorruptStore(f"unsupported auth format {doc['format']!r}")
                    if not isinstance(doc["users"], dict):
                        raise SchemaViolation("auth.users must be an object")
                    for name, entry in doc["users"].items():
                        ser._require(entry, {"salt", "hash"}, where=f"auth.users.{name}")
                        self.users[name] = {"salt": entry["salt"], "hash": entry["hash"]}
                except SchemaViolation as exc:
                    raise CorruptStore(f"{path}: {exc}") from None

    @staticmethod
    def _digest(salt: str, password: str) -> str:
        return hashlib.sha256(f"{salt}:{password}".encode("utf-8")).hexdigest()

    def register(self, user: str, password: str) -> None:
        # salt derived from the username keeps the file reproducible; the
        # scheme is deliberately minimal and swappable
        salt = hashlib.sha256(f"duihub-salt:{user}".encode("utf-8")).hexdigest()[:16]
        self.users[user] = {"salt": salt, "hash": self._digest(salt, password)}
        self._save()

    def verify(self, user: str, password: str) -> bool:
        entry = self.users.get(user)
        if entry is None:
            return False
        return self._digest(entry["salt"], password) == entry["hash"]

    def _save(self) -> None:
        if self.path is not None:
            _write_atomic(self.path, {"format": AUTH_FORMAT, "users": self.users})

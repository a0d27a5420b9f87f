"""Deterministic headless rig: virtual sessions, seeded interleaving, traces.

The simulator drives the exact same Hub as the served deployment; only the
transport differs. Every session has two FIFO queues (to and from the hub)
and a scheduler picks the next deliverable frame with a seeded RNG, so one
(script, seed) pair always produces the same run while different seeds
explore different message interleavings. Causally ordered traffic (frames
on one queue) is never reordered.

Fault injection: ``duplicate`` delivers every frame twice (receivers must
deduplicate); ``break_dedupe`` disables the sessions' msgId dedupe so the
duplicate-detection machinery itself can be tested.
"""

from __future__ import annotations

import copy
import json
import random
import tempfile
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import serialize as ser
from . import wire
from .behaviours import BoundValue
from .commands import CommandAction, ContentMutationDescriptor, DomEventDescriptor, SessionCommand
from .errors import DuiHubError, ScenarioError, SchemaViolation
from .hub import Hub, TraceEntry
from .model import (
    DeviceInfo,
    Locator,
    PresenceLedger,
    PresenceRecord,
    PresenceState,
    SessionInfo,
    Stereotype,
    UIObject,
    apply_presence_update,
    resolve_presence,
    _normalize_url,
)
from .rules import Rule
from .store import AuthStore

TRACE_FORMAT = "duihub-trace-1"


# --- virtual pages -----------------------------------------------------------

@dataclass
class PageNode:
    tag: str
    id: Optional[str] = None
    text: Optional[str] = None
    children: list["PageNode"] = field(default_factory=list)
    attrs: dict[str, str] = field(default_factory=dict)


@dataclass
class VirtualPage:
    url: str
    root: PageNode  # the document body


def node_from_dict(d: Any) -> PageNode:
    if not isinstance(d, dict) or "tag" not in d:
        raise SchemaViolation("page node must be an object with a tag")
    return PageNode(
        tag=str(d["tag"]),
        id=d.get("id"),
        text=d.get("text"),
        children=[node_from_dict(c) for c in d.get("children", [])],
        attrs={str(k): str(v) for k, v in d.get("attrs", {}).items()},
    )


def node_to_dict(node: PageNode) -> dict:
    out: dict[str, Any] = {"tag": node.tag}
    if node.id is not None:
        out["id"] = node.id
    if node.text is not None:
        out["text"] = node.text
    if node.children:
        out["children"] = [node_to_dict(c) for c in node.children]
    if node.attrs:
        out["attrs"] = dict(node.attrs)
    return out


def blank_page(url: str) -> VirtualPage:
    return VirtualPage(url=url, root=PageNode(tag="body"))


def _find_by_id(node: PageNode, node_id: str, hits: list[PageNode]) -> None:
    if node.id == node_id:
        hits.append(node)
    for child in node.children:
        _find_by_id(child, node_id, hits)


def resolve_element(page: VirtualPage, path: str) -> Optional[PageNode]:
    """Resolve an element path; exactly one node or None, never ambiguous."""
    node = page.root
    rest = path
    if path.startswith("#"):
        anchor, slash, tail = path[1:].partition("/")
        hits: list[PageNode] = []
        _find_by_id(page.root, anchor, hits)
        if len(hits) != 1:
            return None
        node = hits[0]
        rest = ("/" + tail) if slash else ""
    if rest in ("", "/"):
        return node
    for part in rest.strip("/").split("/"):
        try:
            node = node.children[int(part)]
        except (IndexError, ValueError):
            return None
    return node


def resolve_relative(node: PageNode, path: str) -> Optional[PageNode]:
    if path in ("", "/"):
        return node
    for part in path.strip("/").split("/"):
        try:
            node = node.children[int(part)]
        except (IndexError, ValueError):
            return None
    return node


# --- virtual session ----------------------------------------------------------

@dataclass
class AppliedCommand:
    seq: Optional[int]
    command: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "command": self.command}


class VirtualSession:
    """A scripted client: page model, local collection view, command executor.

    Mirrors what a live in-browser client does: re-resolve every owned
    locator after load/navigation/mutation and report presence diffs, apply
    hub commands in arrival order, deduplicate by msgId.
    """

    def __init__(self, alias: str, user: str, password: str, device: DeviceInfo, world: "SimWorld"):
        self.alias = alias
        self.user = user
        self.password = password
        self.device = device
        self.world = world
        self.conn_id: Optional[str] = None
        self.session_id: Optional[str] = None
        self.token: Optional[str] = None
        self.closed = False
        # local document
        self.current_url = ""
        self.page: Optional[VirtualPage] = None
        self.open_restriction: Optional[set[str]] = None
        # collection + ledger view
        self.objects: dict[str, UIObject] = {}
        self.rules: dict[str, Rule] = {}
        self.view = PresenceLedger()
        self.behaviours: list = []
        # own presence reporting
        self.my_presence: dict[str, PresenceState] = {}
        self.presence_seq = 0
        self.origin_seqs: dict[str, int] = {}
        # command effects
        self.hidden: set[str] = set()
        self.solo: Optional[str] = None
        self.capture_nav: set[str] = set()
        self.replays: list[DomEventDescriptor] = []
        self.navigations: list[str] = []
        self.effects: list[tuple[str, str]] = []
        self.media: list[tuple[str, str]] = []
        self.mutations_applied: list[ContentMutationDescriptor] = []
        self.applied: list[AppliedCommand] = []
        self.errors: list[wire.Error] = []
        self.acks: dict[str, dict] = {}
        self._seen: set[str] = set()
        self._msg_n = 0

    # --- outbound ---------------------------------------------------------

    def _send(self, payload: wire.Payload) -> str:
        self._msg_n += 1
        msg = wire.WireMessage(msg_id=f"{self.alias}-m{self._msg_n}", payload=payload)
        self.world.enqueue_to_hub(self.alias, wire.encode(msg))
        return msg.msg_id

    def hello(self) -> str:
        return self._send(
            wire.Hello(user_id=self.user, credentials=self.password, device=self.device)
        )

    def announce_url(self) -> None:
        if self.session_id is None:
            return
        info = SessionInfo(
            session_id=self.session_id,
            user_id=self.user,
            device=self.device,
            current_url=self.current_url,
        )
        self.view = self.view.with_session(info)
        self._send(wire.PresenceUpdate(scope="session", event="url", session=info))

    def report_presence(self) -> None:
        """Re-resolve every owned locator against the current document and
        send one record per state change."""
        if self.session_id is None:
            return
        for obj in sorted(self.objects.values(), key=lambda o: o.object_id):
            found = False
            if self.page is not None:
                node = resolve_element(self.page, obj.locator.element_path)
                found = node is not None and (
                    self.open_restriction is None or obj.object_id in self.open_restriction
                )
            state = resolve_presence(obj, self.current_url, found)
            previous = self.my_presence.get(obj.object_id, PresenceState.OFFLINE)
            if state is previous:
                continue
            self.my_presence[obj.object_id] = state
            self.presence_seq += 1
            record = PresenceRecord(
                object_id=obj.object_id,
                session_id=self.session_id,
                state=state,
                seq=self.presence_seq,
            )
            self.view, _ = apply_presence_update(self.view, record)
            self._send(wire.PresenceUpdate(scope="object", record=record))

    # --- local actions ------------------------------------------------------

    def load_local(self, page: VirtualPage) -> None:
        self.page = copy.deepcopy(page)
        self.current_url = page.url
        self.open_restriction = None
        self.hidden.clear()
        self.solo = None
        self.announce_url()
        self.report_presence()

    def navigate_local(self, url: str) -> None:
        self.load_local(self.world.page_for_url(url))

    def user_navigate(self, url: str) -> None:
        """Navigation intent: captured when a control object is active."""
        if self.capture_nav:
            object_id = sorted(self.capture_nav)[0]
            self._send(wire.NavigationCommand(object_id=object_id, url=url))
        else:
            self.navigate_local(url)

    def user_event(self, object_id: str, event_type: str, payload: Optional[str] = None) -> None:
        if self.my_presence.get(object_id) is not PresenceState.ONLINE:
            raise ScenarioError(self.world.step_index, f"{self.alias}: object {object_id} not present here")
        self._send(
            wire.DomEvent(
                event=DomEventDescriptor(
                    object_id=object_id, event_type=event_type, relative_target_path="", payload=payload
                )
            )
        )

    def edit_text(self, object_id: str, text: str) -> None:
        obj = self.objects.get(object_id)
        node = resolve_element(self.page, obj.locator.element_path) if (obj and self.page) else None
        if node is None:
            raise ScenarioError(self.world.step_index, f"{self.alias}: cannot edit absent element")
        node.text = text
        seq = self.origin_seqs.get(object_id, 0) + 1
        self.origin_seqs[object_id] = seq
        self._send(
            wire.ContentMutation(
                mutation=ContentMutationDescriptor(
                    object_id=object_id, relative_target_path="", new_text=text, origin_seq=seq
                )
            )
        )
        self.report_presence()

    def element_text(self, object_id: str) -> Optional[str]:
        obj = self.objects.get(object_id)
        if obj is None or self.page is None:
            return None
        node = resolve_element(self.page, obj.locator.element_path)
        return node.text if node is not None else None

    def is_visible(self, object_id: str) -> bool:
        if object_id in self.hidden:
            return False
        if self.solo is not None and object_id != self.solo:
            return False
        return True

    # --- inbound ------------------------------------------------------------

    def deliver(self, data: bytes) -> None:
        msg = wire.decode(data)
        if not self.world.fault_break_dedupe:
            if msg.msg_id in self._seen:
                return
            self._seen.add(msg.msg_id)
        payload = msg.payload
        if isinstance(payload, wire.Welcome):
            self.session_id = payload.session_id
            self.token = payload.token
            self.objects = {o.object_id: o for o in payload.objects}
            self.rules = {r.rule_id: r for r in payload.rules}
            view = PresenceLedger()
            for info in payload.sessions:
                view = view.with_session(info)
            for record in payload.ledger:
                view, _ = apply_presence_update(view, record)
            self.view = view
            self.behaviours = list(payload.behaviours)
            if self.current_url:
                self.announce_url()
            self.report_presence()
        elif isinstance(payload, wire.UpdateObject):
            if payload.object is not None:
                self.objects[payload.object.object_id] = payload.object
                self.report_presence()
            else:
                self.rules[payload.rule.rule_id] = payload.rule
        elif isinstance(payload, wire.DeleteObject):
            if payload.object_id is not None:
                self.objects.pop(payload.object_id, None)
                self.my_presence.pop(payload.object_id, None)
                self.view = self.view.without_object(payload.object_id)
            else:
                self.rules.pop(payload.rule_id, None)
        elif isinstance(payload, wire.PresenceUpdate):
            self._apply_presence(payload)
        elif isinstance(payload, wire.SessionCommandMsg):
            self.applied.append(
                AppliedCommand(seq=msg.server_seq, command=ser.command_to_dict(payload.command))
            )
            self._apply_command(payload.command)
        elif isinstance(payload, wire.Ack):
            self.acks[payload.in_reply_to] = dict(payload.result)
            result = payload.result
            if "object" in result:
                obj = ser.object_from_dict(result["object"])
                self.objects[obj.object_id] = obj
                self.report_presence()
            if "rule" in result:
                rule = ser.rule_from_dict(result["rule"])
                self.rules[rule.rule_id] = rule
        elif isinstance(payload, wire.Error):
            self.errors.append(payload)

    def _apply_presence(self, upd: wire.PresenceUpdate) -> None:
        if upd.scope == "object":
            try:
                self.view, _ = apply_presence_update(self.view, upd.record)
            except DuiHubError:
                pass  # record for a session we no longer know
            return
        info = upd.session
        if upd.event == "left":
            self.view = self.view.without_session(info.session_id)
        else:
            self.view = self.view.with_session(info)

    def _apply_command(self, command: SessionCommand) -> None:
        action = command.action
        if action is CommandAction.HIDE:
            self.hidden.add(command.object_id)
        elif action is CommandAction.SHOW:
            self.hidden.discard(command.object_id)
            if self.solo == command.object_id:
                self.solo = None
        elif action is CommandAction.SHOW_ONLY:
            self.solo = command.object_id
            if command.capture_navigation:
                self.capture_nav.add(command.object_id)
        elif action is CommandAction.NAVIGATE:
            self.navigations.append(command.url)
            self.navigate_local(command.url)
        elif action is CommandAction.REPLAY_EVENT:
            self.replays.append(command.event)
        elif action is CommandAction.APPLY_MUTATION:
            self._apply_remote_mutation(command.mutation)
        elif action is CommandAction.OPEN_URL_WITH_OBJECTS:
            self.page = copy.deepcopy(self.world.page_for_url(command.url))
            self.current_url = command.url
            self.open_restriction = set(command.object_ids)
            self.hidden.clear()
            self.solo = None
            self.announce_url()
            self.report_presence()
        elif action is CommandAction.APPLY_EFFECT:
            self.effects.append((command.object_id, command.effect.value))
        elif action is CommandAction.MEDIA_CONTROL:
            self.media.append((command.object_id, command.verb.value))

    def _apply_remote_mutation(self, mutation: ContentMutationDescriptor) -> None:
        self.mutations_applied.append(mutation)
        obj = self.objects.get(mutation.object_id)
        if obj is None or self.page is None:
            return
        element = resolve_element(self.page, obj.locator.element_path)
        if element is None:
            return
        node = resolve_relative(element, mutation.relative_target_path)
        if node is None:
            return
        if mutation.new_text is not None:
            node.text = mutation.new_text
        else:
            name, value = mutation.attribute
            node.attrs[name] = value
        self.report_presence()

    # --- state digests --------------------------------------------------------

    def view_fingerprint(self) -> dict:
        """Everything observable about this session, canonically ordered."""
        return {
            "sessionId": self.session_id,
            "url": self.current_url,
            "objects": [ser.object_to_dict(o) for o in sorted(self.objects.values(), key=lambda o: o.object_id)],
            "rules": [ser.rule_to_dict(r) for r in self.rules.values()],
            "records": [
                ser.record_to_dict(rec) for _, rec in sorted(self.view.records.items())
            ],
            "directory": [
                ser.session_info_to_dict(info)
                for info in sorted(self.view.directory.values(), key=lambda i: i.session_id)
            ],
            "replays": [ser.dom_event_to_dict(e) for e in self.replays],
            "navigations": list(self.navigations),
            "effects": [list(e) for e in self.effects],
            "media": [list(m) for m in self.media],
            "mutations": [ser.mutation_to_dict(m) for m in self.mutations_applied],
            "hidden": sorted(self.hidden),
            "solo": self.solo,
            "pageText": self._page_text(),
        }

    def _page_text(self) -> list:
        out = []

        def walk(node: PageNode, path: str) -> None:
            if node.text is not None:
                out.append([path or "/", node.text])
            for i, child in enumerate(node.children):
                walk(child, f"{path}/{i}")

        if self.page is not None:
            walk(self.page.root, "")
        return out

    def converged_view(self) -> dict:
        """The portion that must match across a user's sessions and the hub."""
        return {
            "objects": [ser.object_to_dict(o) for o in sorted(self.objects.values(), key=lambda o: o.object_id)],
            "rules": [ser.rule_to_dict(r) for r in self.rules.values()],
            "records": [ser.record_to_dict(rec) for _, rec in sorted(self.view.records.items())],
            "directory": [
                ser.session_info_to_dict(info)
                for info in sorted(self.view.directory.values(), key=lambda i: i.session_id)
            ],
        }


# --- the world ------------------------------------------------------------------

class SimWorld:
    def __init__(
        self,
        seed: int = 1,
        store_path: Optional[str] = None,
        fault_duplicate: bool = False,
        fault_break_dedupe: bool = False,
    ):
        self.rng = random.Random(seed)
        self.seed = seed
        self.fault_duplicate = fault_duplicate
        self.fault_break_dedupe = fault_break_dedupe
        self._tmp: Optional[tempfile.TemporaryDirectory] = None
        if store_path is None:
            self._tmp = tempfile.TemporaryDirectory(prefix="duihub-sim-")
            store_path = f"{self._tmp.name}/hub-store.json"
        self.store_path = store_path
        self.auth = AuthStore()
        self.hub: Optional[Hub] = Hub(store_path=store_path, auth=self.auth, trace=True)
        self.pages: dict[str, VirtualPage] = {}
        self.sessions: dict[str, VirtualSession] = {}
        self.c2h: dict[str, deque[bytes]] = {}
        self.h2c: dict[str, deque[bytes]] = {}
        self._conn_alias: dict[str, str] = {}
        self.trace_entries: list[TraceEntry] = []
        self.step_index = -1

    # --- pages ---------------------------------------------------------------

    def define_page(self, name: str, page: VirtualPage) -> None:
        self.pages[name] = page

    def page_for_url(self, url: str) -> VirtualPage:
        normalized = _normalize_url(url)
        for page in self.pages.values():
            if _normalize_url(page.url) == normalized:
                return page
        return blank_page(url)

    # --- transport -------------------------------------------------------------

    def enqueue_to_hub(self, alias: str, data: bytes) -> None:
        self.c2h[alias].append(data)

    def start_session(self, alias: str, user: str, password: str, device: DeviceInfo) -> VirtualSession:
        existing = self.sessions.get(alias)
        if existing is not None and not existing.closed:
            raise ScenarioError(self.step_index, f"session {alias!r} already live")
        session = VirtualSession(alias, user, password, device, self)
        self.sessions[alias] = session
        self.c2h[alias] = deque()
        self.h2c.setdefault(alias, deque())
        conn_id = self.hub.connect(lambda data, a=alias: self.h2c[a].append(data))
        session.conn_id = conn_id
        self._conn_alias[conn_id] = alias
        session.hello()
        self.drain_until(lambda: session.session_id is not None, f"welcome for {alias}")
        return session

    def close_session(self, alias: str) -> None:
        session = self._live(alias)
        self.c2h[alias].clear()
        self.h2c[alias].clear()
        self.hub.close(session.conn_id)
        session.closed = True

    def crash_hub(self) -> None:
        """Abrupt stop: volatile state and in-flight frames are lost."""
        self._absorb_trace()
        self.trace_entries.append(TraceEntry(direction="ctl", endpoint="hub", event="crash"))
        self.hub = None
        for alias, session in self.sessions.items():
            if not session.closed:
                session.closed = True
            self.c2h[alias].clear()
            self.h2c[alias].clear()

    def restart_hub(self) -> None:
        if self.hub is not None:
            raise ScenarioError(self.step_index, "hub is already running")
        self.trace_entries.append(TraceEntry(direction="ctl", endpoint="hub", event="restart"))
        self.hub = Hub(store_path=self.store_path, auth=self.auth, trace=True)

    def _absorb_trace(self) -> None:
        if self.hub is not None:
            self.trace_entries.extend(self.hub.trace)
            self.hub.trace.clear()

    # --- scheduler ----------------------------------------------------------------

    def _ready_channels(self) -> list[tuple[str, str]]:
        ready = []
        for alias in sorted(self.c2h):
            if self.c2h[alias]:
                ready.append(("c2h", alias))
        for alias in sorted(self.h2c):
            if self.h2c[alias]:
                ready.append(("h2c", alias))
        return ready

    def step_once(self) -> bool:
        ready = self._ready_channels()
        if not ready:
            return False
        direction, alias = self.rng.choice(ready)
        session = self.sessions[alias]
        if direction == "c2h":
            data = self.c2h[alias].popleft()
            if self.hub is not None and session.conn_id in self.hub.conns:
                self.hub.receive(session.conn_id, data)
                if self.fault_duplicate:
                    self.hub.receive(session.conn_id, data)
        else:
            data = self.h2c[alias].popleft()
            if not session.closed:
                session.deliver(data)
                if self.fault_duplicate:
                    session.deliver(data)
        return True

    def settle(self, limit: int = 100_000) -> None:
        for _ in range(limit):
            if not self.step_once():
                return
        raise ScenarioError(self.step_index, "message storm did not quiesce")

    def mingle(self) -> None:
        """Deliver a seed-dependent amount of pending traffic."""
        while self._ready_channels() and self.rng.random() < 0.6:
            self.step_once()

    def drain_until(self, predicate: Callable[[], bool], what: str, limit: int = 100_000) -> None:
        for _ in range(limit):
            if predicate():
                return
            if not self.step_once():
                break
        if not predicate():
            raise ScenarioError(self.step_index, f"stuck waiting for {what}")

    # --- checks --------------------------------------------------------------------

    def live_sessions(self) -> list[VirtualSession]:
        return [s for s in self.sessions.values() if not s.closed and s.session_id is not None]

    def convergence_violations(self) -> list[str]:
        """After quiescence every live session of a user must hold the hub's
        view of that user's collection, records and directory."""
        out: list[str] = []
        if self.hub is None:
            return out
        by_user: dict[str, list[VirtualSession]] = {}
        for session in self.live_sessions():
            by_user.setdefault(session.user, []).append(session)
        for user, sessions in sorted(by_user.items()):
            space = self.hub.users.get(user)
            objects = space.objects if space else {}
            hub_view = {
                "objects": [ser.object_to_dict(o) for o in sorted(objects.values(), key=lambda o: o.object_id)],
                "rules": [ser.rule_to_dict(r) for r in (space.rules if space else {}).values()],
                "records": [
                    ser.record_to_dict(rec)
                    for key, rec in sorted(self.hub.ledger.records.items())
                    if key[0] in objects
                ],
                "directory": [
                    ser.session_info_to_dict(info) for info in self.hub.ledger.sessions_of(user)
                ],
            }
            for session in sessions:
                mine = session.converged_view()
                for part in ("objects", "rules", "records", "directory"):
                    if mine[part] != hub_view[part]:
                        out.append(
                            f"user {user}: session {session.alias} {part} diverged from hub: "
                            f"{mine[part]!r} != {hub_view[part]!r}"
                        )
        return out

    def world_fingerprint(self) -> dict:
        """Full end state: hub persistent view plus every session's view."""
        doc: dict[str, Any] = {
            "hub": self.hub.state_fingerprint() if self.hub else None,
            "sessions": {
                alias: session.view_fingerprint() for alias, session in sorted(self.sessions.items())
            },
        }
        if self.hub is not None:
            doc["ledger"] = [ser.record_to_dict(r) for _, r in sorted(self.hub.ledger.records.items())]
            doc["fired"] = [
                {"ruleId": e.rule_id, "witness": [list(w) for w in e.witness]}
                for e in self.hub.rule_fire_log
            ]
        return doc

    # --- trace -----------------------------------------------------------------------

    def trace_document(self) -> dict:
        self._absorb_trace()
        return {
            "format": TRACE_FORMAT,
            "seed": self.seed,
            "entries": [e.to_dict() for e in self.trace_entries],
            "sessions": {
                alias: {
                    "sessionId": session.session_id,
                    "applied": [a.to_dict() for a in session.applied],
                }
                for alias, session in sorted(self.sessions.items())
            },
            "hubState": self.hub.state_fingerprint() if self.hub else None,
        }

    def _live(self, alias: str) -> VirtualSession:
        session = self.sessions.get(alias)
        if session is None or session.closed:
            raise ScenarioError(self.step_index, f"no live session {alias!r}")
        return session

    def cleanup(self) -> None:
        if self._tmp is not None:
            self._tmp.cleanup()
            self._tmp = None


# --- trace replay ------------------------------------------------------------------

def replay_trace(doc: dict) -> tuple[bool, str]:
    """Re-drive a captured trace's inputs through a fresh hub and verify the
    outputs and end state reproduce exactly."""
    if doc.get("format") != TRACE_FORMAT:
        return False, f"not a {TRACE_FORMAT} document"
    entries = [TraceEntry.from_dict(e) for e in doc["entries"]]
    expected_out = [(e.endpoint, e.frame) for e in entries if e.direction == "out"]
    with tempfile.TemporaryDirectory(prefix="duihub-replay-") as tmp:
        store = f"{tmp}/store.json"
        auth = AuthStore()
        hub: Optional[Hub] = Hub(store_path=store, auth=auth, trace=True)
        emitted: list[TraceEntry] = []
        conns: dict[str, str] = {}  # trace endpoint label -> live conn id

        def absorb() -> None:
            if hub is not None:
                emitted.extend(hub.trace)
                hub.trace.clear()

        for i, entry in enumerate(entries):
            if entry.direction == "out":
                continue
            if entry.direction == "ctl":
                event = entry.event
                if event == "register-user":
                    hub.register_user(entry.frame["user"], entry.frame["password"])
                elif event == "connect":
                    conns[entry.endpoint] = hub.connect(lambda data: None)
                elif event == "close":
                    hub.close(conns[entry.endpoint])
                elif event == "crash":
                    absorb()
                    hub = None
                elif event == "restart":
                    hub = Hub(store_path=store, auth=auth, trace=True)
                continue
            # inbound frame: strip the recorded seq, the hub re-assigns it
            frame = dict(entry.frame)
            frame.pop("serverSeq", None)
            data = json.dumps(frame, sort_keys=True, separators=(",", ":")).encode("utf-8")
            conn_id = conns.get(entry.endpoint)
            if conn_id is None:
                return False, f"entry {i}: inbound frame for unknown endpoint {entry.endpoint!r}"
            hub.receive(conn_id, data)
        absorb()
        actual_out = [(e.endpoint, e.frame) for e in emitted if e.direction == "out"]
        i = first_out_divergence(expected_out, actual_out)
        if i is not None:
            want = expected_out[i] if i < len(expected_out) else "(end)"
            got = actual_out[i] if i < len(actual_out) else "(end)"
            return False, f"output {i} diverged:\n  recorded: {want}\n  replayed: {got}"
        want_state = doc.get("hubState")
        got_state = hub.state_fingerprint() if hub is not None else None
        if want_state != got_state:
            return False, "final hub state does not match the recorded state"
    return True, f"reproduced {len(actual_out)} outputs and the final state"


def first_out_divergence(a: list, b: list) -> Optional[int]:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i
    if len(a) != len(b):
        return min(len(a), len(b))
    return None

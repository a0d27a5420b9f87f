"""The hub: session registry, collection sync, presence aggregation, rule
hosting, command routing and the behaviour repository.

One hub instance is one logical serialization point. Transports (the
WebSocket server, the simulator's in-process queues) deliver raw frames to
``receive`` one at a time; every accepted frame gets the next server
sequence number, and every frame the hub emits is sequenced the same way,
so replaying the inbound log on a fresh hub reproduces the outbound log
bit for bit.

Delivery to sessions is at-least-once; receivers (including the hub
itself) deduplicate by msgId, so retries never change state.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional

from . import serialize as ser
from . import wire
from .behaviours import (
    OPEN_IN,
    BehaviourDescriptor,
    BehaviourRegistry,
    BoundValue,
    InvocationPlan,
    MirrorRoute,
    NavigationRoute,
    PlanContext,
    RedirectRoute,
    Route,
    builtin_registry,
    validate_bindings,
)
from .commands import SessionCommand, apply_mutation, navigate, replay_event
from .errors import (
    AlreadySequenced,
    AuthFailed,
    BindingError,
    CorruptStore,
    DuiHubError,
    DuplicateId,
    EmptyName,
    InvalidDescriptor,
    InvalidParamSpec,
    NotOwner,
    PlannerError,
    SchemaViolation,
    SpoofedSession,
    TargetGone,
    UnknownBehaviour,
    UnknownObject,
    UnknownSession,
)
from .model import (
    IdSource,
    PresenceLedger,
    SessionId,
    SessionInfo,
    UserId,
    apply_presence_update,
    attach_behaviour,
    collect_object,
    validate_locator,
)
from .rules import CompiledRule, RuleEngine, RuleFiring, compile_rule, resolve_action_bindings
from .store import AuthStore, RepoRecord, Snapshot, UserSpace, load_snapshot, save_snapshot

SendFn = Callable[[bytes], None]


@dataclass
class TraceEntry:
    """One item of the hub's totally ordered history.

    direction "in"/"out" entries carry a frame and its serverSeq; "ctl"
    entries mark transport events (connect/close) that have no frame.
    """

    direction: str  # "in" | "out" | "ctl"
    endpoint: str  # connection label
    seq: Optional[int] = None
    frame: Optional[dict] = None
    event: Optional[str] = None  # for ctl entries

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"direction": self.direction, "endpoint": self.endpoint}
        if self.seq is not None:
            out["seq"] = self.seq
        if self.frame is not None:
            out["frame"] = self.frame
        if self.event is not None:
            out["event"] = self.event
        return out

    @staticmethod
    def from_dict(d: dict) -> "TraceEntry":
        return TraceEntry(
            direction=d["direction"],
            endpoint=d["endpoint"],
            seq=d.get("seq"),
            frame=d.get("frame"),
            event=d.get("event"),
        )


@dataclass
class Connection:
    conn_id: str
    send: SendFn
    session_id: Optional[SessionId] = None
    seen_msg_ids: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class RuleFireEvent:
    rule_id: str
    witness: tuple[tuple[str, SessionId], ...]


class Hub:
    def __init__(
        self,
        store_path: Optional[str] = None,
        auth: Optional[AuthStore] = None,
        trace: bool = False,
    ):
        self.store_path = store_path
        self.auth = auth if auth is not None else AuthStore()
        self.registry = builtin_registry()
        snapshot = load_snapshot(store_path) if store_path else None
        if snapshot is None:
            snapshot = Snapshot()
        self.users: dict[UserId, UserSpace] = snapshot.users
        self.behaviour_repo: dict[str, RepoRecord] = snapshot.behaviours
        self.server_seq: int = snapshot.server_seq
        c = snapshot.counters
        self._session_ids = IdSource("s", c.get("session", 1))
        self._object_ids = IdSource("o", c.get("object", 1))
        self._rule_ids = IdSource("r", c.get("rule", 1))
        self._msg_ids = IdSource("m", c.get("msg", 1))
        self._conn_ids = IdSource("c", c.get("conn", 1))
        # session-lifetime state: never persisted
        self.ledger = PresenceLedger()
        self.engine = RuleEngine()
        self.routes: list[Route] = []
        self.conns: dict[str, Connection] = {}
        self._session_conn: dict[SessionId, str] = {}
        self._mutation_seqs: dict[tuple[str, SessionId], int] = {}
        self._compiled: dict[str, CompiledRule] = {}
        self.rule_fire_log: list[RuleFireEvent] = []
        self.trace: Optional[list[TraceEntry]] = [] if trace else None
        self._dirty = False
        self._lock = threading.Lock()

    # ------------------------------------------------------------------ admin

    def register_user(self, user: UserId, password: str) -> None:
        self.auth.register(user, password)
        if self.trace is not None:
            self.trace.append(
                TraceEntry(direction="ctl", endpoint="hub", event="register-user",
                           frame={"user": user, "password": password})
            )

    def state_fingerprint(self) -> dict:
        """Canonical view of everything the snapshot persists."""
        return Snapshot(
            users=self.users,
            behaviours=self.behaviour_repo,
            server_seq=self.server_seq,
            counters=self._counters(),
        ).to_dict()

    def _counters(self) -> dict[str, int]:
        return {
            "session": self._session_ids.next_value,
            "object": self._object_ids.next_value,
            "rule": self._rule_ids.next_value,
            "msg": self._msg_ids.next_value,
            "conn": self._conn_ids.next_value,
        }

    def _persist(self) -> None:
        if self.store_path:
            save_snapshot(
                self.store_path,
                Snapshot(
                    users=self.users,
                    behaviours=self.behaviour_repo,
                    server_seq=self.server_seq,
                    counters=self._counters(),
                ),
            )

    # ------------------------------------------------------------- transport

    def connect(self, send: SendFn) -> str:
        with self._lock:
            conn = Connection(conn_id=self._conn_ids.take(), send=send)
            self.conns[conn.conn_id] = conn
            self._trace_ctl(conn.conn_id, "connect")
            return conn.conn_id

    def close(self, conn_id: str) -> None:
        with self._lock:
            conn = self.conns.pop(conn_id, None)
            if conn is None:
                return
            self._trace_ctl(conn_id, "close")
            if conn.session_id is not None:
                self._close_session(conn.session_id)

    def receive(self, conn_id: str, data: bytes) -> None:
        """Handle one inbound frame. All errors turn into Error frames."""
        with self._lock:
            conn = self.conns.get(conn_id)
            if conn is None:
                raise UnknownSession(conn_id)
            try:
                msg = wire.decode(data)
            except DuiHubError as exc:
                self._send_error(conn, exc.code, str(exc))
                return
            if msg.msg_id in conn.seen_msg_ids:
                return  # duplicate delivery of a client retry
            conn.seen_msg_ids.add(msg.msg_id)
            if msg.server_seq is not None:
                self._send_error(conn, AlreadySequenced("client frames are unsequenced").code,
                                 "client frames must not carry serverSeq", msg.msg_id)
                return
            msg, self.server_seq = wire.assign_server_seq(msg, self.server_seq)
            self._trace_frame("in", conn.conn_id, msg)
            try:
                self._dispatch(conn, msg)
            except DuiHubError as exc:
                self._send_error(conn, exc.code, str(exc), msg.msg_id)
            finally:
                # snapshot after the whole turn so the persisted counters
                # match the in-memory ones at every quiescent point
                if self._dirty:
                    self._persist()
                    self._dirty = False

    # ------------------------------------------------------------- internals

    def _trace_ctl(self, endpoint: str, event: str) -> None:
        if self.trace is not None:
            self.trace.append(TraceEntry(direction="ctl", endpoint=endpoint, event=event))

    def _trace_frame(self, direction: str, endpoint: str, msg: wire.WireMessage) -> None:
        if self.trace is not None:
            self.trace.append(
                TraceEntry(direction=direction, endpoint=endpoint, seq=msg.server_seq,
                           frame=wire.message_to_dict(msg))
            )

    def _emit(self, conn: Connection, payload: wire.Payload) -> None:
        msg = wire.WireMessage(msg_id=self._msg_ids.take(), payload=payload)
        msg, self.server_seq = wire.assign_server_seq(msg, self.server_seq)
        self._trace_frame("out", conn.conn_id, msg)
        conn.send(wire.encode(msg))

    def _emit_to_session(self, session_id: SessionId, payload: wire.Payload) -> bool:
        conn_id = self._session_conn.get(session_id)
        conn = self.conns.get(conn_id) if conn_id else None
        if conn is None:
            return False
        self._emit(conn, payload)
        return True

    def _send_error(self, conn: Connection, code: str, message: str, in_reply_to: Optional[str] = None) -> None:
        self._emit(conn, wire.Error(code=code, message=message, in_reply_to=in_reply_to))

    def _ack(self, conn: Connection, msg: wire.WireMessage, result: Optional[dict] = None) -> None:
        self._emit(conn, wire.Ack(in_reply_to=msg.msg_id, result=result or {}))

    def _session(self, conn: Connection) -> SessionInfo:
        info = self.ledger.directory.get(conn.session_id or "")
        if info is None:
            raise UnknownSession(conn.session_id or conn.conn_id)
        return info

    def _space(self, user: UserId) -> UserSpace:
        return self.users.setdefault(user, UserSpace())

    def _siblings(self, user: UserId, exclude: Optional[SessionId] = None) -> list[SessionInfo]:
        return [s for s in self.ledger.sessions_of(user) if s.session_id != exclude]

    def _visible_registry(self, user: UserId) -> BehaviourRegistry:
        """Built-ins plus the repository records this user may see."""
        registry = builtin_registry()
        for record in self.behaviour_repo.values():
            if record.public or record.owner == user:
                registry.register(record.meta)
        return registry

    def _visible_descriptors(self, user: UserId) -> list[BehaviourDescriptor]:
        return self._visible_registry(user).all()

    # ------------------------------------------------------------- dispatch

    def _dispatch(self, conn: Connection, msg: wire.WireMessage) -> None:
        payload = msg.payload
        if isinstance(payload, wire.Hello):
            self._handle_hello(conn, msg, payload)
            return
        if isinstance(payload, (wire.Welcome, wire.SessionCommandMsg, wire.Ack, wire.Error)):
            raise SchemaViolation(f"{msg.kind.value} frames are hub-originated")
        if conn.session_id is None:
            raise AuthFailed("say Hello first")
        if isinstance(payload, wire.PresenceUpdate):
            self._handle_presence(conn, msg, payload)
        elif isinstance(payload, wire.CollectObject):
            self._handle_collect(conn, msg, payload)
        elif isinstance(payload, wire.UpdateObject):
            self._handle_update(conn, msg, payload)
        elif isinstance(payload, wire.DeleteObject):
            self._handle_delete(conn, msg, payload)
        elif isinstance(payload, wire.InvokeBehaviour):
            self._handle_invoke(conn, msg, payload)
        elif isinstance(payload, wire.DomEvent):
            self._handle_dom_event(conn, msg, payload)
        elif isinstance(payload, wire.NavigationCommand):
            self._handle_navigation(conn, msg, payload)
        elif isinstance(payload, wire.ContentMutation):
            self._handle_mutation(conn, msg, payload)
        elif isinstance(payload, wire.UploadBehaviour):
            self._handle_upload(conn, msg, payload)
        elif isinstance(payload, wire.FetchBehaviour):
            self._handle_fetch(conn, msg, payload)
        else:  # pragma: no cover - payload union is exhaustive
            raise SchemaViolation(f"unhandled kind {msg.kind.value}")

    # --------------------------------------------------------------- handlers

    def _handle_hello(self, conn: Connection, msg: wire.WireMessage, hello: wire.Hello) -> None:
        if conn.session_id is not None:
            raise SchemaViolation("connection already has a session")
        if not self.auth.verify(hello.user_id, hello.credentials):
            raise AuthFailed(f"bad credentials for {hello.user_id!r}")
        session_id = self._session_ids.take()
        token = hashlib.sha256(f"{session_id}:{hello.user_id}:{self.server_seq}".encode()).hexdigest()[:16]
        info = SessionInfo(session_id=session_id, user_id=hello.user_id, device=hello.device, current_url="")
        self.ledger = self.ledger.with_session(info)
        conn.session_id = session_id
        self._session_conn[session_id] = conn.conn_id
        space = self._space(hello.user_id)
        visible = self._visible_descriptors(hello.user_id)
        user_objects = set(space.objects)
        self._emit(
            conn,
            wire.Welcome(
                session_id=session_id,
                token=token,
                objects=tuple(sorted(space.objects.values(), key=lambda o: o.object_id)),
                rules=tuple(space.rules.values()),
                ledger=tuple(
                    rec for key, rec in sorted(self.ledger.records.items()) if key[0] in user_objects
                ),
                sessions=tuple(self.ledger.sessions_of(hello.user_id)),
                behaviours=tuple(visible),
            ),
        )
        for sibling in self._siblings(hello.user_id, exclude=session_id):
            self._emit_to_session(
                sibling.session_id,
                wire.PresenceUpdate(scope="session", event="joined", session=info),
            )
        self._sweep_rules(hello.user_id)

    def _handle_presence(self, conn: Connection, msg: wire.WireMessage, upd: wire.PresenceUpdate) -> None:
        me = self._session(conn)
        if upd.scope == "object":
            record = upd.record
            assert record is not None
            if record.session_id != me.session_id:
                raise SpoofedSession(f"record for {record.session_id}, sent by {me.session_id}")
            space = self._space(me.user_id)
            if record.object_id not in space.objects:
                raise UnknownObject(record.object_id)
            self.ledger, changed = apply_presence_update(self.ledger, record)
            if not changed:
                return
            for sibling in self._siblings(me.user_id, exclude=me.session_id):
                self._emit_to_session(
                    sibling.session_id, wire.PresenceUpdate(scope="object", record=record)
                )
            self._sweep_rules(me.user_id)
            return
        # session scope: the only client-sent event is a URL change
        assert upd.session is not None
        if upd.event != "url":
            raise SchemaViolation("clients may only announce url changes")
        if upd.session.session_id != me.session_id:
            raise SpoofedSession(upd.session.session_id)
        info = SessionInfo(
            session_id=me.session_id,
            user_id=me.user_id,
            device=me.device,
            current_url=upd.session.current_url,
        )
        self.ledger = self.ledger.with_session(info)
        for sibling in self._siblings(me.user_id, exclude=me.session_id):
            self._emit_to_session(
                sibling.session_id, wire.PresenceUpdate(scope="session", event="url", session=info)
            )
        self._sweep_rules(me.user_id)

    def _handle_collect(self, conn: Connection, msg: wire.WireMessage, col: wire.CollectObject) -> None:
        me = self._session(conn)
        obj = collect_object(
            owner=me.user_id,
            locator=col.locator,
            stereotype=col.stereotype,
            name=col.name,
            tags=col.tags,
            ids=self._object_ids,
            created_at=msg.server_seq or 0,
        )
        self._space(me.user_id).objects[obj.object_id] = obj
        self._dirty = True
        self._ack(conn, msg, {"object": ser.object_to_dict(obj)})
        for sibling in self._siblings(me.user_id, exclude=me.session_id):
            self._emit_to_session(sibling.session_id, wire.UpdateObject(object=obj))

    def _handle_update(self, conn: Connection, msg: wire.WireMessage, upd: wire.UpdateObject) -> None:
        me = self._session(conn)
        space = self._space(me.user_id)
        if upd.object is not None:
            obj = upd.object
            current = space.objects.get(obj.object_id)
            if current is None:
                raise UnknownObject(obj.object_id)
            if current.owner != me.user_id or obj.owner != me.user_id:
                raise NotOwner(obj.object_id)
            if not obj.name:
                raise EmptyName(obj.object_id)
            validate_locator(obj.locator)
            # re-validate behaviour attachments against the declared stereotype
            registry = self._visible_registry(me.user_id)
            checked = replace(
                current,
                name=obj.name,
                tags=obj.tags,
                stereotype=obj.stereotype,
                locator=obj.locator,
                enabled_behaviours=frozenset(),
            )
            for behaviour_id in sorted(obj.enabled_behaviours):
                checked = attach_behaviour(checked, behaviour_id, registry)
            space.objects[obj.object_id] = checked
            self._dirty = True
            self._ack(conn, msg, {"object": ser.object_to_dict(checked)})
            for sibling in self._siblings(me.user_id, exclude=me.session_id):
                self._emit_to_session(sibling.session_id, wire.UpdateObject(object=checked))
            return
        rule = upd.rule
        assert rule is not None
        if rule.owner != me.user_id:
            raise NotOwner(rule.rule_id or "(new rule)")
        if not rule.rule_id:
            rule = replace(rule, rule_id=self._rule_ids.take())
        compiled = compile_rule(rule, self._visible_registry(me.user_id), space.objects)
        space.rules[rule.rule_id] = rule  # replaces in place, keeps creation order
        self._compiled[rule.rule_id] = compiled
        self.engine.forget(rule.rule_id)  # re-arm on update
        self._dirty = True
        self._ack(conn, msg, {"rule": ser.rule_to_dict(rule)})
        for sibling in self._siblings(me.user_id, exclude=me.session_id):
            self._emit_to_session(sibling.session_id, wire.UpdateObject(rule=rule))
        self._sweep_rules(me.user_id)

    def _handle_delete(self, conn: Connection, msg: wire.WireMessage, dele: wire.DeleteObject) -> None:
        me = self._session(conn)
        space = self._space(me.user_id)
        if dele.object_id is not None:
            if dele.object_id not in space.objects:
                raise UnknownObject(dele.object_id)
            del space.objects[dele.object_id]
            self.ledger = self.ledger.without_object(dele.object_id)
            self.routes = [r for r in self.routes if r.object_id != dele.object_id]
            # cascade: rules referencing the object die with it
            doomed = [
                rid for rid, rule in space.rules.items()
                if self._rule_references_object(rule, dele.object_id)
            ]
            for rid in doomed:
                del space.rules[rid]
                self._compiled.pop(rid, None)
                self.engine.forget(rid)
            self._dirty = True
            self._ack(conn, msg)
            for sibling in self._siblings(me.user_id, exclude=me.session_id):
                self._emit_to_session(sibling.session_id, wire.DeleteObject(object_id=dele.object_id))
                for rid in doomed:
                    self._emit_to_session(sibling.session_id, wire.DeleteObject(rule_id=rid))
            return
        rule_id = dele.rule_id
        assert rule_id is not None
        if rule_id not in space.rules:
            raise UnknownObject(f"rule {rule_id}")
        del space.rules[rule_id]
        self._compiled.pop(rule_id, None)
        self.engine.forget(rule_id)
        self._dirty = True
        self._ack(conn, msg)
        for sibling in self._siblings(me.user_id, exclude=me.session_id):
            self._emit_to_session(sibling.session_id, wire.DeleteObject(rule_id=rule_id))

    @staticmethod
    def _rule_references_object(rule, object_id: str) -> bool:
        for pred in rule.condition:
            if getattr(pred, "object_id", None) == object_id:
                return True
        for action in rule.actions:
            for bound in action.bindings.values():
                if bound.kind == "object":
                    values = bound.value if isinstance(bound.value, (list, tuple)) else [bound.value]
                    if object_id in values:
                        return True
        return False

    def _handle_invoke(self, conn: Connection, msg: wire.WireMessage, inv: wire.InvokeBehaviour) -> None:
        me = self._session(conn)
        plan = self._plan_invocation(me.user_id, inv.behaviour_id, dict(inv.bindings), invoker=me)
        self._execute_plan(me.user_id, plan, originator=conn, in_reply_to=msg.msg_id)
        self._ack(conn, msg, {"commands": len(plan.commands), "routes": len(plan.routes)})

    def _plan_invocation(
        self,
        user: UserId,
        behaviour_id: str,
        bindings: dict[str, BoundValue],
        invoker: Optional[SessionInfo] = None,
    ) -> InvocationPlan:
        registry = self._visible_registry(user)
        descriptor = registry.lookup(behaviour_id)
        if descriptor is None:
            raise UnknownBehaviour(behaviour_id)
        for name, bound in bindings.items():
            if bound.kind == "selector":
                raise BindingError(f"{name}: selector bindings are only valid inside rules")
        space = self._space(user)
        for bound in bindings.values():
            if bound.kind == "object":
                values = bound.value if isinstance(bound.value, (list, tuple)) else [bound.value]
                for oid in values:
                    obj = space.objects.get(str(oid))
                    if obj is not None and obj.owner != user:
                        raise NotOwner(str(oid))
        # opening "here" elsewhere defaults to the invoking session's URL
        if behaviour_id == OPEN_IN and "url" not in bindings and invoker is not None and invoker.current_url:
            bindings["url"] = BoundValue.text(invoker.current_url)
        validate_bindings(descriptor, bindings)
        if descriptor.planner is None:
            raise PlannerError(UnknownBehaviour(f"{behaviour_id} has no hub-side planner"))
        ctx = PlanContext(ledger=self.ledger, objects=space.objects, user=user)
        try:
            plan = descriptor.planner(bindings, ctx)
        except BindingError:
            raise
        except DuiHubError as exc:
            raise PlannerError(exc) from exc
        return plan

    def _execute_plan(
        self,
        user: UserId,
        plan: InvocationPlan,
        originator: Optional[Connection],
        in_reply_to: Optional[str],
    ) -> None:
        for command in plan.commands:
            self._route_command(command, originator=originator, in_reply_to=in_reply_to)
        for route in plan.routes:
            if route not in self.routes:
                self.routes.append(route)

    def _route_command(
        self,
        command: SessionCommand,
        originator: Optional[Connection] = None,
        in_reply_to: Optional[str] = None,
    ) -> None:
        delivered = self._emit_to_session(command.target, wire.SessionCommandMsg(command=command))
        if not delivered:
            if originator is not None:
                self._send_error(
                    originator,
                    TargetGone(command.target).code,
                    f"session {command.target} is gone; {command.action.value} dropped",
                    in_reply_to,
                )

    def _handle_dom_event(self, conn: Connection, msg: wire.WireMessage, dom: wire.DomEvent) -> None:
        me = self._session(conn)
        event = dom.event
        space = self._space(me.user_id)
        if event.object_id not in space.objects:
            raise UnknownObject(event.object_id)
        for route in self.routes:
            if (
                isinstance(route, RedirectRoute)
                and route.object_id == event.object_id
                and route.source == me.session_id
            ):
                self._route_command(replay_event(route.target, event), originator=conn, in_reply_to=msg.msg_id)

    def _handle_navigation(self, conn: Connection, msg: wire.WireMessage, nav: wire.NavigationCommand) -> None:
        me = self._session(conn)
        for route in self.routes:
            if (
                isinstance(route, NavigationRoute)
                and route.object_id == nav.object_id
                and route.controller == me.session_id
            ):
                self._route_command(
                    navigate(route.controlled, nav.url, object_id=nav.object_id),
                    originator=conn,
                    in_reply_to=msg.msg_id,
                )

    def _handle_mutation(self, conn: Connection, msg: wire.WireMessage, mut: wire.ContentMutation) -> None:
        me = self._session(conn)
        mutation = mut.mutation
        space = self._space(me.user_id)
        if mutation.object_id not in space.objects:
            raise UnknownObject(mutation.object_id)
        key = (mutation.object_id, me.session_id)
        if mutation.origin_seq <= self._mutation_seqs.get(key, 0):
            return  # stale or duplicate edit
        self._mutation_seqs[key] = mutation.origin_seq
        mirrored = any(
            isinstance(route, MirrorRoute) and route.object_id == mutation.object_id
            for route in self.routes
        )
        if not mirrored:
            return
        mine = {s.session_id for s in self.ledger.sessions_of(me.user_id)}
        online = [t for t in self.ledger.online_sessions(mutation.object_id) if t in mine]
        if not any(t != me.session_id for t in online):
            return  # nobody else is looking at it
        # fan out in hub order, echoing the originator too: every session then
        # applies the same serverSeq-ordered write sequence, so racing edits
        # converge on the hub-ordered last write
        for target in online:
            self._route_command(apply_mutation(target, mutation), originator=conn, in_reply_to=msg.msg_id)

    def _handle_upload(self, conn: Connection, msg: wire.WireMessage, up: wire.UploadBehaviour) -> None:
        me = self._session(conn)
        behaviour_id = up.meta.behaviour_id
        if behaviour_id in self.behaviour_repo or self.registry.lookup(behaviour_id) is not None:
            raise DuplicateId(behaviour_id)
        try:
            BehaviourRegistry().register(up.meta)
        except InvalidParamSpec as exc:
            raise InvalidDescriptor(str(exc)) from None
        self.behaviour_repo[behaviour_id] = RepoRecord(
            meta=up.meta,
            script=up.script,
            owner=me.user_id,
            public=up.public,
            reviews_enabled=up.reviews_enabled,
            bug_tracking_enabled=up.bug_tracking_enabled,
        )
        self._dirty = True
        self._ack(conn, msg, {"behaviourId": behaviour_id})

    def _handle_fetch(self, conn: Connection, msg: wire.WireMessage, fetch: wire.FetchBehaviour) -> None:
        me = self._session(conn)
        if fetch.behaviour_id is None:
            listing = [
                {
                    "meta": ser.descriptor_meta_to_dict(rec.meta),
                    "owner": rec.owner,
                    "public": rec.public,
                    "reviewsEnabled": rec.reviews_enabled,
                    "bugTrackingEnabled": rec.bug_tracking_enabled,
                }
                for rec in self.behaviour_repo.values()
                if rec.public or rec.owner == me.user_id
            ]
            self._ack(conn, msg, {"behaviours": listing})
            return
        record = self.behaviour_repo.get(fetch.behaviour_id)
        if record is None or (not record.public and record.owner != me.user_id):
            raise UnknownBehaviour(fetch.behaviour_id)
        self._ack(conn, msg, {"record": record.to_dict()})

    # ------------------------------------------------------------ rule sweeps

    def _compiled_rules_of(self, user: UserId) -> list[CompiledRule]:
        space = self._space(user)
        out = []
        registry = self._visible_registry(user)
        for rule_id, rule in space.rules.items():  # creation order
            compiled = self._compiled.get(rule_id)
            if compiled is None or compiled.rule is not rule:
                compiled = compile_rule(rule, registry, space.objects)
                self._compiled[rule_id] = compiled
            out.append(compiled)
        return out

    def _sweep_rules(self, user: UserId) -> None:
        firings = self.engine.sweep(self._compiled_rules_of(user), self.ledger)
        for firing in firings:
            self.rule_fire_log.append(
                RuleFireEvent(
                    rule_id=firing.rule.rule_id,
                    witness=tuple(sorted(firing.witness.items())),
                )
            )
            for action in firing.rule.actions:
                try:
                    bindings = resolve_action_bindings(action, firing.witness)
                    plan = self._plan_invocation(user, action.behaviour_id, bindings)
                except DuiHubError as exc:
                    self._broadcast_error(user, exc, firing.rule.rule_id)
                    continue  # a failed action never aborts the ones after it
                self._execute_plan(user, plan, originator=None, in_reply_to=None)

    def _broadcast_error(self, user: UserId, exc: DuiHubError, context: str) -> None:
        for info in self.ledger.sessions_of(user):
            conn_id = self._session_conn.get(info.session_id)
            conn = self.conns.get(conn_id) if conn_id else None
            if conn is not None:
                self._send_error(conn, exc.code, f"rule {context}: {exc}")

    # --------------------------------------------------------------- shutdown

    def _close_session(self, session_id: SessionId) -> None:
        info = self.ledger.directory.get(session_id)
        if info is None:
            return
        self._session_conn.pop(session_id, None)
        # presence records die with the session (the observable equivalent
        # of marking every key Offline with a hub-assigned seq)
        self.ledger = self.ledger.without_session(session_id)
        survivors: list[Route] = []
        for route in self.routes:
            refs = _route_sessions(route)
            if session_id in refs:
                for other in sorted(refs - {session_id}):
                    conn_id = self._session_conn.get(other)
                    conn = self.conns.get(conn_id) if conn_id else None
                    if conn is not None:
                        self._send_error(
                            conn,
                            TargetGone(session_id).code,
                            f"{type(route).__name__} for {route.object_id} torn down: {session_id} left",
                        )
            else:
                survivors.append(route)
        self.routes = survivors
        for sibling in self._siblings(info.user_id, exclude=session_id):
            self._emit_to_session(
                sibling.session_id, wire.PresenceUpdate(scope="session", event="left", session=info)
            )
        self._sweep_rules(info.user_id)


def _route_sessions(route: Route) -> set[SessionId]:
    if isinstance(route, RedirectRoute):
        return {route.source, route.target}
    if isinstance(route, NavigationRoute):
        return {route.controller, route.controlled}
    return set()

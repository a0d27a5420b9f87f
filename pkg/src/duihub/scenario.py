"""Line-oriented scenario scripts and their runner.

One step per line; blank lines and ``#`` comments are skipped. Strings with
spaces use shell quoting. The full grammar is documented in
docs/FORMATS.md; in short:

    page <name> <url> <tree-json>
    user <name> <password>
    start <session> <user> <password> <Desktop|Mobile|Tablet|Other> <deviceId> [label]
    load <session> <pageName>
    collect <session> <objAlias> <elementPath> <stereotype> <displayName>
            [pattern=<glob>] [tags=a,b]
    invoke <session> <behaviourId> [name=value ...]
    rule <session> <ruleAlias> sel <slot>=<selector> ... when <predicate> ...
         do <behaviourId> [name=value ...] [do ...]
    event <session> <objAlias> <eventType> [payload]
    navigate <session> <url>
    edit <session> <objAlias> <text>
    close <session>
    settle | mingle
    crash | restart
    expect <what> ...

Binding values are interpreted against the behaviour's declared parameter
kinds: ``@alias`` is an object (comma-separated for lists), ``$name`` is a
session alias (or, inside rules, a condition slot), anything else is the
literal device id / enum option / text.
"""

from __future__ import annotations

import json
import shlex
from dataclasses import dataclass, field
from typing import Optional

from .behaviours import BoundValue, ParamKind
from .errors import ScenarioError
from .model import DeviceInfo, DeviceKind, Locator, PresenceState, Stereotype, _normalize_url
from .rules import (
    AnySessionOfUser,
    ExactSession,
    ObjectOfflineIn,
    ObjectOnlineIn,
    OfDeviceKind,
    OnDevice,
    Rule,
    RuleAction,
    SecondSessionSameDevice,
    SessionsSameDevice,
)
from .sim import SimWorld, VirtualPage, node_from_dict
from . import wire


@dataclass
class Step:
    index: int
    verb: str
    args: list[str]
    line: str


def parse_scenario(text: str) -> list[Step]:
    steps = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("page "):
            # the element tree is raw JSON: keep it out of shell lexing
            tokens = line.split(None, 3)
        else:
            try:
                tokens = shlex.split(line)
            except ValueError as exc:
                raise ScenarioError(lineno, f"unparseable line: {exc}") from None
        steps.append(Step(index=lineno, verb=tokens[0], args=tokens[1:], line=line))
    return steps


class ScenarioRun:
    """Executes parsed steps against a SimWorld, tracking aliases."""

    def __init__(self, world: SimWorld):
        self.world = world
        self.object_ids: dict[str, str] = {}  # @alias -> ObjectId
        self.rule_ids: dict[str, str] = {}

    # --- helpers -----------------------------------------------------------

    def _fail(self, step: Step, why: str) -> ScenarioError:
        return ScenarioError(step.index, f"{why} (in: {step.line})")

    def _object_id(self, step: Step, alias: str) -> str:
        if alias.startswith("@"):
            alias = alias[1:]
        if alias not in self.object_ids:
            raise self._fail(step, f"unknown object alias @{alias}")
        return self.object_ids[alias]

    def _session_id(self, step: Step, alias: str) -> str:
        if alias.startswith("$"):
            alias = alias[1:]
        session = self.world.sessions.get(alias)
        if session is None or session.session_id is None:
            raise self._fail(step, f"unknown session alias {alias}")
        return session.session_id

    def _kv(self, step: Step, tokens: list[str]) -> dict[str, str]:
        out = {}
        for token in tokens:
            name, eq, value = token.partition("=")
            if not eq:
                raise self._fail(step, f"expected name=value, got {token!r}")
            out[name] = value
        return out

    def _bind(self, step: Step, behaviour_id: str, kv: dict[str, str], slots: Optional[set[str]] = None) -> dict[str, BoundValue]:
        registry = self.world.hub._visible_registry("") if self.world.hub else None
        descriptor = registry.lookup(behaviour_id) if registry else None
        bindings: dict[str, BoundValue] = {}
        for name, raw in kv.items():
            spec = None
            if descriptor is not None:
                spec = next((p for p in descriptor.params if p.name == name), None)
            if raw.startswith("@"):
                if "," in raw:
                    ids = [self._object_id(step, part) for part in raw.split(",")]
                    bindings[name] = BoundValue.objects(ids)
                elif spec is not None and spec.repeated:
                    bindings[name] = BoundValue.objects([self._object_id(step, raw)])
                else:
                    bindings[name] = BoundValue.object(self._object_id(step, raw))
            elif raw.startswith("$"):
                slot = raw[1:]
                if slots is not None and slot in slots:
                    bindings[name] = BoundValue.selector(slot)
                else:
                    bindings[name] = BoundValue.session(self._session_id(step, raw))
            elif spec is not None and spec.kind is ParamKind.DEVICE_REF:
                bindings[name] = BoundValue.device(raw)
            elif spec is not None and spec.kind is ParamKind.ENUM:
                bindings[name] = BoundValue.enum(raw)
            elif spec is not None and spec.kind is ParamKind.OBJECT_REF:
                bindings[name] = BoundValue.object(self._object_id(step, raw))
            else:
                bindings[name] = BoundValue.text(raw)
        return bindings

    # --- step execution -------------------------------------------------------

    def execute(self, steps: list[Step]) -> None:
        for step in steps:
            self.world.step_index = step.index
            handler = getattr(self, f"_step_{step.verb.replace('-', '_')}", None)
            if handler is None:
                raise self._fail(step, f"unknown step {step.verb!r}")
            handler(step)
            if self.world.hub is not None:
                self.world.mingle()
        self.world.settle()

    def _step_page(self, step: Step) -> None:
        if len(step.args) != 3:
            raise self._fail(step, "page needs: name url tree-json")
        name, url, tree = step.args
        try:
            root = node_from_dict(json.loads(tree))
        except (json.JSONDecodeError, Exception) as exc:
            raise self._fail(step, f"bad page tree: {exc}")
        self.world.define_page(name, VirtualPage(url=url, root=root))

    def _step_user(self, step: Step) -> None:
        if len(step.args) != 2:
            raise self._fail(step, "user needs: name password")
        if self.world.hub is None:
            raise self._fail(step, "hub is down")
        self.world.hub.register_user(step.args[0], step.args[1])

    def _step_start(self, step: Step) -> None:
        if len(step.args) < 5:
            raise self._fail(step, "start needs: alias user password kind deviceId [label]")
        alias, user, password, kind, device_id, *label = step.args
        try:
            device = DeviceInfo(device_id=device_id, kind=DeviceKind(kind), label=" ".join(label))
        except ValueError:
            raise self._fail(step, f"bad device kind {kind!r}")
        if self.world.hub is None:
            raise self._fail(step, "hub is down")
        self.world.start_session(alias, user, password, device)

    def _step_load(self, step: Step) -> None:
        if len(step.args) != 2:
            raise self._fail(step, "load needs: session pageName")
        alias, page_name = step.args
        page = self.world.pages.get(page_name)
        if page is None:
            raise self._fail(step, f"unknown page {page_name!r}")
        self.world._live(alias).load_local(page)

    def _step_collect(self, step: Step) -> None:
        if len(step.args) < 5:
            raise self._fail(step, "collect needs: session objAlias path stereotype name [pattern=..] [tags=..]")
        alias, obj_alias, path, stereotype_raw, name, *rest = step.args
        session = self.world._live(alias)
        kv = self._kv(step, rest)
        try:
            stereotype = Stereotype(stereotype_raw)
        except ValueError:
            raise self._fail(step, f"bad stereotype {stereotype_raw!r}")
        if session.page is None:
            raise self._fail(step, f"{alias} has no page loaded")
        from .sim import resolve_element

        if resolve_element(session.page, path) is None:
            raise self._fail(step, f"picker found nothing at {path!r}")
        pattern = kv.get("pattern", _normalize_url(session.current_url))
        tags = [t for t in kv.get("tags", "").split(",") if t]
        msg_id = session._send(
            wire.CollectObject(
                locator=Locator(url_pattern=pattern, element_path=path),
                stereotype=stereotype,
                name=name,
                tags=tuple(tags),
            )
        )
        self.world.drain_until(lambda: msg_id in session.acks, f"collect ack for {obj_alias}")
        result = session.acks[msg_id]
        if "object" not in result:
            raise self._fail(step, f"collect failed: {session.errors[-1].code if session.errors else result}")
        self.object_ids[obj_alias] = result["object"]["objectId"]

    def _step_invoke(self, step: Step) -> None:
        if len(step.args) < 2:
            raise self._fail(step, "invoke needs: session behaviourId [bindings...]")
        alias, behaviour_id, *rest = step.args
        session = self.world._live(alias)
        bindings = self._bind(step, behaviour_id, self._kv(step, rest))
        session._send(wire.InvokeBehaviour(behaviour_id=behaviour_id, bindings=bindings))

    def _step_rule(self, step: Step) -> None:
        if len(step.args) < 2:
            raise self._fail(step, "rule needs: session ruleAlias sel ... when ... do ...")
        alias, rule_alias, *rest = step.args
        session = self.world._live(alias)
        selectors: dict = {}
        condition = []
        actions: list[RuleAction] = []
        mode = None
        current_behaviour: Optional[str] = None
        current_kv: dict[str, str] = {}

        def flush_action() -> None:
            nonlocal current_behaviour, current_kv
            if current_behaviour is not None:
                actions.append(
                    RuleAction(
                        behaviour_id=current_behaviour,
                        bindings=self._bind(step, current_behaviour, current_kv, slots=set(selectors)),
                    )
                )
                current_behaviour, current_kv = None, {}

        i = 0
        while i < len(rest):
            token = rest[i]
            if token in ("sel", "when", "do"):
                if token == "do":
                    flush_action()
                    i += 1
                    if i >= len(rest):
                        raise self._fail(step, "do needs a behaviour id")
                    current_behaviour = rest[i]
                    mode = "do"
                else:
                    mode = token
                i += 1
                continue
            if mode == "sel":
                name, eq, expr = token.partition("=")
                if not eq:
                    raise self._fail(step, f"sel needs slot=expr, got {token!r}")
                selectors[name] = self._parse_selector(step, expr)
            elif mode == "when":
                condition.append(self._parse_predicate(step, token))
            elif mode == "do":
                name, eq, value = token.partition("=")
                if not eq:
                    raise self._fail(step, f"do binding needs name=value, got {token!r}")
                current_kv[name] = value
            else:
                raise self._fail(step, f"expected sel/when/do, got {token!r}")
            i += 1
        flush_action()
        rule = Rule(
            rule_id="",
            owner=session.user,
            selectors=selectors,
            condition=tuple(condition),
            actions=tuple(actions),
            enabled=True,
        )
        msg_id = session._send(wire.UpdateObject(rule=rule))
        self.world.drain_until(lambda: msg_id in session.acks, f"rule ack for {rule_alias}")
        result = session.acks[msg_id]
        if "rule" not in result:
            raise self._fail(step, f"rule rejected: {session.errors[-1].code if session.errors else result}")
        self.rule_ids[rule_alias] = result["rule"]["ruleId"]

    def _parse_selector(self, step: Step, expr: str):
        kind, colon, arg = expr.partition(":")
        if kind == "any":
            return AnySessionOfUser()
        if kind == "exact":
            return ExactSession(self._session_id(step, arg))
        if kind == "device":
            return OnDevice(arg)
        if kind == "kind":
            try:
                return OfDeviceKind(DeviceKind(arg))
            except ValueError:
                raise self._fail(step, f"bad device kind {arg!r}")
        if kind == "samedev":
            return SecondSessionSameDevice(of=arg)
        raise self._fail(step, f"bad selector {expr!r}")

    def _parse_predicate(self, step: Step, expr: str):
        parts = expr.split(":")
        if parts[0] in ("online", "offline") and len(parts) == 3:
            object_id = self._object_id(step, parts[1])
            cls = ObjectOnlineIn if parts[0] == "online" else ObjectOfflineIn
            return cls(object_id=object_id, selector=parts[2])
        if parts[0] == "samedevice" and len(parts) == 3:
            return SessionsSameDevice(a=parts[1], b=parts[2])
        raise self._fail(step, f"bad predicate {expr!r}")

    def _step_event(self, step: Step) -> None:
        if len(step.args) < 3:
            raise self._fail(step, "event needs: session objAlias eventType [payload]")
        alias, obj_alias, event_type, *payload = step.args
        session = self.world._live(alias)
        session.user_event(
            self._object_id(step, obj_alias), event_type, payload[0] if payload else None
        )

    def _step_navigate(self, step: Step) -> None:
        if len(step.args) != 2:
            raise self._fail(step, "navigate needs: session url")
        self.world._live(step.args[0]).user_navigate(step.args[1])

    def _step_edit(self, step: Step) -> None:
        if len(step.args) != 3:
            raise self._fail(step, "edit needs: session objAlias text")
        alias, obj_alias, text = step.args
        self.world._live(alias).edit_text(self._object_id(step, obj_alias), text)

    def _step_close(self, step: Step) -> None:
        if len(step.args) != 1:
            raise self._fail(step, "close needs: session")
        self.world.close_session(step.args[0])

    def _step_settle(self, step: Step) -> None:
        self.world.settle()

    def _step_mingle(self, step: Step) -> None:
        self.world.mingle()

    def _step_crash(self, step: Step) -> None:
        self.world.crash_hub()

    def _step_restart(self, step: Step) -> None:
        self.world.restart_hub()

    # --- assertions ---------------------------------------------------------------

    def _step_expect(self, step: Step) -> None:
        self.world.settle()
        if not step.args:
            raise self._fail(step, "expect needs a check")
        check, *args = step.args
        ok, detail = self._check(step, check, args)
        if not ok:
            raise self._fail(step, f"expectation failed: {detail}")

    def _check(self, step: Step, check: str, args: list[str]) -> tuple[bool, str]:
        hub = self.world.hub
        if check == "online":
            obj, alias, want = args
            object_id = self._object_id(step, obj)
            session_id = self._session_id(step, alias)
            actual = hub.ledger.is_online(object_id, session_id)
            return actual == (want == "true"), f"online({obj}@{alias}) is {actual}"
        if check == "onlineset":
            alias, listed = args
            session_id = self._session_id(step, alias)
            want = set() if listed == "none" else {self._object_id(step, part) for part in listed.split(",")}
            actual = {
                key[0]
                for key, rec in hub.ledger.records.items()
                if key[1] == session_id and rec.state is PresenceState.ONLINE
            }
            return actual == want, f"online set at {alias} is {sorted(actual)}, wanted {sorted(want)}"
        if check == "url":
            alias, url = args
            actual = self.world._live(alias).current_url
            return actual == url, f"url({alias}) is {actual!r}"
        if check == "replays":
            alias, obj, count = args
            object_id = self._object_id(step, obj)
            actual = sum(1 for e in self.world._live(alias).replays if e.object_id == object_id)
            return actual == int(count), f"replays({obj}@{alias}) is {actual}"
        if check == "navigations":
            alias, count = args
            actual = len(self.world._live(alias).navigations)
            return actual == int(count), f"navigations({alias}) is {actual}"
        if check == "text":
            alias, obj, text = args
            actual = self.world._live(alias).element_text(self._object_id(step, obj))
            return actual == text, f"text({obj}@{alias}) is {actual!r}"
        if check == "sametext":
            a, b, obj = args
            object_id = self._object_id(step, obj)
            ta = self.world._live(a).element_text(object_id)
            tb = self.world._live(b).element_text(object_id)
            return ta == tb, f"text diverged: {a}={ta!r} {b}={tb!r}"
        if check == "fired":
            rule_alias, count = args
            rule_id = self.rule_ids.get(rule_alias)
            actual = sum(1 for e in hub.rule_fire_log if e.rule_id == rule_id)
            return actual == int(count), f"fired({rule_alias}) is {actual}"
        if check == "visible":
            obj, alias, want = args
            actual = self.world._live(alias).is_visible(self._object_id(step, obj))
            return actual == (want == "true"), f"visible({obj}@{alias}) is {actual}"
        if check == "effects":
            alias, obj, count = args
            object_id = self._object_id(step, obj)
            actual = sum(1 for oid, _ in self.world._live(alias).effects if oid == object_id)
            return actual == int(count), f"effects({obj}@{alias}) is {actual}"
        if check == "objects":
            alias, count = args
            actual = len(self.world._live(alias).objects)
            return actual == int(count), f"objects({alias}) is {actual}"
        if check == "converged":
            violations = self.world.convergence_violations()
            return not violations, "; ".join(violations)
        raise self._fail(step, f"unknown expectation {check!r}")


def run_scenario(
    text: str,
    seed: int = 1,
    fault_duplicate: bool = False,
    fault_break_dedupe: bool = False,
    store_path: Optional[str] = None,
) -> SimWorld:
    """Parse and execute a scenario; returns the settled world."""
    steps = parse_scenario(text)
    world = SimWorld(
        seed=seed,
        store_path=store_path,
        fault_duplicate=fault_duplicate,
        fault_break_dedupe=fault_break_dedupe,
    )
    try:
        ScenarioRun(world).execute(steps)
    except Exception:
        world.cleanup()
        raise
    return world


@dataclass
class SweepReport:
    seeds: int
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def first_divergence(a: list, b: list) -> Optional[int]:
    for i, (x, y) in enumerate(zip(a, b)):
        if x != y:
            return i
    if len(a) != len(b):
        return min(len(a), len(b))
    return None


def sweep_interleavings(
    text: str,
    seeds: int = 100,
    check_duplicates: bool = True,
    fault_break_dedupe: bool = False,
) -> SweepReport:
    """Run a scenario across many interleavings and collect violations.

    Per seed: (a) every live session's view must converge with the hub's;
    (b) when check_duplicates is on, re-running the seed with duplicated
    delivery must end in the identical world state (receivers deduplicate).
    Violations carry the seed and a pointer to the first divergent piece.
    """
    report = SweepReport(seeds=seeds)
    for seed in range(1, seeds + 1):
        world = run_scenario(text, seed=seed)
        try:
            for violation in world.convergence_violations():
                report.violations.append({"seed": seed, "kind": "convergence", "detail": violation})
            baseline = world.world_fingerprint()
        finally:
            world.cleanup()
        if not check_duplicates:
            continue
        try:
            dup_world = run_scenario(
                text, seed=seed, fault_duplicate=True, fault_break_dedupe=fault_break_dedupe
            )
        except ScenarioError as exc:
            # under duplicated delivery the script itself must still hold;
            # a failing expectation is a detected violation, not a crash
            report.violations.append({"seed": seed, "kind": "duplicate-delivery", "detail": str(exc)})
            continue
        try:
            doubled = dup_world.world_fingerprint()
        finally:
            dup_world.cleanup()
        if doubled != baseline:
            detail = _fingerprint_diff(baseline, doubled)
            report.violations.append({"seed": seed, "kind": "duplicate-delivery", "detail": detail})
    return report


def _fingerprint_diff(a: dict, b: dict) -> str:
    a_flat = json.dumps(a, sort_keys=True, indent=0).splitlines()
    b_flat = json.dumps(b, sort_keys=True, indent=0).splitlines()
    i = first_divergence(a_flat, b_flat)
    if i is None:
        return "fingerprints differ only in ordering"
    lo = max(0, i - 1)
    return f"first divergence at line {i}: clean={a_flat[lo:i + 1]!r} doubled={b_flat[lo:i + 1]!r}"

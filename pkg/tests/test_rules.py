import itertools
import random

import pytest

from duihub.behaviours import BoundValue, builtin_registry
from duihub.errors import BindingError, RuleInvalid, UnknownBehaviour, UnknownObject
from duihub.model import DeviceKind, PresenceLedger, PresenceRecord, PresenceState
from duihub.rules import (
    AnySessionOfUser,
    CompiledRule,
    ExactSession,
    ObjectOfflineIn,
    ObjectOnlineIn,
    OfDeviceKind,
    OnDevice,
    Rule,
    RuleAction,
    RuleEngine,
    SecondSessionSameDevice,
    SessionsSameDevice,
    compile_rule,
    evaluate_condition,
    resolve_action_bindings,
)

from conftest import ledger_with, make_object, make_session


REGISTRY = builtin_registry()


def control_nav_rule(object_id="o1", rule_id="r1", enabled=True):
    """Distribute an index when it is online in two sessions of one device."""
    return Rule(
        rule_id=rule_id,
        owner="u1",
        selectors={"a": AnySessionOfUser(), "b": SecondSessionSameDevice(of="a")},
        condition=(ObjectOnlineIn(object_id, "a"), ObjectOnlineIn(object_id, "b")),
        actions=(RuleAction("ControlNavigation", {
            "controlsBy": BoundValue.object(object_id),
            "controlsFrom": BoundValue.selector("b"),
            "controlsIn": BoundValue.selector("a"),
        }),),
        enabled=enabled,
    )


def objects_for(*ids):
    return {oid: make_object(oid) for oid in ids}


class TestCompile:
    def test_same_device_distribution_rule_compiles(self):
        compiled = compile_rule(control_nav_rule(), REGISTRY, objects_for("o1"))
        assert compiled.slots == ("a", "b")

    def test_zero_predicates_rejected(self):
        rule = Rule("r1", "u1", {"a": AnySessionOfUser()}, (), control_nav_rule().actions)
        with pytest.raises(RuleInvalid):
            compile_rule(rule, REGISTRY, objects_for("o1"))

    def test_zero_actions_rejected(self):
        rule = Rule("r1", "u1", {"a": AnySessionOfUser()},
                    (ObjectOnlineIn("o1", "a"),), ())
        with pytest.raises(RuleInvalid):
            compile_rule(rule, REGISTRY, objects_for("o1"))

    def test_deleted_object_reference_rejected(self):
        with pytest.raises(UnknownObject):
            compile_rule(control_nav_rule(object_id="gone"), REGISTRY, objects_for("o1"))

    def test_unknown_behaviour_rejected(self):
        rule = Rule("r1", "u1", {"a": AnySessionOfUser()},
                    (ObjectOnlineIn("o1", "a"),),
                    (RuleAction("Teleport", {}),))
        with pytest.raises(UnknownBehaviour):
            compile_rule(rule, REGISTRY, objects_for("o1"))

    def test_dangling_slot_rejected(self):
        rule = Rule("r1", "u1", {"a": AnySessionOfUser()},
                    (ObjectOnlineIn("o1", "zz"),), control_nav_rule().actions)
        with pytest.raises(RuleInvalid):
            compile_rule(rule, REGISTRY, objects_for("o1"))

    def test_same_device_backreference_must_point_earlier(self):
        rule = Rule("r1", "u1",
                    {"b": SecondSessionSameDevice(of="a"), "a": AnySessionOfUser()},
                    (ObjectOnlineIn("o1", "a"),), control_nav_rule().actions)
        with pytest.raises(RuleInvalid):
            compile_rule(rule, REGISTRY, objects_for("o1"))

    def test_action_binding_to_unknown_slot_rejected(self):
        rule = Rule("r1", "u1", {"a": AnySessionOfUser()},
                    (ObjectOnlineIn("o1", "a"),),
                    (RuleAction("ShowOnlyIn", {
                        "object": BoundValue.object("o1"),
                        "target": BoundValue.selector("nope"),
                    }),))
        with pytest.raises(BindingError):
            compile_rule(rule, REGISTRY, objects_for("o1"))


class TestEvaluate:
    def test_two_sessions_same_device(self):
        ledger = ledger_with(
            [make_session("s1", device_id="d1"), make_session("s2", device_id="d1")],
            online=[("o1", "s1"), ("o1", "s2")],
        )
        compiled = compile_rule(control_nav_rule(), REGISTRY, objects_for("o1"))
        ok, witness = evaluate_condition(compiled, ledger)
        assert ok
        assert witness == {"a": "s1", "b": "s2"}

    def test_offline_everywhere(self):
        ledger = ledger_with([make_session("s1"), make_session("s2", device_id="d2")])
        compiled = compile_rule(control_nav_rule(), REGISTRY, objects_for("o1"))
        assert evaluate_condition(compiled, ledger) == (False, None)

    def test_different_devices_do_not_satisfy_same_device(self):
        ledger = ledger_with(
            [make_session("s1", device_id="d1"), make_session("s2", device_id="d2")],
            online=[("o1", "s1"), ("o1", "s2")],
        )
        compiled = compile_rule(control_nav_rule(), REGISTRY, objects_for("o1"))
        assert evaluate_condition(compiled, ledger)[0] is False

    def test_witness_is_lexicographically_smallest(self):
        ledger = ledger_with(
            [make_session(s, device_id="d1") for s in ("s1", "s2", "s3")],
            online=[("o1", "s1"), ("o1", "s2"), ("o1", "s3")],
        )
        compiled = compile_rule(control_nav_rule(), REGISTRY, objects_for("o1"))
        assert evaluate_condition(compiled, ledger)[1] == {"a": "s1", "b": "s2"}

    def test_random_conditions_match_bruteforce_oracle(self):
        # oracle: exhaustive enumeration of slot->session assignments
        rng = random.Random(77)
        for _ in range(300):
            rule, ledger, objects = _random_instance(rng)
            compiled = compile_rule(rule, REGISTRY, objects)
            got = evaluate_condition(compiled, ledger)
            assert got == _bruteforce_evaluate(compiled, ledger)


def _random_instance(rng):
    n_sessions = rng.randrange(1, 5)
    devices = [f"d{i}" for i in range(1, 3)]
    sessions = [
        make_session(
            f"s{i}",
            device_id=rng.choice(devices),
            kind=rng.choice([DeviceKind.DESKTOP, DeviceKind.MOBILE]),
        )
        for i in range(1, n_sessions + 1)
    ]
    object_ids = [f"o{i}" for i in range(1, rng.randrange(2, 4))]
    online = [
        (oid, info.session_id)
        for oid in object_ids
        for info in sessions
        if rng.random() < 0.5
    ]
    ledger = ledger_with(sessions, online=online)
    slots = {}
    names = ["a", "b", "c"][: rng.randrange(1, 4)]
    for i, name in enumerate(names):
        choices = [AnySessionOfUser(), OnDevice(rng.choice(devices)),
                   OfDeviceKind(rng.choice([DeviceKind.DESKTOP, DeviceKind.MOBILE])),
                   ExactSession(rng.choice(sessions).session_id)]
        if i > 0:
            choices.append(SecondSessionSameDevice(of=names[rng.randrange(i)]))
        slots[name] = rng.choice(choices)
    predicates = []
    for _ in range(rng.randrange(1, 4)):
        kind = rng.randrange(3)
        if kind == 0:
            predicates.append(ObjectOnlineIn(rng.choice(object_ids), rng.choice(names)))
        elif kind == 1:
            predicates.append(ObjectOfflineIn(rng.choice(object_ids), rng.choice(names)))
        else:
            predicates.append(SessionsSameDevice(rng.choice(names), rng.choice(names)))
    rule = Rule("r1", "u1", slots, tuple(predicates),
                (RuleAction("MirrorContent", {"object": BoundValue.object(object_ids[0])}),))
    return rule, ledger, objects_for(*object_ids)


def _bruteforce_evaluate(compiled: CompiledRule, ledger: PresenceLedger):
    """Independent reference: try every assignment tuple in lexicographic order."""
    rule = compiled.rule
    sessions = ledger.sessions_of(rule.owner)
    ids = [info.session_id for info in sessions]
    by_id = {info.session_id: info for info in sessions}

    def selector_admits(name, sid, assignment):
        selector = rule.selectors[name]
        info = by_id[sid]
        if isinstance(selector, ExactSession):
            return sid == selector.session_id
        if isinstance(selector, OnDevice):
            return info.device.device_id == selector.device_id
        if isinstance(selector, OfDeviceKind):
            return info.device.kind is selector.kind
        if isinstance(selector, SecondSessionSameDevice):
            other = by_id[assignment[selector.of]]
            return sid != other.session_id and info.device.device_id == other.device.device_id
        return True

    def predicate_holds(pred, assignment):
        if isinstance(pred, ObjectOnlineIn):
            return ledger.is_online(pred.object_id, assignment[pred.selector])
        if isinstance(pred, ObjectOfflineIn):
            return not ledger.is_online(pred.object_id, assignment[pred.selector])
        a, b = by_id[assignment[pred.a]], by_id[assignment[pred.b]]
        return a.session_id != b.session_id and a.device.device_id == b.device.device_id

    if not ids and compiled.slots:
        return False, None
    for combo in itertools.product(ids, repeat=len(compiled.slots)):
        assignment = dict(zip(compiled.slots, combo))
        if not all(selector_admits(n, s, assignment) for n, s in assignment.items()):
            continue
        if all(predicate_holds(p, assignment) for p in rule.condition):
            return True, assignment
    return False, None


class TestEngine:
    def _setup(self):
        ledger = ledger_with(
            [make_session("s1", device_id="d1"), make_session("s2", device_id="d1")]
        )
        compiled = compile_rule(control_nav_rule(), REGISTRY, objects_for("o1"))
        return RuleEngine(), compiled, ledger

    def _online(self, ledger, oid, sid, seq):
        records = dict(ledger.records)
        records[(oid, sid)] = PresenceRecord(oid, sid, PresenceState.ONLINE, seq)
        return PresenceLedger(records=records, directory=ledger.directory)

    def test_fires_once_on_edge_and_not_again(self):
        engine, compiled, ledger = self._setup()
        assert engine.sweep([compiled], ledger) == []
        ledger = self._online(ledger, "o1", "s1", 1)
        assert engine.sweep([compiled], ledger) == []
        ledger = self._online(ledger, "o1", "s2", 1)
        firings = engine.sweep([compiled], ledger)
        assert [f.rule.rule_id for f in firings] == ["r1"]
        # ten more sweeps with the condition still true: no re-fire
        for seq in range(2, 12):
            ledger = self._online(ledger, "o1", "s1", seq)
            assert engine.sweep([compiled], ledger) == []

    def test_refires_after_condition_drops(self):
        engine, compiled, ledger = self._setup()
        up = self._online(self._online(ledger, "o1", "s1", 1), "o1", "s2", 1)
        assert len(engine.sweep([compiled], up)) == 1
        assert engine.sweep([compiled], ledger.without_session("s2").with_session(make_session("s2", device_id="d1"))) == []
        up2 = self._online(self._online(ledger, "o1", "s1", 9), "o1", "s2", 9)
        assert len(engine.sweep([compiled], up2)) == 1

    def test_disabled_rules_never_fire(self):
        engine, _, ledger = self._setup()
        compiled = compile_rule(control_nav_rule(enabled=False), REGISTRY, objects_for("o1"))
        up = self._online(self._online(ledger, "o1", "s1", 1), "o1", "s2", 1)
        assert engine.sweep([compiled], up) == []

    def test_rule_added_while_condition_true_fires_on_arrival(self):
        engine, compiled, ledger = self._setup()
        up = self._online(self._online(ledger, "o1", "s1", 1), "o1", "s2", 1)
        firings = engine.sweep([compiled], up)  # first sweep includes the new rule
        assert len(firings) == 1

    def test_firing_order_follows_creation_order(self):
        engine, _, ledger = self._setup()
        r1 = compile_rule(control_nav_rule(rule_id="r1"), REGISTRY, objects_for("o1"))
        r2 = compile_rule(control_nav_rule(rule_id="r2"), REGISTRY, objects_for("o1"))
        up = self._online(self._online(ledger, "o1", "s1", 1), "o1", "s2", 1)
        assert [f.rule.rule_id for f in engine.sweep([r1, r2], up)] == ["r1", "r2"]

    def test_witness_substitution_in_action_bindings(self):
        engine, compiled, ledger = self._setup()
        up = self._online(self._online(ledger, "o1", "s1", 1), "o1", "s2", 1)
        firing = engine.sweep([compiled], up)[0]
        bindings = resolve_action_bindings(firing.rule.actions[0], firing.witness)
        assert bindings["controlsFrom"] == BoundValue.session("s2")
        assert bindings["controlsIn"] == BoundValue.session("s1")

    def test_evaluation_does_not_mutate_ledger(self):
        engine, compiled, ledger = self._setup()
        up = self._online(ledger, "o1", "s1", 1)
        before = dict(up.records)
        engine.sweep([compiled], up)
        assert up.records == before

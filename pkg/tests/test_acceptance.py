"""Acceptance suite: the headless end-to-end criteria, one test per criterion.

Each test prints one PASS/FAIL line. Budgets are asserted where stated:
the single redirect run under 1 s, the full 4-scenario x 100-seed sweep
under 60 s. Golden traces live in tests/golden/ and are regenerated with
`duihub run <scenario> --seed 1 --trace <golden>`.
"""

import itertools
import json
import random
import time
from pathlib import Path

import pytest

from duihub.behaviours import BoundValue, builtin_registry
from duihub.commands import CommandAction
from duihub.hub import Hub
from duihub.model import (
    DeviceKind,
    PresenceLedger,
    PresenceRecord,
    PresenceState,
    apply_presence_update,
)
from duihub.rules import (
    AnySessionOfUser,
    ObjectOnlineIn,
    Rule,
    RuleAction,
    RuleEngine,
    compile_rule,
)
from duihub.scenario import run_scenario, sweep_interleavings
from duihub import wire

from conftest import ledger_with, make_object, make_session
from test_hub import Client
from test_rules import _bruteforce_evaluate, _random_instance

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
GOLDEN = ROOT / "tests" / "golden"


def _verdict(name: str, check) -> None:
    try:
        check()
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def _scenario(name: str) -> str:
    return (SCENARIOS / f"{name}.scenario").read_text(encoding="utf-8")


def test_redirected_click_lands_exactly_once():
    def check():
        started = time.monotonic()
        world = run_scenario(_scenario("redirect_two_displays"), seed=1)
        try:
            elapsed = time.monotonic() - started
            replays = {
                alias: len(session.replays) for alias, session in world.sessions.items()
            }
            assert replays == {"A": 0, "B": 1}, replays
            golden = json.loads((GOLDEN / "redirect_two_displays.trace.json").read_text())
            assert world.trace_document() == golden, "trace diverged from golden"
            assert elapsed < 1.0, f"took {elapsed:.2f}s (budget 1s)"
        finally:
            world.cleanup()

    _verdict("redirect-interaction scenario", check)


def test_five_remote_navigations_drive_the_desktop():
    def check():
        world = run_scenario(_scenario("navigation_control"), seed=1)
        try:
            desktop = world.sessions["B"]
            mobile = world.sessions["A"]
            assert len(desktop.navigations) == 5, desktop.navigations
            assert len(mobile.navigations) == 0
            assert mobile.current_url == "https://video.example/home"
            assert desktop.current_url == "https://video.example/v5"
            golden = json.loads((GOLDEN / "navigation_control.trace.json").read_text())
            assert world.trace_document() == golden, "trace diverged from golden"
        finally:
            world.cleanup()

    _verdict("navigation-control scenario", check)


def test_open_on_device_brings_exactly_the_listed_objects_online():
    def check():
        world = run_scenario(_scenario("open_on_device"), seed=1)
        try:
            opens = [
                a.command
                for session in world.sessions.values()
                for a in session.applied
                if a.command["action"] == "OpenUrlWithObjects"
            ]
            assert len(opens) == 1, opens
            listed = set(opens[0]["args"]["objectIds"])
            target = world.sessions["M"].session_id
            online = {
                key[0]
                for key, rec in world.hub.ledger.records.items()
                if key[1] == target and rec.state is PresenceState.ONLINE
            }
            assert online == listed, (online, listed)
        finally:
            world.cleanup()

    _verdict("open-on-device scenario", check)


def test_rule_fires_once_and_stays_quiet():
    def check():
        world = run_scenario(_scenario("rule_autotrigger"), seed=1)
        try:
            fired = [e for e in world.hub.rule_fire_log]
            assert len(fired) == 1, fired
            controls = [
                a.command
                for session in world.sessions.values()
                for a in session.applied
                if a.command["action"] in ("ShowOnly", "Hide")
            ]
            assert len(controls) == 2, controls  # one Hide + one ShowOnly, once
        finally:
            world.cleanup()

    _verdict("rule edge-trigger scenario", check)


def test_convergence_sweep_100_seeds_per_scenario():
    def check():
        names = [
            "redirect_two_displays",
            "navigation_control",
            "open_on_device",
            "rule_autotrigger",
        ]
        started = time.monotonic()
        for name in names:
            report = sweep_interleavings(_scenario(name), seeds=100, check_duplicates=True)
            assert report.ok, f"{name}: {report.violations[:3]}"
        elapsed = time.monotonic() - started
        assert elapsed < 60.0, f"sweep took {elapsed:.1f}s (budget 60s)"

    _verdict("convergence sweep (4 x 100 seeds, duplicate injection)", check)


def test_rule_engine_matches_naive_interpreter_on_1000_instances():
    def check():
        registry = builtin_registry()
        rng = random.Random(20260810)
        for _ in range(1000):
            _run_equivalence_instance(rng, registry)

    _verdict("rule-engine oracle equivalence (1000 instances)", check)


def _run_equivalence_instance(rng, registry):
    """Engine vs naive interpreter over one random rule set + event sequence."""
    rule_pool = []
    objects = {}
    for _ in range(rng.randrange(1, 4)):
        rule, _, objs = _random_instance(rng)
        objects.update(objs)
        rule_pool.append(rule)
    sessions = {}
    ledger = PresenceLedger()
    engine = RuleEngine()
    compiled_rules = []  # creation order
    naive_state = {}
    engine_log, naive_log = [], []
    seqs = {}

    def naive_sweep():
        for compiled in compiled_rules:
            rule = compiled.rule
            if not rule.enabled:
                naive_state.pop(rule.rule_id, None)
                continue
            value, witness = _bruteforce_evaluate(compiled, ledger)
            if value and not naive_state.get(rule.rule_id, False):
                naive_log.append((rule.rule_id, witness))
            naive_state[rule.rule_id] = value

    for step in range(rng.randrange(4, 15)):
        roll = rng.random()
        if roll < 0.2 and rule_pool:
            rule = rule_pool.pop()
            rule = Rule(
                rule_id=f"r{len(compiled_rules) + 1}",
                owner=rule.owner,
                selectors=rule.selectors,
                condition=rule.condition,
                actions=rule.actions,
                enabled=rule.enabled or rng.random() < 0.5,
            )
            compiled_rules.append(compile_rule(rule, registry, objects))
        elif roll < 0.45 and len(sessions) < 4:
            sid = f"s{len(sessions) + 1}"
            info = make_session(
                sid,
                device_id=rng.choice(["d1", "d2"]),
                kind=rng.choice([DeviceKind.DESKTOP, DeviceKind.MOBILE]),
            )
            sessions[sid] = info
            ledger = ledger.with_session(info)
        elif roll < 0.55 and sessions:
            sid = rng.choice(sorted(sessions))
            del sessions[sid]
            ledger = ledger.without_session(sid)
        elif sessions:
            sid = rng.choice(sorted(sessions))
            oid = rng.choice(sorted(objects))
            seqs[sid] = seqs.get(sid, 0) + 1
            state = rng.choice([PresenceState.ONLINE, PresenceState.OFFLINE])
            ledger, _ = apply_presence_update(
                ledger, PresenceRecord(oid, sid, state, seqs[sid])
            )
        else:
            continue
        for firing in engine.sweep(compiled_rules, ledger):
            engine_log.append((firing.rule.rule_id, firing.witness))
        naive_sweep()
    assert engine_log == naive_log, (engine_log, naive_log)


def test_ledger_permutation_property():
    def check():
        rng = random.Random(99)
        for trial in range(60):
            n_updates = rng.randrange(2, 9)
            keys = [("o1", "sA"), ("o2", "sA"), ("o1", "sB")][: rng.randrange(1, 4)]
            updates = []
            per_key_seqs = {key: rng.sample(range(1, 20), k=8) for key in keys}
            for i in range(n_updates):
                key = rng.choice(keys)
                seq = per_key_seqs[key].pop()  # unique per key: one writer per session
                updates.append(PresenceRecord(
                    key[0], key[1],
                    rng.choice([PresenceState.ONLINE, PresenceState.OFFLINE]),
                    seq,
                ))
            base = ledger_with([make_session("sA"), make_session("sB")])
            if n_updates <= 5:
                orders = itertools.permutations(updates)
            else:
                orders = (rng.sample(updates, k=n_updates) for _ in range(200))
            results = set()
            for order in orders:
                ledger = base
                for record in order:
                    ledger, _ = apply_presence_update(ledger, record)
                results.add(tuple(sorted(ledger.records.items())))
            assert len(results) == 1, f"trial {trial}: {len(results)} distinct outcomes"

    _verdict("ledger permutation property", check)


def test_hub_restart_durability_500_mutations(tmp_path):
    def check():
        store = str(tmp_path / "store.json")
        hub = Hub(store_path=store)
        hub.register_user("max", "pw")
        client = Client(hub, "a")
        client.login()
        rng = random.Random(4711)
        object_ids = []
        rule_ids = []
        for i in range(500):
            roll = rng.random()
            if roll < 0.45 or not object_ids:
                object_ids.append(client.collect(
                    name=f"obj{i}",
                    pattern=f"https://site{i % 6}.example/*",
                    path=f"/{i % 5}",
                ))
            elif roll < 0.6:
                victim = object_ids.pop(rng.randrange(len(object_ids)))
                client.send(wire.DeleteObject(object_id=victim))
                rule_ids = [r for r in rule_ids if r in hub.users["max"].rules]
            elif roll < 0.85:
                target = rng.choice(object_ids)
                client.send(wire.UpdateObject(rule=Rule(
                    rule_id="", owner="max",
                    selectors={"a": AnySessionOfUser()},
                    condition=(ObjectOnlineIn(target, "a"),),
                    actions=(RuleAction("MirrorContent", {"object": BoundValue.object(target)}),),
                )))
                rule_ids.append(client.take(wire.Ack)[-1].result["rule"]["ruleId"])
            elif rule_ids:
                victim = rule_ids.pop(rng.randrange(len(rule_ids)))
                client.send(wire.DeleteObject(rule_id=victim))
        before = hub.state_fingerprint()
        reborn = Hub(store_path=store)
        assert reborn.state_fingerprint() == before

    _verdict("hub restart durability (500 mutations)", check)

import json
from pathlib import Path

import pytest

from duihub.errors import ScenarioError
from duihub.scenario import parse_scenario, run_scenario, sweep_interleavings
from duihub.sim import (
    PageNode,
    VirtualPage,
    blank_page,
    node_from_dict,
    replay_trace,
    resolve_element,
)

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def scenario_text(name: str) -> str:
    return (SCENARIOS / f"{name}.scenario").read_text(encoding="utf-8")


class TestVirtualPages:
    def page(self):
        return VirtualPage(
            url="https://x.example/p",
            root=node_from_dict({
                "tag": "body",
                "children": [
                    {"tag": "div", "id": "toc", "children": [{"tag": "ul"}]},
                    {"tag": "div", "children": [{"tag": "p", "text": "hi"}]},
                ],
            }),
        )

    def test_root_and_child_paths(self):
        page = self.page()
        assert resolve_element(page, "/").tag == "body"
        assert resolve_element(page, "/1/0").text == "hi"
        assert resolve_element(page, "/5") is None

    def test_id_anchor_with_suffix(self):
        page = self.page()
        assert resolve_element(page, "#toc").id == "toc"
        assert resolve_element(page, "#toc/0").tag == "ul"
        assert resolve_element(page, "#nope") is None

    def test_duplicate_ids_resolve_to_nothing(self):
        page = VirtualPage(
            url="https://x.example/p",
            root=PageNode(tag="body", children=[
                PageNode(tag="div", id="dup"), PageNode(tag="div", id="dup"),
            ]),
        )
        assert resolve_element(page, "#dup") is None

    def test_blank_page_has_resolvable_body(self):
        assert resolve_element(blank_page("https://y.example/"), "/").tag == "body"


class TestScenarioRunner:
    def test_empty_script_is_an_empty_run(self):
        world = run_scenario("", seed=1)
        try:
            doc = world.trace_document()
            assert doc["entries"] == []
            assert doc["sessions"] == {}
        finally:
            world.cleanup()

    def test_unknown_step_reports_line(self):
        with pytest.raises(ScenarioError) as err:
            run_scenario("teleport A somewhere", seed=1)
        assert "step 1" in str(err.value)

    def test_same_script_and_seed_give_identical_traces(self):
        # oracle: structural trace equality
        text = scenario_text("redirect_two_displays")
        world_a = run_scenario(text, seed=7)
        world_b = run_scenario(text, seed=7)
        try:
            assert world_a.trace_document() == world_b.trace_document()
        finally:
            world_a.cleanup()
            world_b.cleanup()

    def test_different_seeds_still_satisfy_the_script(self):
        text = scenario_text("navigation_control")
        for seed in (2, 5, 11):
            run_scenario(text, seed=seed).cleanup()

    def test_commands_arrive_per_target_in_hub_order(self):
        # oracle: per-target monotonicity check over the applied logs
        for name in ("navigation_control", "mirror_editing", "open_on_device"):
            world = run_scenario(scenario_text(name), seed=4)
            try:
                for session in world.sessions.values():
                    seqs = [a.seq for a in session.applied]
                    assert seqs == sorted(seqs)
            finally:
                world.cleanup()

    def test_duplicate_delivery_with_dedupe_changes_nothing(self):
        report = sweep_interleavings(scenario_text("redirect_two_displays"), seeds=5)
        assert report.ok

    def test_broken_dedupe_is_detected(self):
        report = sweep_interleavings(
            scenario_text("redirect_two_displays"), seeds=5, fault_break_dedupe=True
        )
        assert len(report.violations) == 5

    def test_single_session_script_is_trivially_convergent(self):
        text = """
user solo pw
start A solo pw Desktop d1
settle
expect converged
"""
        report = sweep_interleavings(text, seeds=5)
        assert report.ok

    def test_presence_churn_from_three_sessions_converges(self):
        # three sessions flapping between two pages; every interleaving must
        # leave all of them with the identical ledger view
        text = """
page p1 https://news.example/front {"tag":"body","children":[{"tag":"div","id":"feed"}]}
page p2 https://news.example/sports {"tag":"body","children":[{"tag":"div","id":"scores"}]}
user max pw
start A max pw Desktop d1
start B max pw Desktop d1
start C max pw Mobile m1
load A p1
load B p2
load C p1
collect A feed #feed Container "Front feed"
collect B scores #scores Container "Score board"
navigate A https://news.example/sports
navigate C https://news.example/sports
navigate B https://news.example/front
navigate A https://news.example/front
settle
expect converged
"""
        report = sweep_interleavings(text, seeds=30)
        assert report.ok, report.violations[:3]


class TestCrashRestart:
    SCRIPT = """
page home https://shop.example/cart {"tag":"body","children":[{"tag":"div","id":"basket","text":"3 items"}]}
user max pw
start A max pw Desktop d1
load A home
collect A basket #basket Container "Basket"
settle
crash
restart
start B max pw Mobile m1
settle
expect objects B 1
expect onlineset B none
"""

    def test_collection_survives_restart_but_presence_does_not(self):
        world = run_scenario(self.SCRIPT, seed=3)
        try:
            reborn = world.sessions["B"]
            assert len(reborn.objects) == 1
            assert world.hub.ledger.records == {}
        finally:
            world.cleanup()

    def test_trace_across_restart_replays(self):
        world = run_scenario(self.SCRIPT, seed=3)
        try:
            doc = world.trace_document()
        finally:
            world.cleanup()
        ok, detail = replay_trace(doc)
        assert ok, detail


class TestReplay:
    def test_each_scenario_replays_bit_exact(self):
        for name in ("redirect_two_displays", "mirror_editing", "rule_autotrigger"):
            world = run_scenario(scenario_text(name), seed=9)
            try:
                doc = world.trace_document()
            finally:
                world.cleanup()
            ok, detail = replay_trace(doc)
            assert ok, f"{name}: {detail}"

    def test_tampered_trace_is_rejected(self):
        world = run_scenario(scenario_text("redirect_two_displays"), seed=2)
        try:
            doc = world.trace_document()
        finally:
            world.cleanup()
        for entry in doc["entries"]:
            frame = entry.get("frame") or {}
            if entry["direction"] == "out" and frame.get("kind") == "Welcome":
                frame["payload"]["token"] = "forged"
                break
        ok, detail = replay_trace(doc)
        assert not ok and "diverged" in detail

"""Two displays, one mailbox: clicks on the left open things on the right.

A rule arms itself when the collected attachment element is online in two
sessions of the same machine, then installs an event redirect. Every click
captured on the source display is replayed exactly once at the target.
"""

from pathlib import Path

from duihub.scenario import run_scenario

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "redirect_two_displays.scenario"


def main() -> None:
    world = run_scenario(SCENARIO.read_text(encoding="utf-8"), seed=1)
    try:
        a, b = world.sessions["A"], world.sessions["B"]
        print("rule firings:", [(e.rule_id, dict(e.witness)) for e in world.hub.rule_fire_log])
        print(f"clicks replayed at B: {len(b.replays)} "
              f"({[e.event_type for e in b.replays]})")
        print(f"clicks replayed at A: {len(a.replays)}")
        print("\nper-session command log (hub order):")
        for alias, session in sorted(world.sessions.items()):
            for applied in session.applied:
                print(f"  {alias} <- seq {applied.seq}: {applied.command['action']}")
    finally:
        world.cleanup()


if __name__ == "__main__":
    main()

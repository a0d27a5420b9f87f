"""Show a collected element in exactly one of three open sessions.

The same dashboard is open on three displays. Invoking "Show only in..."
on the chart object hides it on two displays and keeps it on the chosen
one: the planner turns one invocation into a per-session command list.
"""

from duihub.scenario import run_scenario

SCRIPT = """
page dash https://metrics.example/board {"tag":"body","children":[{"tag":"div","id":"chart","text":"latency p99"},{"tag":"div","id":"alerts"}]}
user ops secret
start LEFT ops secret Desktop wall1 "left wall display"
start MID ops secret Desktop wall2 "middle wall display"
start RIGHT ops secret Desktop wall3 "right wall display"
load LEFT dash
load MID dash
load RIGHT dash
collect LEFT chart #chart Image "Latency chart"
settle
invoke LEFT ShowOnlyIn object=@chart target=$MID
settle
expect visible chart MID true
expect visible chart LEFT false
expect visible chart RIGHT false
"""


def main() -> None:
    world = run_scenario(SCRIPT, seed=1)
    try:
        for alias in ("LEFT", "MID", "RIGHT"):
            session = world.sessions[alias]
            commands = [a.command["action"] for a in session.applied]
            print(f"{alias:<6} applied {commands or ['nothing']}")
        print("\nthe chart now renders only on the middle display; hiding is")
        print("style-level, so presence (element findable) is unchanged:")
        print("  online in:", world.hub.ledger.online_sessions(
            next(iter(world.sessions['LEFT'].objects))))
    finally:
        world.cleanup()


if __name__ == "__main__":
    main()

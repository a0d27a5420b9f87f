"""Push chosen fragments of the current page to another device.

A desktop session has collected three pieces of a dictionary page. "Open
in..." on two of them sends a single open-with-objects command to the
phone, which loads the URL rendering only those two; the ledger then shows
exactly the pushed objects online there, and nothing else.
"""

from pathlib import Path

from duihub.scenario import run_scenario

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "open_on_device.scenario"


def main() -> None:
    world = run_scenario(SCENARIO.read_text(encoding="utf-8"), seed=1)
    try:
        phone = world.sessions["M"]
        print("command received by the phone:")
        for applied in phone.applied:
            print(f"  seq {applied.seq}: {applied.command['action']} "
                  f"{applied.command['args'].get('objectIds')}")
        print("phone url        :", phone.current_url)
        print("restricted render:", sorted(phone.open_restriction or ()))
        online = sorted(
            key[0] for key, rec in world.hub.ledger.records.items()
            if key[1] == phone.session_id and rec.state.value == "Online"
        )
        print("online at phone  :", online)
    finally:
        world.cleanup()


if __name__ == "__main__":
    main()

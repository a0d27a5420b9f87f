"""Collect a page element on one device and watch presence propagate.

Two sessions of one user: a desktop reading an article and a phone sitting
on its start page. The desktop collects the article's index; both sessions
immediately share one view of the collection, and the presence ledger
shows where the index is actually live.
"""

from duihub.scenario import run_scenario

SCRIPT = """
page article https://en.wikipedia.org/wiki/Toulouse {"tag":"body","children":[{"tag":"div","id":"toc","text":"1 History, 2 Climate"},{"tag":"div","id":"content"}]}
user ana secret
start DESK ana secret Desktop workstation "office desktop"
start PHONE ana secret Mobile xt1021 "pocket phone"
load DESK article
collect DESK idx #toc Container "Wikipedia Index" pattern=https://en.wikipedia.org/wiki/*
settle
"""


def main() -> None:
    world = run_scenario(SCRIPT, seed=1)
    try:
        desk, phone = world.sessions["DESK"], world.sessions["PHONE"]
        print("collection on the desktop :", [o.name for o in desk.objects.values()])
        print("collection on the phone   :", [o.name for o in phone.objects.values()])
        object_id = next(iter(desk.objects))
        print("\npresence ledger (hub view):")
        for (oid, sid), rec in sorted(world.hub.ledger.records.items()):
            print(f"  object {oid} in session {sid}: {rec.state.value} (seq {rec.seq})")
        print("\nthe index is online where its URL pattern matches and the")
        print("element resolves; the phone, on a blank page, holds the same")
        print("collection but no online record:",
              world.hub.ledger.online_sessions(object_id))
    finally:
        world.cleanup()


if __name__ == "__main__":
    main()

"""Keep a text element identical across devices while editing anywhere.

A blog editor has no mobile sync of its own. Mirroring the post body makes
every edit flow through the hub to the other sessions; when both ends edit
at once, everyone converges on the hub-ordered last write.
"""

from pathlib import Path

from duihub.scenario import run_scenario

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "mirror_editing.scenario"


def main() -> None:
    world = run_scenario(SCENARIO.read_text(encoding="utf-8"), seed=1)
    try:
        desk, phone = world.sessions["A"], world.sessions["M"]
        object_id = next(iter(desk.objects))
        print("desktop text:", desk.element_text(object_id))
        print("phone text  :", phone.element_text(object_id))
        print("\nmutations applied at the phone (hub order):")
        for m in phone.mutations_applied:
            print(f"  originSeq {m.origin_seq}: {m.new_text!r}")
        print("\nracing edits ('alpha' vs 'beta') ended identical on both ends;")
        print("re-run with another --seed to watch the other writer win.")
    finally:
        world.cleanup()


if __name__ == "__main__":
    main()

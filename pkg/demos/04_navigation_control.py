"""A phone as a remote control for a desktop browser.

The whole video page is collected as a single Page-stereotype object. When
it is online on a mobile and a desktop session at once, the rule hides it
at the desktop, shows only it at the phone with navigation capture, and
routes every captured navigation intent to the desktop. The phone's own
URL never changes.
"""

from pathlib import Path

from duihub.scenario import run_scenario

SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "navigation_control.scenario"


def main() -> None:
    world = run_scenario(SCENARIO.read_text(encoding="utf-8"), seed=1)
    try:
        phone, desktop = world.sessions["A"], world.sessions["B"]
        print("navigations applied at the desktop:")
        for url in desktop.navigations:
            print("  ->", url)
        print("desktop ends at :", desktop.current_url)
        print("phone stays at  :", phone.current_url)
        print("captured objects at the phone:", sorted(phone.capture_nav))
    finally:
        world.cleanup()


if __name__ == "__main__":
    main()

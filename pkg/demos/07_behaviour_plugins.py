"""The behaviour framework: discoverable parameters, planning, sharing.

A behaviour descriptor declares its parameter schema so any client can
render a configuration form for it, and a planner that maps bindings plus
a presence snapshot to per-session commands. Community behaviours are
uploaded as opaque scripts: stored and served by the hub, never evaluated
there.
"""

from duihub import wire
from duihub.behaviours import (
    BehaviourDescriptor,
    BoundValue,
    ParamKind,
    ParameterSpec,
    PlanContext,
    builtin_registry,
)
from duihub.hub import Hub
from duihub.model import (
    DeviceInfo,
    DeviceKind,
    Locator,
    PresenceLedger,
    PresenceRecord,
    PresenceState,
    SessionInfo,
    Stereotype,
    UIObject,
)


def show_discovery() -> None:
    registry = builtin_registry()
    print("behaviours applicable to a Video object:")
    for descriptor in registry.lookup_applicable(Stereotype.VIDEO):
        params = ", ".join(
            f"{p.name}:{p.kind.value}{'*' if p.required else ''}" for p in descriptor.params
        )
        scope = "agnostic" if descriptor.applicability is None else "video-only"
        print(f"  {descriptor.display_name:<28} [{scope}] ({params})")


def show_planning() -> None:
    video = UIObject(
        object_id="o1", owner="max", name="Player", tags=frozenset(),
        stereotype=Stereotype.VIDEO,
        locator=Locator("https://video.example/*", "#player"),
    )
    ledger = PresenceLedger()
    for sid, kind in (("s1", DeviceKind.DESKTOP), ("s2", DeviceKind.MOBILE)):
        ledger = ledger.with_session(SessionInfo(sid, "max", DeviceInfo(f"d-{sid}", kind, ""), ""))
    records = dict(ledger.records)
    records[("o1", "s2")] = PresenceRecord("o1", "s2", PresenceState.ONLINE, 1)
    ledger = PresenceLedger(records=records, directory=ledger.directory)

    descriptor = builtin_registry().lookup("PlayVideoOn")
    plan = descriptor.planner(
        {
            "object": BoundValue.object("o1"),
            "verb": BoundValue.enum("Play"),
            "target": BoundValue.session("s2"),
        },
        PlanContext(ledger=ledger, objects={"o1": video}, user="max"),
    )
    print("\nplanning PlayVideoOn(Play) at the mobile session:")
    for command in plan.commands:
        print(f"  -> {command.target}: {command.action.value} {command.verb.value}")


def show_repository() -> None:
    hub = Hub()
    hub.register_user("dev", "pw")
    hub.register_user("max", "pw")
    frames: dict[str, list] = {"dev": [], "max": []}

    def client(name):
        conn = hub.connect(lambda data, n=name: frames[n].append(wire.decode(data)))
        hub.receive(conn, wire.encode(wire.WireMessage(
            f"{name}-hello", wire.Hello(name, "pw", DeviceInfo("d", DeviceKind.DESKTOP, "")))))
        return conn

    dev, max_ = client("dev"), client("max")
    meta = BehaviourDescriptor(
        behaviour_id="FocusFollowsScroll",
        display_name="Focus follows scroll",
        params=(ParameterSpec("object", ParamKind.OBJECT_REF),
                ParameterSpec("target", ParamKind.SESSION_REF)),
    )
    hub.receive(dev, wire.encode(wire.WireMessage("dev-up", wire.UploadBehaviour(
        meta=meta, script="export function run(ctx) { /* … */ }", public=True,
        reviews_enabled=True, bug_tracking_enabled=False,
    ))))
    hub.receive(max_, wire.encode(wire.WireMessage("max-list", wire.FetchBehaviour())))
    listing = [m.payload for m in frames["max"] if isinstance(m.payload, wire.Ack)][-1]
    print("\nrepository listing seen by another user:")
    for entry in listing.result["behaviours"]:
        flags = ", ".join(k for k in ("public", "reviewsEnabled", "bugTrackingEnabled") if entry[k])
        print(f"  {entry['meta']['displayName']} by {entry['owner']} ({flags})")
    print("the script blob is fetched verbatim and never evaluated hub-side.")


if __name__ == "__main__":
    show_discovery()
    show_planning()
    show_repository()

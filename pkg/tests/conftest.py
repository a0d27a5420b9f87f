import random

import pytest

from duihub.behaviours import BoundValue
from duihub.commands import (
    ContentMutationDescriptor,
    DomEventDescriptor,
    hide,
)
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
from duihub import wire
from duihub.rules import (
    AnySessionOfUser,
    ObjectOnlineIn,
    Rule,
    RuleAction,
)


def make_locator(pattern="https://en.wikipedia.org/wiki/*", path="#toc"):
    return Locator(url_pattern=pattern, element_path=path)


def make_object(object_id="o1", owner="u1", stereotype=Stereotype.CONTAINER,
                name="Wikipedia Index", pattern="https://en.wikipedia.org/wiki/*", path="#toc"):
    return UIObject(
        object_id=object_id,
        owner=owner,
        name=name,
        tags=frozenset(),
        stereotype=stereotype,
        locator=make_locator(pattern, path),
        enabled_behaviours=frozenset(),
        created_at=1,
    )


def make_session(session_id="s1", user="u1", device_id="d1",
                 kind=DeviceKind.DESKTOP, url="https://en.wikipedia.org/wiki/Toulouse"):
    return SessionInfo(
        session_id=session_id,
        user_id=user,
        device=DeviceInfo(device_id=device_id, kind=kind, label=device_id),
        current_url=url,
    )


def ledger_with(sessions, online=()):
    """Ledger with the given sessions; online = [(object_id, session_id), ...]."""
    ledger = PresenceLedger()
    for info in sessions:
        ledger = ledger.with_session(info)
    records = dict(ledger.records)
    for i, (oid, sid) in enumerate(online, start=1):
        records[(oid, sid)] = PresenceRecord(oid, sid, PresenceState.ONLINE, i)
    return PresenceLedger(records=records, directory=ledger.directory)


# --- random wire message generator (shared by round-trip and fuzz tests) ----

def random_message(rng: random.Random) -> wire.WireMessage:
    def ident(prefix):
        return f"{prefix}{rng.randrange(1, 999)}"

    device = DeviceInfo(ident("d"), rng.choice(list(DeviceKind)), "lbl")
    obj = UIObject(
        object_id=ident("o"),
        owner=ident("u"),
        name=f"name-{rng.randrange(99)}",
        tags=frozenset(rng.sample(["a", "b", "c", "d"], k=rng.randrange(3))),
        stereotype=rng.choice(list(Stereotype)),
        locator=Locator(f"https://site{rng.randrange(9)}.example/*", "/0"),
        enabled_behaviours=frozenset(),
        created_at=rng.randrange(100),
    )
    record = PresenceRecord(ident("o"), ident("s"),
                            rng.choice(list(PresenceState)), rng.randrange(1, 50))
    info = SessionInfo(ident("s"), ident("u"), device, "https://x.example/p")
    event = DomEventDescriptor(ident("o"), rng.choice(["click", "input"]), "", None)
    mutation = ContentMutationDescriptor(ident("o"), "", new_text="t",
                                         origin_seq=rng.randrange(1, 9))
    rule = Rule(
        rule_id=ident("r"),
        owner=ident("u"),
        selectors={"a": AnySessionOfUser()},
        condition=(ObjectOnlineIn(ident("o"), "a"),),
        actions=(RuleAction("ShowOnlyIn", {"object": BoundValue.object(ident("o")),
                                           "target": BoundValue.selector("a")}),),
        enabled=rng.random() < 0.5,
    )
    payloads = [
        wire.Hello(ident("u"), "pw", device),
        wire.Welcome(ident("s"), "tok", objects=(obj,), rules=(rule,),
                     ledger=(record,), sessions=(info,)),
        wire.CollectObject(obj.locator, obj.stereotype, obj.name, ("t1",)),
        wire.UpdateObject(object=obj),
        wire.UpdateObject(rule=rule),
        wire.DeleteObject(object_id=ident("o")),
        wire.DeleteObject(rule_id=ident("r")),
        wire.PresenceUpdate(scope="object", record=record),
        wire.PresenceUpdate(scope="session", event="joined", session=info),
        wire.InvokeBehaviour("ShowOnlyIn", {"object": BoundValue.object(ident("o")),
                                            "target": BoundValue.session(ident("s"))}),
        wire.SessionCommandMsg(command=hide(ident("s"), ident("o"))),
        wire.DomEvent(event),
        wire.NavigationCommand(ident("o"), "https://x.example/n"),
        wire.ContentMutation(mutation),
        wire.FetchBehaviour(behaviour_id=None),
        wire.Ack(in_reply_to=ident("m"), result={"n": rng.randrange(9)}),
        wire.Error(code="UnknownObject", message="nope", in_reply_to=ident("m")),
    ]
    payload = rng.choice(payloads)
    return wire.WireMessage(
        msg_id=ident("m"),
        payload=payload,
        server_seq=rng.randrange(1, 999) if rng.random() < 0.4 else None,
    )


@pytest.fixture
def rng():
    return random.Random(20260810)

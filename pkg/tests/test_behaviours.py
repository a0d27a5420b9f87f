import random

import pytest

from duihub.behaviours import (
    BehaviourDescriptor,
    BehaviourRegistry,
    BoundValue,
    MirrorRoute,
    NavigationRoute,
    ParamKind,
    ParameterSpec,
    PlanContext,
    RedirectRoute,
    builtin_registry,
    plan_control_navigation,
    plan_media_control,
    plan_mirror_content,
    plan_open_in,
    plan_redirect_interaction,
    plan_remote_effect,
    plan_show_only_in,
    validate_bindings,
)
from duihub.commands import CommandAction, EffectKind, MediaVerb
from duihub.errors import (
    DuplicateId,
    InvalidParamSpec,
    KindMismatch,
    MissingParam,
    MixedOrigins,
    NoLiveSession,
    ObjectOffline,
    SameSession,
    StereotypeMismatch,
    UnknownSession,
)
from duihub.model import DeviceKind, Stereotype

from conftest import ledger_with, make_object, make_session


def ctx_with(sessions, online, objects):
    return PlanContext(
        ledger=ledger_with(sessions, online=online),
        objects={o.object_id: o for o in objects},
        user="u1",
    )


class TestRegistry:
    def test_register_then_lookup(self):
        registry = BehaviourRegistry()
        d = BehaviourDescriptor("Fresh", "Fresh...", params=())
        registry.register(d)
        assert registry.lookup("Fresh") is d

    def test_duplicate_id(self):
        registry = BehaviourRegistry()
        registry.register(BehaviourDescriptor("Dup", "x"))
        with pytest.raises(DuplicateId):
            registry.register(BehaviourDescriptor("Dup", "y"))

    def test_invalid_param_specs(self):
        with pytest.raises(InvalidParamSpec):
            BehaviourRegistry().register(
                BehaviourDescriptor("B", "b", params=(
                    ParameterSpec("x", ParamKind.TEXT), ParameterSpec("x", ParamKind.TEXT),
                ))
            )
        with pytest.raises(InvalidParamSpec):
            BehaviourRegistry().register(
                BehaviourDescriptor("C", "c", params=(ParameterSpec("e", ParamKind.ENUM),))
            )

    def test_video_menu_includes_play_video(self):
        names = [d.behaviour_id for d in builtin_registry().lookup_applicable(Stereotype.VIDEO)]
        assert "PlayVideoOn" in names

    def test_form_menu_excludes_play_video(self):
        names = [d.behaviour_id for d in builtin_registry().lookup_applicable(Stereotype.FORM)]
        assert "PlayVideoOn" not in names

    def test_lookup_applicable_matches_linear_filter(self):
        # oracle: brute-force filter over the registry in registration order
        rng = random.Random(5)
        registry = BehaviourRegistry()
        for i in range(40):
            applicability = None
            if rng.random() < 0.5:
                applicability = frozenset(rng.sample(list(Stereotype), k=rng.randrange(1, 4)))
            registry.register(BehaviourDescriptor(f"B{i}", f"b{i}", applicability=applicability))
        for stereotype in Stereotype:
            expected = [d for d in registry.all()
                        if d.applicability is None or stereotype in d.applicability]
            assert registry.lookup_applicable(stereotype) == expected


class TestValidateBindings:
    def descriptor(self):
        return builtin_registry().lookup("ControlNavigation")

    def test_control_navigation_ok(self):
        validate_bindings(self.descriptor(), {
            "controlsBy": BoundValue.object("o1"),
            "controlsFrom": BoundValue.session("s1"),
        })

    def test_missing_param(self):
        with pytest.raises(MissingParam):
            validate_bindings(self.descriptor(), {"controlsBy": BoundValue.object("o1")})

    def test_kind_mismatch(self):
        with pytest.raises(KindMismatch):
            validate_bindings(self.descriptor(), {
                "controlsBy": BoundValue.object("o1"),
                "controlsFrom": BoundValue.text("not-a-session"),
            })

    def test_undeclared_param_rejected(self):
        with pytest.raises(KindMismatch):
            validate_bindings(self.descriptor(), {
                "controlsBy": BoundValue.object("o1"),
                "controlsFrom": BoundValue.session("s1"),
                "mystery": BoundValue.text("x"),
            })

    def test_fuzzed_subsets_match_inclusion_oracle(self):
        # oracle: accepted iff bound names cover the required set (with right
        # kinds); we fuzz over subsets and kind choices
        rng = random.Random(11)
        descriptor = BehaviourDescriptor("Fuzz", "f", params=(
            ParameterSpec("a", ParamKind.SESSION_REF),
            ParameterSpec("b", ParamKind.OBJECT_REF),
            ParameterSpec("c", ParamKind.TEXT, required=False),
        ))
        makers = {
            "session": BoundValue.session, "object": BoundValue.object,
            "text": BoundValue.text,
        }
        right_kind = {"a": "session", "b": "object", "c": "text"}
        for _ in range(300):
            chosen = {n for n in "abc" if rng.random() < 0.6}
            kinds = {n: rng.choice(list(makers)) for n in chosen}
            bindings = {n: makers[kinds[n]]("v1") for n in chosen}
            should_pass = {"a", "b"} <= chosen and all(kinds[n] == right_kind[n] for n in chosen)
            if should_pass:
                validate_bindings(descriptor, bindings)
            else:
                with pytest.raises((MissingParam, KindMismatch)):
                    validate_bindings(descriptor, bindings)

    def test_enum_options_enforced(self):
        descriptor = builtin_registry().lookup("RemoteEffect")
        with pytest.raises(KindMismatch):
            validate_bindings(descriptor, {
                "object": BoundValue.object("o1"),
                "effect": BoundValue.enum("Sparkle"),
                "target": BoundValue.session("s1"),
            })


class TestShowOnlyIn:
    def test_hide_everywhere_else_show_at_target(self):
        obj = make_object()
        ctx = ctx_with(
            [make_session(s) for s in ("sA", "sB", "sC")],
            online=[("o1", "sA"), ("o1", "sB"), ("o1", "sC")],
            objects=[obj],
        )
        plan = plan_show_only_in({"object": BoundValue.object("o1"),
                                  "target": BoundValue.session("sB")}, ctx)
        got = [(c.action, c.target) for c in plan.commands]
        assert got == [(CommandAction.HIDE, "sA"), (CommandAction.HIDE, "sC"),
                       (CommandAction.SHOW, "sB")]

    def test_online_only_at_target_means_no_hides(self):
        ctx = ctx_with([make_session("sA")], online=[("o1", "sA")], objects=[make_object()])
        plan = plan_show_only_in({"object": BoundValue.object("o1"),
                                  "target": BoundValue.session("sA")}, ctx)
        assert [(c.action, c.target) for c in plan.commands] == [(CommandAction.SHOW, "sA")]

    def test_unknown_target_session(self):
        ctx = ctx_with([make_session("sA")], online=[("o1", "sA")], objects=[make_object()])
        with pytest.raises(UnknownSession):
            plan_show_only_in({"object": BoundValue.object("o1"),
                               "target": BoundValue.session("sZ")}, ctx)

    def test_random_ledgers_match_set_oracle(self):
        # oracle: Hide targets = online \ {target}; Show targets = {target}
        rng = random.Random(6)
        for _ in range(200):
            session_ids = [f"s{i}" for i in range(1, rng.randrange(2, 6))]
            online = [sid for sid in session_ids if rng.random() < 0.6]
            target = rng.choice(session_ids)
            ctx = ctx_with(
                [make_session(s) for s in session_ids],
                online=[("o1", s) for s in online],
                objects=[make_object()],
            )
            plan = plan_show_only_in({"object": BoundValue.object("o1"),
                                      "target": BoundValue.session(target)}, ctx)
            hides = {c.target for c in plan.commands if c.action is CommandAction.HIDE}
            shows = [c.target for c in plan.commands if c.action is CommandAction.SHOW]
            assert hides == set(online) - {target}
            assert shows == [target]
            # partition invariant: each online session gets exactly one command
            per_session = [c.target for c in plan.commands]
            assert len(per_session) == len(set(per_session))

    def test_planner_is_deterministic(self):
        ctx = ctx_with(
            [make_session(s) for s in ("sA", "sB", "sC")],
            online=[("o1", "sA"), ("o1", "sC")],
            objects=[make_object()],
        )
        bindings = {"object": BoundValue.object("o1"), "target": BoundValue.session("sA")}
        assert plan_show_only_in(bindings, ctx) == plan_show_only_in(bindings, ctx)


class TestRedirectAndNavigation:
    def test_redirect_installs_route(self):
        ctx = ctx_with([make_session("sA"), make_session("sB")],
                       online=[("o1", "sA"), ("o1", "sB")], objects=[make_object()])
        plan = plan_redirect_interaction({
            "object": BoundValue.object("o1"),
            "source": BoundValue.session("sA"),
            "target": BoundValue.session("sB"),
        }, ctx)
        assert plan.routes == (RedirectRoute("o1", "sA", "sB"),)

    def test_redirect_same_session(self):
        ctx = ctx_with([make_session("sA")], online=[("o1", "sA")], objects=[make_object()])
        with pytest.raises(SameSession):
            plan_redirect_interaction({
                "object": BoundValue.object("o1"),
                "source": BoundValue.session("sA"),
                "target": BoundValue.session("sA"),
            }, ctx)

    def test_control_navigation_plan(self):
        ctx = ctx_with(
            [make_session("sA", kind=DeviceKind.MOBILE, device_id="m1"), make_session("sB")],
            online=[("o1", "sA"), ("o1", "sB")],
            objects=[make_object(stereotype=Stereotype.PAGE, path="/")],
        )
        plan = plan_control_navigation({
            "controlsBy": BoundValue.object("o1"),
            "controlsFrom": BoundValue.session("sA"),
        }, ctx)
        actions = [(c.action, c.target) for c in plan.commands]
        assert (CommandAction.HIDE, "sB") in actions
        show_only = [c for c in plan.commands if c.action is CommandAction.SHOW_ONLY]
        assert show_only[0].target == "sA" and show_only[0].capture_navigation
        assert plan.routes == (NavigationRoute("o1", "sA", "sB"),)

    def test_control_navigation_object_offline(self):
        ctx = ctx_with([make_session("sA"), make_session("sB")], online=[], objects=[make_object()])
        with pytest.raises(ObjectOffline):
            plan_control_navigation({
                "controlsBy": BoundValue.object("o1"),
                "controlsFrom": BoundValue.session("sA"),
            }, ctx)


class TestOpenIn:
    def _objects(self):
        return [
            make_object("o1", pattern="https://linguee.example/search", path="/0"),
            make_object("o2", pattern="https://linguee.example/search", path="/1"),
        ]

    def test_one_command_to_one_device_session(self):
        ctx = ctx_with(
            [make_session("sA"), make_session("sM", device_id="xt", kind=DeviceKind.MOBILE),
             make_session("sN", device_id="xt", kind=DeviceKind.MOBILE)],
            online=[("o1", "sA")], objects=self._objects(),
        )
        plan = plan_open_in({
            "objects": BoundValue.objects(["o1", "o2"]),
            "device": BoundValue.device("xt"),
            "url": BoundValue.text("https://linguee.example/search"),
        }, ctx)
        assert len(plan.commands) == 1
        cmd = plan.commands[0]
        assert cmd.action is CommandAction.OPEN_URL_WITH_OBJECTS
        assert cmd.target == "sM"  # deterministic: lowest live session of the device
        assert cmd.object_ids == ("o1", "o2")

    def test_mixed_origins(self):
        objects = self._objects() + [make_object("o3", pattern="https://blogger.example/edit")]
        ctx = ctx_with([make_session("sM", device_id="xt")], online=[], objects=objects)
        with pytest.raises(MixedOrigins):
            plan_open_in({
                "objects": BoundValue.objects(["o1", "o3"]),
                "device": BoundValue.device("xt"),
                "url": BoundValue.text("https://linguee.example/search"),
            }, ctx)

    def test_no_live_session(self):
        ctx = ctx_with([make_session("sA", device_id="desk")], online=[], objects=self._objects())
        with pytest.raises(NoLiveSession):
            plan_open_in({
                "objects": BoundValue.objects(["o1"]),
                "device": BoundValue.device("xt"),
                "url": BoundValue.text("https://linguee.example/search"),
            }, ctx)

    def test_empty_object_list_rejected_by_binding_validation(self):
        with pytest.raises(KindMismatch):
            validate_bindings(builtin_registry().lookup("OpenIn"), {
                "objects": BoundValue("object", ()),
                "device": BoundValue.device("xt"),
            })


class TestMirrorAndEffects:
    def test_mirror_route(self):
        ctx = ctx_with([make_session("sA")], online=[("o1", "sA")], objects=[make_object()])
        plan = plan_mirror_content({"object": BoundValue.object("o1")}, ctx)
        assert plan.commands == ()
        assert plan.routes == (MirrorRoute("o1"),)

    def test_mirror_needs_an_online_session(self):
        ctx = ctx_with([make_session("sA")], online=[], objects=[make_object()])
        with pytest.raises(ObjectOffline):
            plan_mirror_content({"object": BoundValue.object("o1")}, ctx)

    def test_every_effect_maps_to_exactly_one_command(self):
        # oracle: exhaustive loop over the effect enumeration
        ctx = ctx_with([make_session("sA")], online=[("o1", "sA")], objects=[make_object()])
        for effect in EffectKind:
            plan = plan_remote_effect({
                "object": BoundValue.object("o1"),
                "effect": BoundValue.enum(effect.value),
                "target": BoundValue.session("sA"),
            }, ctx)
            assert [c.action for c in plan.commands] == [CommandAction.APPLY_EFFECT]
            assert plan.commands[0].effect is effect

    def test_effect_needs_object_online_at_target(self):
        ctx = ctx_with([make_session("sA"), make_session("sB")],
                       online=[("o1", "sA")], objects=[make_object()])
        with pytest.raises(ObjectOffline):
            plan_remote_effect({
                "object": BoundValue.object("o1"),
                "effect": BoundValue.enum("Highlight"),
                "target": BoundValue.session("sB"),
            }, ctx)


class TestMediaControl:
    def test_play_on_online_video(self):
        video = make_object(stereotype=Stereotype.VIDEO)
        ctx = ctx_with([make_session("sB")], online=[("o1", "sB")], objects=[video])
        plan = plan_media_control({
            "object": BoundValue.object("o1"),
            "verb": BoundValue.enum("Play"),
            "target": BoundValue.session("sB"),
        }, ctx)
        assert [(c.action, c.target, c.verb) for c in plan.commands] == [
            (CommandAction.MEDIA_CONTROL, "sB", MediaVerb.PLAY)
        ]

    def test_non_video_rejected(self):
        ctx = ctx_with([make_session("sB")], online=[("o1", "sB")],
                       objects=[make_object(stereotype=Stereotype.FORM)])
        with pytest.raises(StereotypeMismatch):
            plan_media_control({
                "object": BoundValue.object("o1"),
                "verb": BoundValue.enum("Play"),
                "target": BoundValue.session("sB"),
            }, ctx)

    def test_both_verbs_over_all_online_sessions(self):
        # oracle: enum x session loop, one command each
        video = make_object(stereotype=Stereotype.VIDEO)
        sessions = [make_session(s) for s in ("sA", "sB")]
        ctx = ctx_with(sessions, online=[("o1", "sA"), ("o1", "sB")], objects=[video])
        for verb in MediaVerb:
            for info in sessions:
                plan = plan_media_control({
                    "object": BoundValue.object("o1"),
                    "verb": BoundValue.enum(verb.value),
                    "target": BoundValue.session(info.session_id),
                }, ctx)
                assert len(plan.commands) == 1

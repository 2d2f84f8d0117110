import random

import pytest

from protoforge import (
    BroadcastCond,
    Condition,
    Csa,
    EnvEvent,
    FullSpec,
    GlobalEvent,
    Leaf,
    LocalEvent,
    Message,
    Or,
    RecvSys,
    RecvUpd,
    Seq,
    SysCond,
    TimeoutSys,
    TimeoutUpd,
    parse_spec,
    synthesize_all,
)

EXAMPLE_TEXT = "delta 0.35; cars A B; snd A->B(d) . (ack B->A : 0.7 | nack B->A : 0.8)"
CHAIN3_TEXT = "delta 0.3; cars A B; e1 A->B(d) . e2 B->A . e3 A->B : 0.5"


def criterion(number, title):
    def mark(fn):
        fn._criterion = (number, title)
        return fn
    return mark


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    tagged = getattr(item.function, "_criterion", None)
    if tagged is not None and report.when == "call":
        number, title = tagged
        verdict = "PASS" if report.passed else "FAIL"
        item.config.pluginmanager.get_plugin("terminalreporter").write_line(
            f"criterion {number:2d} [{verdict}] {title}"
        )


@pytest.fixture(scope="session")
def example_spec() -> FullSpec:
    return parse_spec(EXAMPLE_TEXT)


@pytest.fixture(scope="session")
def example_synthesis(example_spec):
    return synthesize_all(example_spec)


@pytest.fixture(scope="session")
def chain3_spec() -> FullSpec:
    return parse_spec(CHAIN3_TEXT)


def random_tree(rng: random.Random, cars=("A", "B", "C")):
    """A random specification tree; valid but not necessarily well-posed."""
    counter = [0]

    def fresh_event():
        counter[0] += 1
        src, dst = rng.sample(cars, 2)
        data = rng.choice([None, "d", "x"])
        return GlobalEvent(f"e{counter[0]}", src, dst, data)

    def build(depth):
        roll = rng.random()
        if depth <= 0 or roll < 0.4:
            return Leaf(fresh_event(), round(rng.random(), 3))
        if roll < 0.75:
            return Seq(fresh_event(), build(depth - 1))
        return Or(build(depth - 1), build(depth - 1))

    return build(rng.randint(1, 4))


def reference_sender(n_snd=3, n_ack=1, n_nack=2) -> Csa:
    """Hand-built reference automaton for the example sender."""
    a = Message("a", "A", "B", "d")
    b = Message("b", "B", "A")
    c = Message("c", "B", "A")
    return Csa(
        owner="A",
        states=("s1", "s2", "s3", "s4", "s5", "s6"),
        vars=("nu1",),
        init="s1",
        finals=frozenset({"s5", "s6"}),
        transitions={
            ("s1", EnvEvent(LocalEvent("snd", "B", "d", "env"))): "s2",
            ("s2", BroadcastCond(a, Condition("nu1", "<=", n_snd))): "s3",
            ("s2", SysCond(LocalEvent("snd", "B", None, "sys", "fail"),
                           Condition("nu1", ">", n_snd))): "s4",
            ("s3", TimeoutUpd("nu1")): "s2",
            ("s3", RecvSys(b, LocalEvent("ack", "B", None, "sys"))): "s5",
            ("s3", RecvSys(c, LocalEvent("nack", "B", None, "sys"))): "s6",
        },
    )


def reference_receiver(n_snd=3, n_ack=1, n_nack=2) -> Csa:
    """Hand-built reference automaton for the example receiver."""
    a = Message("a", "A", "B", "d")
    b = Message("b", "B", "A")
    c = Message("c", "B", "A")
    return Csa(
        owner="B",
        states=("s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8", "s9", "s10"),
        vars=("nu2", "nu3"),
        init="s1",
        finals=frozenset({"s6", "s10"}),
        transitions={
            ("s1", RecvSys(a, LocalEvent("snd", "A", "d", "sys"))): "s2",
            ("s2", EnvEvent(LocalEvent("ack", "A", None, "env"))): "s3",
            ("s2", EnvEvent(LocalEvent("nack", "A", None, "env"))): "s7",
            ("s3", BroadcastCond(b, Condition("nu2", "<=", n_ack))): "s5",
            ("s3", SysCond(LocalEvent("ack", "A", None, "sys", "fail"),
                           Condition("nu2", ">", n_ack))): "s4",
            ("s5", RecvUpd(a, "nu2")): "s3",
            ("s5", TimeoutSys(LocalEvent("ack", "A", None, "sys", "success"))): "s6",
            ("s7", BroadcastCond(c, Condition("nu3", "<=", n_nack))): "s9",
            ("s7", SysCond(LocalEvent("nack", "A", None, "sys", "fail"),
                           Condition("nu3", ">", n_nack))): "s8",
            ("s9", RecvUpd(a, "nu3")): "s7",
            ("s9", TimeoutSys(LocalEvent("nack", "A", None, "sys", "success"))): "s10",
        },
    )


def random_dialogue(rng: random.Random, cars=("A", "B"), max_events=10):
    """A random well-posed specification: strict turn-taking, paths >= 2 events."""
    counter = [0]

    def fresh_event(src, dst):
        counter[0] += 1
        data = rng.choice([None, "d"])
        return GlobalEvent(f"e{counter[0]}", src, dst, data)

    def build(src, dst, remaining):
        crowded = counter[0] >= max_events
        if remaining <= 0 and (crowded or rng.random() < 0.6):
            return Leaf(fresh_event(src, dst), round(rng.uniform(0.0, 0.95), 3))
        if not crowded and rng.random() < 0.25:
            return Or(build(src, dst, remaining), build(src, dst, remaining))
        return Seq(fresh_event(src, dst), build(dst, src, remaining - 1))

    src, dst = cars[0], cars[1]
    return Seq(fresh_event(src, dst), build(dst, src, rng.randint(0, 2)))

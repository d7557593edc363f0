"""Assertion monitors, one small automaton per requirement.

A monitor starts Idle, is Triggered by its antecedent and resolves to Accept
or Reject. Some monitors fire many times per run; a single Reject fails the
run for that requirement.
"""

from __future__ import annotations

from enum import Enum
from typing import NamedTuple, Optional

from .stimulus import (
    FSM_ENTERED,
    GRIPPER,
    OUTCOME,
    RUN_END,
    SENSING_COMPLETE,
    SNAPSHOT,
    Event,
)
from .sut import Loc, Outcome, RobotConfig
from .world import SPEED_LIMIT, WorldConfig, contacts

REQUIREMENTS = ("R1", "R2", "R3", "R4", "R5", "R6", "R7", "R8a", "R8b", "R8c", "R8d")

GRIPPER_CLEARANCE = 0.05
PROXIMITY = 0.10


class MonitorIntegrityError(RuntimeError):
    """The harness fed events out of order; not a failure of the system under test."""


class VerdictState(str, Enum):
    NOT_COVERED = "NotCovered"
    PASSED = "Passed"
    FAILED = "Failed"


class MonitorVerdict(NamedTuple):
    requirement_id: str
    state: VerdictState
    trigger_tick: Optional[int]

    @property
    def covered(self) -> bool:
        return self.state is not VerdictState.NOT_COVERED

    def to_dict(self) -> dict:
        return {"req": self.requirement_id, "state": self.state.value, "trigger_tick": self.trigger_tick}


class Monitor:
    req = ""

    def __init__(self, config: RobotConfig):
        self.config = config
        self.state = "idle"
        self.trigger_tick = None
        self.accepted = False
        self.rejected = False

    def trigger(self, tick: int) -> None:
        if self.trigger_tick is None:
            self.trigger_tick = tick
        self.state = "triggered"

    def resolve(self, ok: bool) -> None:
        if ok:
            self.accepted = True
            self.state = "accept"
        else:
            self.rejected = True
            self.state = "reject"

    def check(self, tick: int, ok: bool) -> None:
        self.trigger(tick)
        self.resolve(ok)

    def on_snapshot(self, tick, state, c) -> None:
        pass

    def on_event(self, ev: Event) -> None:
        pass

    def finish(self, conclusive: bool, end_tick: int) -> None:
        pass

    def verdict(self) -> MonitorVerdict:
        if self.rejected:
            s = VerdictState.FAILED
        elif self.accepted:
            s = VerdictState.PASSED
        else:
            s = VerdictState.NOT_COVERED
        return MonitorVerdict(self.req, s, self.trigger_tick)


class _DecisionMonitor(Monitor):
    expected = None

    def wants(self, gpl: str) -> bool:
        raise NotImplementedError

    def on_event(self, ev):
        if ev.kind == SENSING_COMPLETE and self.state != "triggered" and self.wants(ev.data["gpl"]):
            self.trigger(ev.tick)
        elif ev.kind == OUTCOME and self.state == "triggered":
            self.resolve(ev.data["value"] == self.expected.value)

    def finish(self, conclusive, end_tick):
        if self.state == "triggered":
            self.resolve(False)


class ReleaseWhenReady(_DecisionMonitor):
    req = "R1"
    expected = Outcome.RELEASED

    def wants(self, gpl):
        return gpl == "111"


class KeepWhenNotReady(_DecisionMonitor):
    req = "R2"
    expected = Outcome.NOT_RELEASED

    def wants(self, gpl):
        return gpl != "111"


class DecisionLatency(Monitor):
    req = "R3"

    def on_event(self, ev):
        if ev.kind != FSM_ENTERED:
            return
        if self.state == "triggered":
            self.resolve(ev.tick - self.entry <= self.config.sensing_timeout)
        if ev.data["location"] == Loc.SENSING.value:
            self.trigger(ev.tick)
            self.entry = ev.tick

    def finish(self, conclusive, end_tick):
        if self.state == "triggered":
            self.resolve(end_tick - self.entry <= self.config.sensing_timeout)


class OutcomeTotality(Monitor):
    req = "R4"

    def __init__(self, config):
        super().__init__(config)
        self.outcomes = []

    def on_event(self, ev):
        if ev.kind == OUTCOME:
            self.outcomes.append(ev.data["value"])
        elif ev.kind == RUN_END and ev.data["conclusive"]:
            valid = {o.value for o in Outcome}
            self.check(ev.tick, len(self.outcomes) == 1 and self.outcomes[0] in valid)


class GripperClearance(Monitor):
    req = "R5"

    def __init__(self, config):
        super().__init__(config)
        self.last = None

    def on_snapshot(self, tick, state, c):
        self.last = (tick, c)

    def on_event(self, ev):
        if ev.kind == GRIPPER and ev.data["action"] == "closed":
            tick, c = self.last
            if tick != ev.tick:
                raise MonitorIntegrityError("gripper event without a snapshot for its tick")
            self.check(ev.tick, c.hand_to_human_hand >= GRIPPER_CLEARANCE)


class RestrictedStart(Monitor):
    """Speed must stay below the limit from the first motion until the first location change."""

    req = "R6"

    def __init__(self, config):
        super().__init__(config)
        self.window_closed = False

    def on_snapshot(self, tick, state, c):
        if self.trigger_tick is None and c.robot_speed > 0:
            self.trigger(tick)
            if self.window_closed:
                self.resolve(True)
                return
        if self.state == "triggered" and not self.window_closed and c.robot_speed >= SPEED_LIMIT:
            self.resolve(False)

    def on_event(self, ev):
        if ev.kind == FSM_ENTERED and ev.tick > 0 and not self.window_closed:
            self.window_closed = True
            if self.state == "triggered":
                self.resolve(True)

    def finish(self, conclusive, end_tick):
        # a run that ends inside the window truncates it
        if self.state == "triggered":
            self.resolve(True)


class _SpeedWhen(Monitor):
    def condition(self, c) -> bool:
        raise NotImplementedError

    def on_snapshot(self, tick, state, c):
        if self.condition(c):
            self.check(tick, c.robot_speed < SPEED_LIMIT)


class SelfCollisionSpeed(_SpeedWhen):
    req = "R7"

    def condition(self, c):
        return c.self_overlap


class SpeedAlways(Monitor):
    req = "R8a"

    def on_snapshot(self, tick, state, c):
        if self.trigger_tick is None and c.robot_speed > 0:
            self.trigger(tick)
        if self.trigger_tick is not None:
            self.resolve(c.robot_speed < SPEED_LIMIT)


class SpeedNearHuman(_SpeedWhen):
    req = "R8b"

    def condition(self, c):
        return c.robot_to_human <= PROXIMITY


class SpeedOnCollision(_SpeedWhen):
    req = "R8c"

    def condition(self, c):
        return c.any_collision


class SpeedOnHumanCollision(_SpeedWhen):
    req = "R8d"

    def condition(self, c):
        return c.robot_human_overlap


MONITOR_CLASSES = (
    ReleaseWhenReady, KeepWhenNotReady, DecisionLatency, OutcomeTotality, GripperClearance,
    RestrictedStart, SelfCollisionSpeed, SpeedAlways, SpeedNearHuman, SpeedOnCollision, SpeedOnHumanCollision,
)


class MonitorSuite:
    """All eleven monitors, fed synchronously from one trace."""

    def __init__(self, config: RobotConfig = RobotConfig(), world: WorldConfig = WorldConfig()):
        self.world = world
        self.monitors = [cls(config) for cls in MONITOR_CLASSES]
        self.last_tick = -1
        self.done = False

    def feed(self, ev: Event) -> None:
        if ev.tick < self.last_tick or self.done:
            raise MonitorIntegrityError(f"event {ev.kind} at tick {ev.tick} after tick {self.last_tick}")
        self.last_tick = ev.tick
        if ev.kind == SNAPSHOT:
            state = ev.data["state"]
            c = contacts(state, self.world)
            for m in self.monitors:
                m.on_snapshot(ev.tick, state, c)
            return
        for m in self.monitors:
            m.on_event(ev)
        if ev.kind == RUN_END:
            for m in self.monitors:
                m.finish(ev.data["conclusive"], ev.tick)
            self.done = True

    def verdicts(self) -> list:
        return [m.verdict() for m in self.monitors]


def check_trace(trace, config: RobotConfig = RobotConfig(), world: WorldConfig = WorldConfig()) -> list:
    """Replay a recorded trace through a fresh suite."""
    suite = MonitorSuite(config, world)
    for ev in trace.events:
        suite.feed(ev)
    return suite.verdicts()

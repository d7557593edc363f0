"""Abstract tests, their concretization, and the reactive driver that enacts them.

Abstract tests are written one action per line::

    sendsignal activateRobot
    setparam time = 40
    receivesignal informHumanOfHandoverStart
    sendsignal humanIsReady
    setparam hgazeOk = true

A concrete test is the same list plus a ``[bindings]`` block holding the
sampled numbers for every parameterised action and the robot timeouts.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, NamedTuple, Optional

from .seeding import generator
from .sut import (
    ACTIVATE,
    INFORM,
    READY,
    Loc,
    Outcome,
    RobotConfig,
    RobotState,
    SensorInputs,
    robot_step,
)
from .world import (
    Actor,
    HeadAttitude,
    MotionCommand,
    Pose,
    WorldConfig,
    WorldState,
    dist,
    initial_state,
    sense_gpl,
    step,
    ticks,
)

SEND = "sendsignal"
RECEIVE = "receivesignal"
SETPARAM = "setparam"
DISENGAGE = "disengage"

HUMAN_SIGNALS = (ACTIVATE, READY)
ROBOT_SIGNALS = (INFORM,)
SENSOR_PARAMS = ("hgazeOk", "hpressureOk", "hlocationOk")
MAX_TEST_LENGTH = 64


class TestFormatError(ValueError):
    __test__ = False  # not a pytest class despite the name


class CatalogError(KeyError):
    def __str__(self):
        return f"range catalog has no entry for {self.args[0]!r}"


@dataclass(frozen=True)
class Action:
    kind: str
    name: str = ""
    value: object = None

    def __post_init__(self):
        k, n, v = self.kind, self.name, self.value
        if k == SEND:
            ok = n in HUMAN_SIGNALS and v is None
        elif k == RECEIVE:
            ok = n in ROBOT_SIGNALS and v is None
        elif k == SETPARAM:
            if n == "time":
                ok = isinstance(v, int) and not isinstance(v, bool) and v >= 0
            else:
                ok = n in SENSOR_PARAMS and isinstance(v, bool)
        elif k == DISENGAGE:
            ok = n == "" and v is None
        else:
            ok = False
        if not ok:
            raise TestFormatError(f"malformed action {self!r}")

    def text(self) -> str:
        if self.kind == DISENGAGE:
            return DISENGAGE
        if self.kind == SETPARAM:
            v = str(self.value).lower() if isinstance(self.value, bool) else str(self.value)
            return f"{SETPARAM} {self.name} = {v}"
        return f"{self.kind} {self.name}"

    @classmethod
    def parse(cls, line: str) -> "Action":
        parts = line.split()
        if not parts:
            raise TestFormatError("empty action line")
        kind = parts[0]
        if kind == DISENGAGE and len(parts) == 1:
            return cls(DISENGAGE)
        if kind in (SEND, RECEIVE) and len(parts) == 2:
            return cls(kind, parts[1])
        if kind == SETPARAM and len(parts) == 4 and parts[2] == "=":
            name, raw = parts[1], parts[3]
            if name == "time":
                try:
                    return cls(SETPARAM, name, int(raw))
                except ValueError:
                    raise TestFormatError(f"bad time value {raw!r}") from None
            if raw not in ("true", "false"):
                raise TestFormatError(f"bad boolean {raw!r}")
            return cls(SETPARAM, name, raw == "true")
        raise TestFormatError(f"cannot parse action {line!r}")


def send(name):
    return Action(SEND, name)


def receive(name):
    return Action(RECEIVE, name)


def setparam(name, value):
    return Action(SETPARAM, name, value)


DISENGAGE_ACTION = Action(DISENGAGE)


class Provenance(str, Enum):
    UNCONSTRAINED = "unconstrained"
    CONSTRAINED = "constrained"
    MODEL_BASED = "model-based"


@dataclass(frozen=True)
class AbstractTest:
    id: str
    actions: tuple
    provenance: Provenance = Provenance.UNCONSTRAINED
    target: str = ""

    def __post_init__(self):
        if not 1 <= len(self.actions) <= MAX_TEST_LENGTH:
            raise TestFormatError(f"test length {len(self.actions)} outside [1, {MAX_TEST_LENGTH}]")

    def text(self) -> str:
        head = [f"# test {self.id}", f"# provenance {self.provenance.value}"]
        if self.target:
            head.append(f"# target {self.target}")
        return "\n".join(head + [a.text() for a in self.actions]) + "\n"

    @classmethod
    def parse(cls, text: str) -> "AbstractTest":
        meta, actions = {}, []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line == "[bindings]":
                break
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(" ")
                meta[key] = val
                continue
            actions.append(Action.parse(line))
        return cls(
            id=meta.get("test", "unnamed"),
            actions=tuple(actions),
            provenance=Provenance(meta.get("provenance", "unconstrained")),
            target=meta.get("target", ""),
        )


class Profile(str, Enum):
    DEFAULT = "default"
    SHORT_TIMEOUTS = "short"


@dataclass(frozen=True)
class RangeCatalog:
    """(parameter, abstract value) -> one (lo, hi) interval per sampled dimension."""

    entries: dict = field(default_factory=lambda: dict(DEFAULT_RANGES))

    def __post_init__(self):
        for key, ivs in self.entries.items():
            if not ivs or any(hi < lo for lo, hi in ivs):
                raise ValueError(f"empty interval in catalog entry {key}")

    def get(self, param: str, value: str) -> tuple:
        try:
            return self.entries[(param, value)]
        except KeyError:
            raise CatalogError(f"{param}={value}") from None

    def human_speed(self) -> float:
        return self.get("human", "speed")[0][0]


# seconds for durations and timeouts, metres and degrees for poses
DEFAULT_RANGES = {
    (ACTIVATE, "duration"): ((5.0, 5.0),),
    (READY, "duration"): ((2.0, 2.0),),
    (INFORM, "max_wait"): ((60.0, 60.0),),
    ("time", "ticks"): ((1, 1),),
    # simulator ticks per model tick, for delays taken from automata witnesses
    ("time", "model"): ((1, 5),),
    ("hgazeOk", "true"): ((0.1, 0.2), (0.5, 0.6), (15.0, 40.0)),
    ("hgazeOk", "false"): ((0.3, 0.5), (0.8, 1.0), (60.0, 120.0)),
    # hand poses: radius from the handover point, azimuth, elevation (toward the human)
    ("hlocationOk", "true"): ((0.06, 0.17), (-30.0, 30.0), (-20.0, 20.0)),
    ("hlocationOk", "false"): ((0.21, 0.30), (-30.0, 30.0), (-20.0, 20.0)),
    ("hpressureOk", "true"): ((0.21, 0.30), (-30.0, 30.0), (-20.0, 20.0)),
    ("disengage", "hand"): ((0.6, 0.9), (-30.0, 30.0), (-20.0, 20.0)),
    ("disengage", "head"): ((0.3, 0.5), (0.8, 1.0), (60.0, 120.0)),
    ("timeout", "wait_activation"): ((6.0, 60.0),),
    ("timeout", "wait_ready"): ((6.0, 60.0),),
    ("timeout", "sensing"): ((0.5, 30.0),),
    ("human", "speed"): ((1.0, 1.0),),
}

TIMEOUT_FIELDS = {
    "wait_activation": "wait_activation_timeout",
    "wait_ready": "wait_ready_timeout",
    "sensing": "sensing_timeout",
}


@dataclass(frozen=True)
class ConcreteTest:
    abstract: AbstractTest
    seed: int
    bindings: tuple  # one dict per action
    timeouts: dict
    profile: Profile = Profile.DEFAULT

    def robot_config(self, base: RobotConfig = RobotConfig()) -> RobotConfig:
        return replace(base, **{TIMEOUT_FIELDS[k]: v for k, v in self.timeouts.items()})

    def text(self) -> str:
        lines = [self.abstract.text().rstrip("\n"), "[bindings]",
                 f"seed = {self.seed}", f"profile = {self.profile.value}"]
        for k in sorted(self.timeouts):
            lines.append(f"timeout.{k} = {self.timeouts[k]}")
        for i, b in enumerate(self.bindings):
            for k in sorted(b):
                lines.append(f"{i}.{k} = {json.dumps(b[k])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "ConcreteTest":
        abstract = AbstractTest.parse(text)
        _, sep, block = text.partition("[bindings]")
        if not sep:
            raise TestFormatError("concrete test has no [bindings] block")
        seed, profile, timeouts = None, Profile.DEFAULT, {}
        bindings = [dict() for _ in abstract.actions]
        for line in block.splitlines():
            line = line.strip()
            if not line:
                continue
            key, eq, val = line.partition(" = ")
            if not eq:
                raise TestFormatError(f"bad binding line {line!r}")
            if key == "seed":
                seed = int(val)
            elif key == "profile":
                profile = Profile(val)
            elif key.startswith("timeout."):
                timeouts[key[len("timeout."):]] = int(val)
            else:
                idx, _, name = key.partition(".")
                v = json.loads(val)
                bindings[int(idx)][name] = v
        if seed is None:
            raise TestFormatError("concrete test has no seed")
        return cls(abstract, seed, tuple(bindings), timeouts, profile)


def _uniform(rng, lo, hi) -> float:
    if hi == lo:
        return float(lo)
    x = lo + (hi - lo) * rng.random()
    # upper bounds are exclusive (the gaze angle interval is half-open)
    return x if x < hi else math.nextafter(hi, lo)


def _hand_target(rng, ivs, wcfg: WorldConfig) -> list:
    r, az, el = (_uniform(rng, lo, hi) for lo, hi in ivs)
    az, el = math.radians(az), math.radians(el)
    h = wcfg.handover_point
    return [h.x + r * math.cos(el) * math.cos(az), h.y + r * math.cos(el) * math.sin(az), h.z + r * math.sin(el)]


def concretize(test: AbstractTest, catalog: RangeCatalog, seed: int,
               profile: Profile = Profile.DEFAULT, world: WorldConfig = WorldConfig()) -> ConcreteTest:
    """Bind every parameter by uniform sampling from its catalog range."""
    profile = Profile(profile)
    rng = generator(seed)
    time_key = "model" if test.provenance is Provenance.MODEL_BASED else "ticks"
    bindings = []
    for a in test.actions:
        b = {}
        if a.kind == SEND:
            (lo, hi), = catalog.get(a.name, "duration")
            b["duration"] = ticks(_uniform(rng, lo, hi))
        elif a.kind == RECEIVE:
            (lo, hi), = catalog.get(a.name, "max_wait")
            b["max_wait"] = ticks(_uniform(rng, lo, hi))
        elif a.kind == DISENGAGE:
            b["hand"] = _hand_target(rng, catalog.get("disengage", "hand"), world)
            b["head"] = [_uniform(rng, lo, hi) for lo, hi in catalog.get("disengage", "head")]
        elif a.name == "time":
            (lo, hi), = catalog.get("time", time_key)
            scale = lo if lo == hi else int(rng.integers(lo, hi, endpoint=True))
            b["ticks"] = a.value * scale
        elif a.name == "hgazeOk":
            ivs = catalog.get(a.name, str(a.value).lower())
            b["head"] = [_uniform(rng, lo, hi) for lo, hi in ivs]
        elif a.name == "hlocationOk":
            b["hand"] = _hand_target(rng, catalog.get(a.name, str(a.value).lower()), world)
        elif a.name == "hpressureOk":
            b["pressure"] = a.value
            if a.value:
                b["hand"] = _hand_target(rng, catalog.get(a.name, "true"), world)
        bindings.append(b)
    timeouts = {}
    for key in ("wait_activation", "wait_ready", "sensing"):
        (lo, hi), = catalog.get("timeout", key)
        if profile is Profile.SHORT_TIMEOUTS:
            hi = lo + (hi - lo) / 4.0
        timeouts[key] = max(1, ticks(_uniform(rng, lo, hi)))
    return ConcreteTest(test, seed, tuple(bindings), timeouts, profile)


# --- simulation trace --------------------------------------------------------


class Event(NamedTuple):
    tick: int
    kind: str
    data: dict


SNAPSHOT = "snapshot"
SIGNAL_ASSERTED = "signal_asserted"
SIGNAL_EMITTED = "signal_emitted"
FSM_ENTERED = "fsm_entered"
STATEMENT = "stmt"
HUMAN_ACTION = "human_action"
GRIPPER = "gripper"
SENSING_COMPLETE = "sensing_complete"
OUTCOME = "outcome"
RUN_END = "run_end"


@dataclass
class SimTrace:
    events: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    listeners: list = field(default_factory=list, repr=False, compare=False)

    def append(self, tick: int, kind: str, **data) -> None:
        ev = Event(tick, kind, data)
        self.events.append(ev)
        for listener in self.listeners:
            listener.feed(ev)

    @property
    def conclusive(self) -> bool:
        for ev in reversed(self.events):
            if ev.kind == RUN_END:
                return ev.data["conclusive"]
        return False

    @property
    def outcome(self) -> Optional[Outcome]:
        for ev in self.events:
            if ev.kind == OUTCOME:
                return Outcome(ev.data["value"])
        return None

    def of_kind(self, kind: str) -> Iterable[Event]:
        return (ev for ev in self.events if ev.kind == kind)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"meta": self.meta}, sort_keys=True)]
        for ev in self.events:
            data = ev.data
            if ev.kind == SNAPSHOT:
                data = {"state": data["state"].to_dict()}
            lines.append(json.dumps({"t": ev.tick, "ev": ev.kind, **data}, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "SimTrace":
        trace = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            if "meta" in d:
                trace.meta = d["meta"]
                continue
            tick, kind = d.pop("t"), d.pop("ev")
            if kind == SNAPSHOT:
                d = {"state": WorldState.from_dict(d["state"])}
            trace.events.append(Event(tick, kind, d))
        return trace


# --- driver ------------------------------------------------------------------


class Driver:
    """Enacts a concrete test through the human, sensor and voice channels."""

    def __init__(self, test: ConcreteTest, world: WorldConfig = WorldConfig(), speed: float = 1.0):
        self.test = test
        self.world = world
        self.speed = speed
        self.idx = 0
        self.started = False
        self.timer = 0
        self.mailbox = Counter()
        self.signal = None
        self.hand_target = None
        self.head_target = None
        self.pressure = False
        self.finished = False

    def notify(self, signal: str) -> None:
        self.mailbox[signal] += 1

    def act(self, state: WorldState, tick: int, trace: SimTrace):
        """Returns (motion commands, pressure flag, asserted signals) for this tick."""
        if self.hand_target is not None and state.human_hand == self.hand_target:
            self.hand_target = None
        if self.head_target is not None and state.head == self.head_target:
            self.head_target = None

        asserted = frozenset()
        actions = self.test.abstract.actions
        while not self.finished and self.idx < len(actions):
            action = actions[self.idx]
            binding = self.test.bindings[self.idx]
            if not self.started:
                self.started = True
                trace.append(tick, HUMAN_ACTION, index=self.idx, action=action.text())
                self._start(action, binding, state, tick, trace)
            done, asserted = self._progress(action, binding)
            if not done:
                break
            self.idx += 1
            self.started = False
            if action.kind == DISENGAGE:
                self.finished = True

        commands = []
        if self.hand_target is not None:
            commands.append(MotionCommand(Actor.HUMAN_HAND, self.hand_target, self.speed))
        if self.head_target is not None:
            commands.append(MotionCommand(Actor.HEAD, self.head_target, self.speed))
        return commands, self.pressure, asserted

    def _start(self, action: Action, b: dict, state: WorldState, tick: int, trace: SimTrace) -> None:
        if action.kind == SEND:
            # the final tick of the action is silence so repeated words stay distinct
            self.signal = (action.name, b["duration"] + 1)
            trace.append(tick, SIGNAL_ASSERTED, name=action.name, duration=b["duration"])
        elif action.kind == RECEIVE:
            self.timer = b["max_wait"]
        elif action.kind == DISENGAGE:
            self.pressure = False
            self.hand_target = Pose(*b["hand"])
            self.head_target = HeadAttitude(*b["head"])
        elif action.name == "time":
            self.timer = b["ticks"]
        elif action.name == "hgazeOk":
            self.head_target = HeadAttitude(*b["head"])
        elif action.name == "hlocationOk":
            self.hand_target = Pose(*b["hand"])
        elif action.name == "hpressureOk":
            self.pressure = b["pressure"]
            if b["pressure"]:
                reach = dist(b["hand"], self.world.handover_point)
                if dist(state.human_hand, self.world.handover_point) > reach:
                    self.hand_target = Pose(*b["hand"])
        if self.hand_target is not None and state.human_hand == self.hand_target:
            self.hand_target = None
        if self.head_target is not None and state.head == self.head_target:
            self.head_target = None

    def _progress(self, action: Action, b: dict):
        if action.kind == SEND:
            name, left = self.signal
            self.signal = (name, left - 1)
            if left > 1:
                return False, frozenset((name,))
            return left <= 0, frozenset()
        if action.kind == RECEIVE:
            if self.mailbox[action.name] > 0:
                self.mailbox[action.name] -= 1
                return True, frozenset()
            if self.timer <= 0:
                return True, frozenset()
            self.timer -= 1
            return False, frozenset()
        if action.kind == SETPARAM and action.name == "time":
            if self.timer <= 0:
                return True, frozenset()
            self.timer -= 1
            return False, frozenset()
        return self.hand_target is None and self.head_target is None, frozenset()


def default_max_ticks(config: RobotConfig) -> int:
    return 2 * config.total_timeout()


def drive(test: ConcreteTest, robot: RobotConfig = RobotConfig(), world: WorldConfig = WorldConfig(),
          catalog: Optional[RangeCatalog] = None, listeners: Iterable = (),
          max_ticks: Optional[int] = None) -> SimTrace:
    """Run one concrete test in a fresh world against a fresh controller."""
    catalog = catalog or RangeCatalog()
    config = test.robot_config(robot)
    if max_ticks is None:
        max_ticks = default_max_ticks(config)
    if max_ticks <= 0:
        raise ValueError("max_ticks must be positive")
    trace = SimTrace(meta={"test": test.abstract.id, "seed": test.seed, "profile": test.profile.value,
                           "timeouts": dict(test.timeouts), "max_ticks": max_ticks},
                     listeners=list(listeners))
    driver = Driver(test, world, catalog.human_speed())
    state = initial_state(world)
    robot_state = RobotState()
    robot_cmd, grip_cmd = None, None
    trace.append(0, FSM_ENTERED, location=robot_state.location.value)
    trace.append(0, SNAPSHOT, state=state)
    for tick in range(1, max_ticks + 1):
        commands, pressure, signals = driver.act(state, tick, trace)
        if robot_cmd is not None:
            commands.append(robot_cmd)
        state = step(state, commands, gripper=grip_cmd, pressure=pressure, cfg=world)
        trace.append(tick, SNAPSHOT, state=state)
        if grip_cmd is not None:
            trace.append(tick, GRIPPER, action=grip_cmd.value)
        inputs = SensorInputs(signals, sense_gpl(state, world), state.robot_hand, state.object_held_by)
        res = robot_step(robot_state, inputs, config, tick, world)
        for h in res.hits:
            trace.append(tick, STATEMENT, id=h.statement_id, location=h.location.value)
        for loc in res.entered:
            trace.append(tick, FSM_ENTERED, location=loc.value)
        if res.emitted:
            trace.append(tick, SIGNAL_EMITTED, name=res.emitted)
            driver.notify(res.emitted)
        if res.sensing_complete is not None:
            trace.append(tick, SENSING_COMPLETE, gpl=res.sensing_complete.bits)
        if res.outcome is not None:
            gpl = res.outcome_gpl.bits if res.outcome_gpl is not None else None
            trace.append(tick, OUTCOME, value=res.outcome.value, gpl=gpl, location=robot_state.location.value)
        robot_state, robot_cmd, grip_cmd = res.state, res.command, res.gripper
        if robot_state.terminal:
            break
    trace.append(trace.events[-1].tick, RUN_END, conclusive=robot_state.terminal)
    return trace


__all__ = [
    "Action", "AbstractTest", "ConcreteTest", "RangeCatalog", "Profile", "Provenance", "SimTrace", "Event",
    "Driver", "concretize", "drive", "send", "receive", "setparam", "DISENGAGE_ACTION", "TestFormatError",
    "CatalogError", "Loc",
]

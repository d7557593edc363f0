"""The robot's handover controller, written as an instrumented FSM.

Each action body reports the statements it executes as ``StatementHit``s so
statement coverage can be collected without tracing the interpreter.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple, Optional

from .world import (
    DT,
    GPL,
    Actor,
    Gripper,
    Holder,
    MotionCommand,
    Pose,
    WorldConfig,
    dist,
    ticks,
)


class Loc(str, Enum):
    WAIT_ACTIVATION = "WaitActivation"
    ANNOUNCE_START = "AnnounceStart"
    PICK_OBJECT = "PickObject"
    HOLD_OUT = "HoldOut"
    WAIT_HUMAN_READY = "WaitHumanReady"
    SENSING = "Sensing"
    DECIDING = "Deciding"
    RELEASING = "Releasing"
    NOT_RELEASING = "NotReleasing"
    TIMED_OUT_END = "TimedOutEnd"
    DONE = "Done"


class Outcome(str, Enum):
    TIMED_OUT = "TimedOut"
    RELEASED = "Released"
    NOT_RELEASED = "NotReleased"


class Decision(str, Enum):
    RELEASE = "Release"
    NOT_RELEASE = "NotRelease"


class SpeedProfile(str, Enum):
    FLAWED = "flawed"
    SAFE = "safe"


ACTIVATE = "activateRobot"
READY = "humanIsReady"
INFORM = "informHumanOfHandoverStart"


@dataclass(frozen=True)
class RobotConfig:
    wait_activation_timeout: int = ticks(60.0)
    wait_ready_timeout: int = ticks(60.0)
    sensing_timeout: int = ticks(30.0)
    # ticks the GPL reading must stay unchanged before the robot latches it
    sensing_settle: int = ticks(2.0)
    pickup_speed: float = 0.4
    handover_speed: float = 0.3
    retract_speed: float = 0.1
    release_hold: int = ticks(0.5)
    speed_profile: SpeedProfile = SpeedProfile.FLAWED

    def __post_init__(self):
        for name in ("wait_activation_timeout", "wait_ready_timeout", "sensing_timeout", "sensing_settle"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("pickup_speed", "handover_speed", "retract_speed"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def for_profile(cls, profile, **kw) -> "RobotConfig":
        profile = SpeedProfile(profile)
        if profile is SpeedProfile.SAFE:
            kw.setdefault("pickup_speed", 0.2)
            kw.setdefault("handover_speed", 0.2)
        return cls(speed_profile=profile, **kw)

    def total_timeout(self) -> int:
        return self.wait_activation_timeout + self.wait_ready_timeout + self.sensing_timeout


# --- statement table ---------------------------------------------------------

_TABLE: list = []


def _block(loc: Loc, *descriptions: str) -> tuple:
    ids = []
    for d in descriptions:
        ids.append(len(_TABLE))
        _TABLE.append((len(_TABLE), loc, d))
    return tuple(ids)


L = Loc
WA_ENTRY = _block(L.WAIT_ACTIVATION, "reset gripper state", "load home pose", "command initial posture motion",
                  "start activation timer", "subscribe voice recognizer")
WA_POLL = _block(L.WAIT_ACTIVATION, "increment activation timer", "poll voice recognizer", "check activation keyword")
WA_MOVING = _block(L.WAIT_ACTIVATION, "check posture motion progress", "keep posture command alive")
WA_POSTURE_DONE = _block(L.WAIT_ACTIVATION, "posture reached", "clear posture command")
WA_HEARD = _block(L.WAIT_ACTIVATION, "log activation heard", "set activated flag", "transition to AnnounceStart")
WA_TIMEOUT = _block(L.WAIT_ACTIVATION, "compare timer against activation timeout", "log activation timeout",
                    "transition to TimedOutEnd")

AN_BODY = _block(L.ANNOUNCE_START, "compose start announcement", "publish informHumanOfHandoverStart",
                 "log announcement", "transition to PickObject")

PO_ENTRY = _block(L.PICK_OBJECT, "look up object pose", "plan reach to object", "command reach motion",
                  "set grasp phase to reach")
PO_REACHING = _block(L.PICK_OBJECT, "poll voice recognizer", "measure distance to object", "check reach arrival",
                     "keep reach command alive")
PO_ARRIVED = _block(L.PICK_OBJECT, "stop reach motion", "command gripper close", "set grasp phase to closing")
PO_CONFIRM = _block(L.PICK_OBJECT, "read grasp sensor", "check object held")
PO_HELD = _block(L.PICK_OBJECT, "log object grasped", "transition to HoldOut")

HO_ENTRY = _block(L.HOLD_OUT, "look up handover pose", "plan hold-out path", "command hold-out motion")
HO_MOVING = _block(L.HOLD_OUT, "poll voice recognizer", "measure distance to handover pose",
                   "check hold-out arrival", "keep hold-out command alive")
HO_ARRIVED = _block(L.HOLD_OUT, "stop hold-out motion", "log holding out", "transition to WaitHumanReady")

WR_ENTRY = _block(L.WAIT_HUMAN_READY, "start ready timer", "read buffered ready keyword")
WR_POLL = _block(L.WAIT_HUMAN_READY, "increment ready timer", "poll voice recognizer", "check ready keyword")
WR_HEARD = _block(L.WAIT_HUMAN_READY, "log human ready", "transition to Sensing")
WR_TIMEOUT = _block(L.WAIT_HUMAN_READY, "compare timer against ready timeout", "log ready timeout",
                    "transition to TimedOutEnd")

SE_ENTRY = _block(L.SENSING, "start sensing timer", "clear GPL history", "enable gaze tracker",
                  "enable pressure sensor", "enable hand tracker")
SE_SAMPLE = _block(L.SENSING, "increment sensing timer", "read gaze classification",
                   "read pressure classification", "read location classification", "assemble GPL sample")
SE_CHANGED = _block(L.SENSING, "GPL sample differs from previous", "store new GPL sample", "restart stability count")
SE_STABLE = _block(L.SENSING, "GPL sample unchanged", "increment stability count")
SE_LATCH = _block(L.SENSING, "stability reached", "latch GPL sample", "disable sensors", "transition to Deciding")
SE_TIMEOUT = _block(L.SENSING, "compare timer against sensing timeout", "log sensing timeout",
                    "disable sensors after timeout", "transition to TimedOutEnd")

DE_BODY = _block(L.DECIDING, "read latched GPL", "evaluate gaze bit", "evaluate pressure bit",
                 "evaluate location bit")
DE_RELEASE = _block(L.DECIDING, "all bits positive", "log decision release", "transition to Releasing")
DE_KEEP = _block(L.DECIDING, "some bit negative", "log decision not release", "transition to NotReleasing")

RE_ENTRY = _block(L.RELEASING, "command gripper open", "start release timer", "log release")
RE_HOLD = _block(L.RELEASING, "increment release timer", "check release hold elapsed")
RE_RETRACT = _block(L.RELEASING, "look up rest pose", "command retract motion", "set retract phase")
RE_MOVING = _block(L.RELEASING, "measure distance to rest pose", "keep retract command alive")
RE_ARRIVED = _block(L.RELEASING, "stop retract motion", "transition to Done")

NR_ENTRY = _block(L.NOT_RELEASING, "keep gripper closed", "start hold timer", "log keeping object")
NR_HOLD = _block(L.NOT_RELEASING, "increment hold timer", "check hold elapsed")
NR_EXIT = _block(L.NOT_RELEASING, "transition to Done")

TO_BODY = _block(L.TIMED_OUT_END, "stop all motion", "log timed out", "transition to Done")

DN_BODY = _block(L.DONE, "publish task finished", "shut down handover node")

del L


class StatementHit(NamedTuple):
    statement_id: int
    location: Loc
    tick: int


def statement_table() -> list:
    """(statement_id, location, description) for every instrumented statement."""
    return list(_TABLE)


def statement_table_csv() -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["statement_id", "location", "description"])
    for sid, loc, desc in _TABLE:
        w.writerow([sid, loc.value, desc])
    return buf.getvalue()


# --- controller --------------------------------------------------------------


@dataclass(frozen=True)
class RobotState:
    location: Loc = Loc.WAIT_ACTIVATION
    clock: int = 0
    gpl_latest: Optional[GPL] = None
    entered: bool = False
    phase: str = ""
    heard: frozenset = frozenset()
    motion: Optional[MotionCommand] = None
    ready_heard: bool = False
    sample: Optional[GPL] = None
    stable: int = 0
    outcome: Optional[Outcome] = None

    @property
    def terminal(self) -> bool:
        return self.location is Loc.DONE


class SensorInputs(NamedTuple):
    signals: frozenset  # signals currently being asserted by the human
    gpl: GPL
    hand: Pose
    held_by: Holder


@dataclass
class StepResult:
    state: RobotState
    command: Optional[MotionCommand]
    gripper: Optional[Gripper] = None
    emitted: Optional[str] = None
    hits: list = field(default_factory=list)
    entered: list = field(default_factory=list)  # locations entered this step, in order
    sensing_complete: Optional[GPL] = None
    outcome: Optional[Outcome] = None
    outcome_gpl: Optional[GPL] = None


def decide(gpl: GPL) -> Decision:
    return Decision.RELEASE if gpl.all_ok() else Decision.NOT_RELEASE


def robot_step(state: RobotState, inputs: SensorInputs, config: RobotConfig, tick: int,
               world: WorldConfig = WorldConfig()) -> StepResult:
    """One controller cycle. Voice keywords are recognised when an utterance ends."""
    res = StepResult(state=state, command=state.motion)
    heard_now = inputs.signals
    finished = state.heard - heard_now

    def hit(block):
        loc = res.state.location
        res.hits.extend(StatementHit(i, loc, tick) for i in block)

    def goto(loc: Loc, **kw):
        res.state = replace(res.state, location=loc, clock=0, entered=False, phase="", **kw)
        res.entered.append(loc)

    def move(target: Pose, speed: float):
        cmd = MotionCommand(Actor.ROBOT_HAND, target, speed)
        res.state = replace(res.state, motion=cmd)
        res.command = cmd

    def stop():
        res.state = replace(res.state, motion=None)
        res.command = None

    def at(target: Pose) -> bool:
        return dist(inputs.hand, target) == 0.0

    # the ready keyword is buffered from the announcement until the robot waits for it
    if READY in finished and state.location in (Loc.PICK_OBJECT, Loc.HOLD_OUT, Loc.WAIT_HUMAN_READY):
        res.state = replace(res.state, ready_heard=True)

    # several locations may be handled in one cycle when a body transitions immediately
    for _ in range(8):
        s = res.state
        loc = s.location
        first = not s.entered
        if first:
            res.state = replace(s, entered=True)
            s = res.state
        else:
            res.state = replace(s, clock=s.clock + 1)
            s = res.state

        if loc is Loc.WAIT_ACTIVATION:
            if first:
                hit(WA_ENTRY)
                move(world.robot_home, config.pickup_speed)
                break
            hit(WA_POLL)
            if s.motion is not None:
                if at(s.motion.target):
                    hit(WA_POSTURE_DONE)
                    stop()
                else:
                    hit(WA_MOVING)
            if ACTIVATE in finished:
                hit(WA_HEARD)
                goto(Loc.ANNOUNCE_START)
                continue
            if s.clock >= config.wait_activation_timeout:
                hit(WA_TIMEOUT)
                _time_out(res, None)
                continue
            break

        if loc is Loc.ANNOUNCE_START:
            hit(AN_BODY)
            res.emitted = INFORM
            goto(Loc.PICK_OBJECT)
            break

        if loc is Loc.PICK_OBJECT:
            if first:
                hit(PO_ENTRY)
                move(world.object_start, config.pickup_speed)
                res.state = replace(res.state, phase="reach")
                break
            if s.phase == "reach":
                hit(PO_REACHING)
                if at(world.object_start):
                    hit(PO_ARRIVED)
                    stop()
                    res.gripper = Gripper.CLOSED
                    res.state = replace(res.state, phase="closing")
                break
            hit(PO_CONFIRM)
            if inputs.held_by in (Holder.ROBOT, Holder.BOTH):
                hit(PO_HELD)
                goto(Loc.HOLD_OUT)
                continue
            break

        if loc is Loc.HOLD_OUT:
            if first:
                hit(HO_ENTRY)
                move(world.handover_point, config.handover_speed)
                break
            hit(HO_MOVING)
            if at(world.handover_point):
                hit(HO_ARRIVED)
                stop()
                goto(Loc.WAIT_HUMAN_READY)
                continue
            break

        if loc is Loc.WAIT_HUMAN_READY:
            if first:
                hit(WR_ENTRY)
                break
            # a keyword heard during pickup or hold-out is acted on at the first poll
            hit(WR_POLL)
            if s.ready_heard:
                hit(WR_HEARD)
                goto(Loc.SENSING)
                continue
            if s.clock >= config.wait_ready_timeout:
                hit(WR_TIMEOUT)
                _time_out(res, None)
                continue
            break

        if loc is Loc.SENSING:
            if first:
                hit(SE_ENTRY)
                res.state = replace(res.state, sample=None, stable=0)
                break
            hit(SE_SAMPLE)
            reading = inputs.gpl
            if reading != s.sample:
                hit(SE_CHANGED)
                res.state = replace(res.state, sample=reading, stable=1)
            else:
                hit(SE_STABLE)
                res.state = replace(res.state, stable=s.stable + 1)
            if res.state.stable >= config.sensing_settle:
                hit(SE_LATCH)
                res.sensing_complete = reading
                goto(Loc.DECIDING, gpl_latest=reading)
                continue
            if s.clock >= config.sensing_timeout:
                hit(SE_TIMEOUT)
                _time_out(res, reading)
                continue
            break

        if loc is Loc.DECIDING:
            # resolved in the same cycle it is entered
            hit(DE_BODY)
            if decide(s.gpl_latest) is Decision.RELEASE:
                hit(DE_RELEASE)
                res.outcome = Outcome.RELEASED
                goto(Loc.RELEASING, outcome=Outcome.RELEASED)
            else:
                hit(DE_KEEP)
                res.outcome = Outcome.NOT_RELEASED
                goto(Loc.NOT_RELEASING, outcome=Outcome.NOT_RELEASED)
            res.outcome_gpl = s.gpl_latest
            continue

        if loc is Loc.RELEASING:
            if first:
                hit(RE_ENTRY)
                res.gripper = Gripper.OPEN
                res.state = replace(res.state, phase="hold")
                break
            if s.phase == "hold":
                hit(RE_HOLD)
                if s.clock >= config.release_hold:
                    hit(RE_RETRACT)
                    move(world.robot_rest, config.retract_speed)
                    res.state = replace(res.state, phase="retract")
                break
            hit(RE_MOVING)
            if at(world.robot_rest):
                hit(RE_ARRIVED)
                stop()
                goto(Loc.DONE, gpl_latest=None)
                continue
            break

        if loc is Loc.NOT_RELEASING:
            if first:
                hit(NR_ENTRY)
                break
            hit(NR_HOLD)
            if s.clock >= config.release_hold:
                hit(NR_EXIT)
                goto(Loc.DONE, gpl_latest=None)
                continue
            break

        if loc is Loc.TIMED_OUT_END:
            hit(TO_BODY)
            stop()
            goto(Loc.DONE)
            continue

        if loc is Loc.DONE:
            if first:
                hit(DN_BODY)
            break

    res.state = replace(res.state, heard=heard_now)
    return res


def _time_out(res: StepResult, reading: Optional[GPL]) -> None:
    res.outcome = Outcome.TIMED_OUT
    res.outcome_gpl = reading
    res.state = replace(res.state, location=Loc.TIMED_OUT_END, clock=0, entered=False, phase="",
                        motion=None, outcome=Outcome.TIMED_OUT)
    res.command = None
    res.entered.append(Loc.TIMED_OUT_END)


__all__ = [
    "ACTIVATE", "READY", "INFORM", "DT", "Loc", "Outcome", "Decision", "SpeedProfile", "RobotConfig",
    "RobotState", "SensorInputs", "StepResult", "StatementHit", "robot_step", "decide",
    "statement_table", "statement_table_csv",
]

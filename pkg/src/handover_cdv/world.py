"""Kinematic world for the handover scenario.

Every body is a sphere. Motion is straight-line at constant speed, one fixed
tick at a time, so the whole world is a pure function of its command history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Union

DT = 0.05
WORLD_BOUND = 100.0
SPEED_LIMIT = 0.25
# absorbs float drift so an exact multiple of the step length arrives on time
ARRIVE_EPS = 1e-9


def ticks(seconds: float) -> int:
    return int(round(seconds / DT))


class Pose(NamedTuple):
    x: float
    y: float
    z: float


class HeadAttitude(NamedTuple):
    offset: float
    distance: float
    angle: float


class Gripper(str, Enum):
    OPEN = "open"
    CLOSED = "closed"


class Holder(str, Enum):
    NONE = "none"
    ROBOT = "robot"
    HUMAN = "human"
    BOTH = "both"


class Actor(str, Enum):
    ROBOT_HAND = "robot_hand"
    HUMAN_HAND = "human_hand"
    HEAD = "head"


class WorldError(ValueError):
    pass


@dataclass(frozen=True)
class MotionCommand:
    actor: Actor
    target: Union[Pose, HeadAttitude]
    speed: float

    def __post_init__(self):
        if not self.speed > 0:
            raise WorldError(f"motion speed must be positive, got {self.speed}")


@dataclass(frozen=True)
class WorldConfig:
    robot_hand_radius: float = 0.05
    human_hand_radius: float = 0.05
    head_radius: float = 0.10
    object_radius: float = 0.03
    torso_radius: float = 0.15
    torso_centers: tuple = (Pose(0.0, 0.0, 0.2), Pose(0.0, 0.0, 0.55))
    location_ok_radius: float = 0.10
    pressure_reach_radius: float = 0.25
    gaze_offset: tuple = (0.1, 0.2)
    gaze_distance: tuple = (0.5, 0.6)
    gaze_angle: tuple = (15.0, 40.0)
    # head centre = handover point + (distance, offset, head_height)
    head_height: float = 0.3
    robot_start: Pose = Pose(0.3, -0.3, 0.1)
    robot_home: Pose = Pose(0.35, -0.2, 0.2)
    robot_rest: Pose = Pose(0.15, -0.1, 0.25)
    object_start: Pose = Pose(0.45, -0.25, 0.0)
    handover_point: Pose = Pose(0.6, 0.0, 0.3)
    human_hand_rest: Pose = Pose(1.2, 0.2, 0.0)
    head_rest: HeadAttitude = HeadAttitude(0.4, 0.9, 90.0)
    human_speed: float = 1.0


@dataclass(frozen=True)
class WorldState:
    tick: int
    robot_hand: Pose
    human_hand: Pose
    head: HeadAttitude
    object: Pose
    robot_hand_speed: float = 0.0
    gripper: Gripper = Gripper.OPEN
    object_held_by: Holder = Holder.NONE
    pressure_applied: bool = False

    @property
    def time(self) -> float:
        return self.tick * DT

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "robot_hand": list(self.robot_hand),
            "robot_hand_speed": self.robot_hand_speed,
            "human_hand": list(self.human_hand),
            "head": list(self.head),
            "object": list(self.object),
            "gripper": self.gripper.value,
            "object_held_by": self.object_held_by.value,
            "pressure_applied": self.pressure_applied,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldState":
        return cls(
            tick=d["tick"],
            robot_hand=Pose(*d["robot_hand"]),
            robot_hand_speed=d["robot_hand_speed"],
            human_hand=Pose(*d["human_hand"]),
            head=HeadAttitude(*d["head"]),
            object=Pose(*d["object"]),
            gripper=Gripper(d["gripper"]),
            object_held_by=Holder(d["object_held_by"]),
            pressure_applied=d["pressure_applied"],
        )


def initial_state(cfg: WorldConfig = WorldConfig()) -> WorldState:
    return WorldState(
        tick=0,
        robot_hand=cfg.robot_start,
        human_hand=cfg.human_hand_rest,
        head=cfg.head_rest,
        object=cfg.object_start,
    )


def dist(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


def head_center(att: HeadAttitude, cfg: WorldConfig = WorldConfig()) -> Pose:
    h = cfg.handover_point
    return Pose(h.x + att.distance, h.y + att.offset, h.z + cfg.head_height)


class Sphere(NamedTuple):
    center: Pose
    radius: float


def bodies(state: WorldState, cfg: WorldConfig = WorldConfig()) -> dict:
    """The body catalog as spheres, keyed by name."""
    out = {
        "robot_hand": Sphere(state.robot_hand, cfg.robot_hand_radius),
        "human_hand": Sphere(state.human_hand, cfg.human_hand_radius),
        "head": Sphere(head_center(state.head, cfg), cfg.head_radius),
        "object": Sphere(state.object, cfg.object_radius),
    }
    for i, c in enumerate(cfg.torso_centers):
        out[f"torso{i}"] = Sphere(c, cfg.torso_radius)
    return out


def min_distance(a: Sphere, b: Sphere) -> float:
    return max(0.0, dist(a.center, b.center) - (a.radius + b.radius))


def _check_pose(p: Pose) -> None:
    for c in p:
        if not math.isfinite(c) or abs(c) > WORLD_BOUND:
            raise WorldError(f"pose {p} outside the world bound")


def _advance(cur: Sequence[float], target: Sequence[float], max_step: float):
    """Move ``cur`` toward ``target`` by at most ``max_step``; returns (new, moved)."""
    d = dist(cur, target)
    if d <= max_step + ARRIVE_EPS:
        return tuple(target), d
    f = max_step / d
    return tuple(c + (t - c) * f for c, t in zip(cur, target)), max_step


def _advance_head(cur: HeadAttitude, target: HeadAttitude, max_step: float) -> HeadAttitude:
    # centre is affine in (distance, offset), so lerping the attitude keeps a straight path
    d = math.hypot(target.offset - cur.offset, target.distance - cur.distance)
    if d <= max_step + ARRIVE_EPS:
        return target
    f = max_step / d
    return HeadAttitude(*(c + (t - c) * f for c, t in zip(cur, target)))


def step(
    state: WorldState,
    commands: Sequence[MotionCommand] = (),
    gripper: Optional[Gripper] = None,
    pressure: Optional[bool] = None,
    cfg: WorldConfig = WorldConfig(),
) -> WorldState:
    """Advance the world one tick."""
    by_actor = {}
    for c in commands:
        prev = by_actor.get(c.actor)
        if prev is not None and prev != c:
            raise WorldError(f"conflicting commands for {c.actor.value}")
        by_actor[c.actor] = c

    robot_hand = state.robot_hand
    speed = 0.0
    cmd = by_actor.get(Actor.ROBOT_HAND)
    if cmd is not None:
        _check_pose(cmd.target)
        new, moved = _advance(robot_hand, cmd.target, cmd.speed * DT)
        robot_hand = Pose(*new)
        speed = moved / DT

    human_hand = state.human_hand
    cmd = by_actor.get(Actor.HUMAN_HAND)
    if cmd is not None:
        _check_pose(cmd.target)
        human_hand = Pose(*_advance(human_hand, cmd.target, cmd.speed * DT)[0])

    head = state.head
    cmd = by_actor.get(Actor.HEAD)
    if cmd is not None:
        head = _advance_head(head, cmd.target, cmd.speed * DT)

    pressure_applied = state.pressure_applied if pressure is None else bool(pressure)
    grip = state.gripper if gripper is None else Gripper(gripper)

    robot_holds = state.object_held_by in (Holder.ROBOT, Holder.BOTH)
    if grip is Gripper.OPEN:
        robot_holds = False
    elif state.gripper is Gripper.OPEN:
        # closing this tick: grasp only if the hand is touching the object
        obj_sphere = Sphere(state.object, cfg.object_radius)
        robot_holds = min_distance(Sphere(robot_hand, cfg.robot_hand_radius), obj_sphere) == 0.0

    obj = state.object
    if robot_holds:
        obj = robot_hand
    human_near = dist(human_hand, obj) - cfg.human_hand_radius - cfg.object_radius <= cfg.pressure_reach_radius
    human_holds = pressure_applied and human_near
    if human_holds and not robot_holds:
        obj = human_hand

    holder = {
        (False, False): Holder.NONE,
        (True, False): Holder.ROBOT,
        (False, True): Holder.HUMAN,
        (True, True): Holder.BOTH,
    }[(robot_holds, human_holds)]

    return WorldState(
        tick=state.tick + 1,
        robot_hand=robot_hand,
        robot_hand_speed=speed,
        human_hand=human_hand,
        head=head,
        object=obj,
        gripper=grip,
        object_held_by=holder,
        pressure_applied=pressure_applied,
    )


class GPL(NamedTuple):
    gaze: bool
    pressure: bool
    location: bool

    @property
    def bits(self) -> str:
        return "".join("1" if b else "0" for b in self)

    @classmethod
    def from_bits(cls, bits: str) -> "GPL":
        if len(bits) != 3 or set(bits) - {"0", "1"}:
            raise ValueError(f"bad GPL bits {bits!r}")
        return cls(*(b == "1" for b in bits))

    def all_ok(self) -> bool:
        return self.gaze and self.pressure and self.location


def gaze_ok(att: HeadAttitude, cfg: WorldConfig = WorldConfig()) -> bool:
    lo, hi = cfg.gaze_offset
    if not lo <= att.offset <= hi:
        return False
    lo, hi = cfg.gaze_distance
    if not lo <= att.distance <= hi:
        return False
    lo, hi = cfg.gaze_angle
    return lo <= att.angle < hi


def hand_object_distance(state: WorldState, cfg: WorldConfig = WorldConfig()) -> float:
    return max(0.0, dist(state.human_hand, state.object) - cfg.human_hand_radius - cfg.object_radius)


def sense_gpl(state: WorldState, cfg: WorldConfig = WorldConfig()) -> GPL:
    d = hand_object_distance(state, cfg)
    return GPL(
        gaze=gaze_ok(state.head, cfg),
        pressure=state.pressure_applied and d <= cfg.pressure_reach_radius,
        location=d <= cfg.location_ok_radius,
    )


@dataclass
class Contacts:
    """Per-snapshot geometric summary used by the monitors."""

    robot_speed: float
    hand_to_human_hand: float
    robot_to_human: float  # robot hand to nearest human body
    self_overlap: bool
    robot_human_overlap: bool
    any_collision: bool


def contacts(state: WorldState, cfg: WorldConfig = WorldConfig()) -> Contacts:
    b = bodies(state, cfg)
    hand = b["robot_hand"]
    torsos = [b[k] for k in b if k.startswith("torso")]
    humans = [b["human_hand"], b["head"]]
    self_overlap = any(min_distance(hand, t) == 0.0 for t in torsos)
    robot_parts = [hand] + torsos
    robot_human = any(min_distance(r, h) == 0.0 for r in robot_parts for h in humans)
    obj_hit = False
    if state.object_held_by not in (Holder.ROBOT, Holder.BOTH):
        obj_hit = any(min_distance(r, b["object"]) == 0.0 for r in robot_parts)
    return Contacts(
        robot_speed=state.robot_hand_speed,
        hand_to_human_hand=min_distance(hand, b["human_hand"]),
        robot_to_human=min(min_distance(hand, h) for h in humans),
        self_overlap=self_overlap,
        robot_human_overlap=robot_human,
        any_collision=self_overlap or robot_human or obj_hit,
    )

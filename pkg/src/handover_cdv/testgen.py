"""Pseudorandom abstract test generation, unconstrained and constrained."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .seeding import generator
from .stimulus import (
    DISENGAGE_ACTION,
    MAX_TEST_LENGTH,
    AbstractTest,
    Provenance,
    receive,
    send,
    setparam,
)
from .sut import ACTIVATE, INFORM, READY

MAX_IDLE_TICKS = 1200

# one entry per action symbol; the value (if any) is drawn afterwards
ALPHABET = (
    "sendsignal activateRobot",
    "sendsignal humanIsReady",
    "receivesignal informHumanOfHandoverStart",
    "setparam time",
    "setparam hgazeOk",
    "setparam hpressureOk",
    "setparam hlocationOk",
    "disengage",
)

ACTIVATION_PREFIX = (send(ACTIVATE), receive(INFORM), send(READY))


class ConstraintProfile(str, Enum):
    NONE = "none"
    FORCE_ACTIVATION = "force-activation"


@dataclass(frozen=True)
class GenConfig:
    seed: int
    count: int = 100
    length_range: tuple = (4, 12)
    constraint_profile: ConstraintProfile = ConstraintProfile.NONE

    def __post_init__(self):
        lo, hi = self.length_range
        if not 1 <= lo <= hi <= MAX_TEST_LENGTH:
            raise ValueError(f"length_range must satisfy 1 <= min <= max <= {MAX_TEST_LENGTH}")
        if self.count < 1:
            raise ValueError("count must be positive")


def _action(rng, symbol: int):
    name = ALPHABET[symbol]
    if name == "sendsignal activateRobot":
        return send(ACTIVATE)
    if name == "sendsignal humanIsReady":
        return send(READY)
    if name == "receivesignal informHumanOfHandoverStart":
        return receive(INFORM)
    if name == "disengage":
        return DISENGAGE_ACTION
    param = name.split()[1]
    if param == "time":
        return setparam("time", int(rng.integers(1, MAX_IDLE_TICKS, endpoint=True)))
    return setparam(param, bool(rng.integers(0, 2)))


def random_actions(rng, n: int) -> list:
    return [_action(rng, int(rng.integers(0, len(ALPHABET)))) for _ in range(n)]


def gen_unconstrained(cfg: GenConfig) -> list:
    if cfg.constraint_profile is not ConstraintProfile.NONE:
        raise ValueError("gen_unconstrained needs constraint_profile = none")
    rng = generator(cfg.seed)
    lo, hi = cfg.length_range
    tests = []
    for i in range(cfg.count):
        n = int(rng.integers(lo, hi, endpoint=True))
        tests.append(AbstractTest(f"u{i:04d}", tuple(random_actions(rng, n)), Provenance.UNCONSTRAINED))
    return tests


def gen_constrained(cfg: GenConfig) -> list:
    """Every test opens with activation, the announcement wait, and the ready signal."""
    if cfg.constraint_profile is not ConstraintProfile.FORCE_ACTIVATION:
        raise ValueError("gen_constrained needs constraint_profile = force-activation")
    rng = generator(cfg.seed)
    lo, hi = cfg.length_range
    tests = []
    for i in range(cfg.count):
        n = max(len(ACTIVATION_PREFIX), int(rng.integers(lo, hi, endpoint=True)))
        actions = ACTIVATION_PREFIX + tuple(random_actions(rng, n - len(ACTIVATION_PREFIX)))
        tests.append(AbstractTest(f"c{i:04d}", actions, Provenance.CONSTRAINED))
    return tests

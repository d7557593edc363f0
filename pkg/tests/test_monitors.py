from dataclasses import replace

import numpy as np
import pytest

from handover_cdv.monitors import (
    REQUIREMENTS,
    MonitorIntegrityError,
    MonitorSuite,
    VerdictState,
    check_trace,
)
from handover_cdv.stimulus import (
    AbstractTest,
    Event,
    Profile,
    RangeCatalog,
    SimTrace,
    concretize,
    drive,
    receive,
    send,
)
from handover_cdv.sut import ACTIVATE, INFORM, READY, RobotConfig
from handover_cdv.testgen import random_actions
from handover_cdv.world import SPEED_LIMIT, Pose, WorldConfig, contacts, initial_state

from oracles import geometry, linear_scan, random_trace

W = WorldConfig()
CFG = RobotConfig(sensing_timeout=10)


def snap(tick, speed=0.0, **kw):
    return Event(tick, "snapshot", {"state": replace(initial_state(W), tick=tick, robot_hand_speed=speed, **kw)})


def trace(*extra, end=None, conclusive=True, speeds=None):
    """Snapshots on every tick up to the last event, plus the given controller events."""
    last = max([e.tick for e in extra] + [end or 0])
    speeds = speeds or {}
    events = [Event(0, "fsm_entered", {"location": "WaitActivation"})]
    by_tick = {}
    for e in extra:
        by_tick.setdefault(e.tick, []).append(e)
    for t in range(last + 1):
        events.append(snap(t, speeds.get(t, 0.0)))
        events.extend(by_tick.get(t, []))
    events.append(Event(last, "run_end", {"conclusive": conclusive}))
    return SimTrace(events)


def verdicts(tr, config=CFG):
    return {v.requirement_id: v.state.value for v in check_trace(tr, config)}


def entered(tick, loc):
    return Event(tick, "fsm_entered", {"location": loc})


def outcome(tick, value, gpl=None):
    return Event(tick, "outcome", {"value": value, "gpl": gpl, "location": "Deciding"})


def sensed(tick, gpl):
    return Event(tick, "sensing_complete", {"gpl": gpl})


class TestDecisionMonitors:
    def test_release_on_all_ok_passes(self):
        v = verdicts(trace(entered(3, "Sensing"), sensed(5, "111"), entered(5, "Deciding"),
                           outcome(5, "Released", "111")))
        assert v["R1"] == "Passed"
        assert v["R2"] == "NotCovered"

    def test_release_on_partial_reading_fails_r2(self):
        v = verdicts(trace(sensed(5, "110"), outcome(5, "Released", "110")))
        assert v["R2"] == "Failed"
        assert v["R1"] == "NotCovered"

    def test_trigger_without_outcome_fails(self):
        assert verdicts(trace(sensed(5, "111"), end=8))["R1"] == "Failed"

    def test_timed_out_run_does_not_trigger(self):
        v = verdicts(trace(entered(2, "TimedOutEnd"), outcome(2, "TimedOut")))
        assert v["R1"] == v["R2"] == "NotCovered"


class TestLatency:
    def test_within_timeout(self):
        v = verdicts(trace(entered(2, "Sensing"), entered(12, "Deciding")))
        assert v["R3"] == "Passed"

    def test_late_exit_fails(self):
        v = verdicts(trace(entered(2, "Sensing"), entered(13, "Deciding")))
        assert v["R3"] == "Failed"

    def test_run_ending_inside_sensing_is_judged_at_the_end(self):
        assert verdicts(trace(entered(2, "Sensing"), end=20))["R3"] == "Failed"
        assert verdicts(trace(entered(2, "Sensing"), end=9))["R3"] == "Passed"


class TestOutcomeTotality:
    def test_exactly_one_outcome(self):
        assert verdicts(trace(outcome(4, "Released")))["R4"] == "Passed"

    def test_two_outcomes_fail(self):
        assert verdicts(trace(outcome(4, "Released"), outcome(5, "NotReleased")))["R4"] == "Failed"

    def test_no_outcome_fails(self):
        assert verdicts(trace(end=4))["R4"] == "Failed"

    def test_inconclusive_run_is_not_covered(self):
        assert verdicts(trace(end=4, conclusive=False))["R4"] == "NotCovered"


class TestSpeed:
    def test_restricted_start_window(self):
        # moving fast after the first location change is fine for R6 but not for R8a
        tr = trace(entered(3, "AnnounceStart"), end=6, speeds={1: 0.1, 2: 0.2, 5: 0.4})
        v = verdicts(tr)
        assert v["R6"] == "Passed"
        assert v["R8a"] == "Failed"

    def test_fast_start_fails_r6(self):
        tr = trace(entered(3, "AnnounceStart"), end=4, speeds={1: SPEED_LIMIT})
        assert verdicts(tr)["R6"] == "Failed"

    def test_limit_is_strict(self):
        assert verdicts(trace(end=3, speeds={1: SPEED_LIMIT - 1e-9}))["R8a"] == "Passed"
        assert verdicts(trace(end=3, speeds={1: SPEED_LIMIT}))["R8a"] == "Failed"

    def test_standing_still_covers_nothing(self):
        v = verdicts(trace(end=5))
        assert v["R6"] == v["R8a"] == "NotCovered"

    def test_near_human_uses_hand_distance(self):
        near = replace(initial_state(W), tick=1, robot_hand=Pose(W.human_hand_rest.x - 0.11,
                                                                 W.human_hand_rest.y, W.human_hand_rest.z))
        assert contacts(near, W).robot_to_human <= 0.10
        events = [Event(0, "fsm_entered", {"location": "WaitActivation"}), snap(0),
                  Event(1, "snapshot", {"state": replace(near, robot_hand_speed=0.3)}),
                  Event(1, "run_end", {"conclusive": True})]
        assert verdicts(SimTrace(events))["R8b"] == "Failed"


class TestGripper:
    def test_close_far_from_human_passes(self):
        assert verdicts(trace(Event(2, "gripper", {"action": "closed"})))["R5"] == "Passed"

    def test_close_on_human_hand_fails(self):
        s = replace(initial_state(W), tick=1, robot_hand=W.human_hand_rest)
        events = [Event(0, "fsm_entered", {"location": "WaitActivation"}), snap(0),
                  Event(1, "snapshot", {"state": s}), Event(1, "gripper", {"action": "closed"}),
                  Event(1, "run_end", {"conclusive": True})]
        assert verdicts(SimTrace(events))["R5"] == "Failed"


class TestIntegrity:
    def test_out_of_order_event(self):
        suite = MonitorSuite(CFG)
        suite.feed(snap(3))
        with pytest.raises(MonitorIntegrityError):
            suite.feed(snap(2))

    def test_event_after_run_end(self):
        suite = MonitorSuite(CFG)
        suite.feed(Event(0, "run_end", {"conclusive": True}))
        with pytest.raises(MonitorIntegrityError):
            suite.feed(snap(0))

    def test_gripper_without_snapshot(self):
        suite = MonitorSuite(CFG)
        suite.feed(snap(0))
        with pytest.raises(MonitorIntegrityError):
            suite.feed(Event(1, "gripper", {"action": "closed"}))

    def test_one_verdict_per_requirement(self):
        assert [v.requirement_id for v in check_trace(trace(end=2))] == list(REQUIREMENTS)


class TestAgainstLinearScan:
    def test_random_traces(self):
        rng = np.random.default_rng(31)
        for _ in range(300):
            events = random_trace(rng)
            got = verdicts(SimTrace(events))
            assert got == linear_scan(events, CFG.sensing_timeout)

    def test_simulated_traces(self):
        rng = np.random.default_rng(32)
        for i in range(25):
            t = AbstractTest(f"r{i}", tuple(random_actions(rng, 8)))
            c = concretize(t, RangeCatalog(), i, Profile.SHORT_TIMEOUTS)
            cfg = c.robot_config(RobotConfig())
            tr = drive(c, cfg)
            got = {v.requirement_id: v.state.value for v in check_trace(tr, cfg)}
            assert got == linear_scan(tr.events, cfg.sensing_timeout)

    def test_live_and_replayed_verdicts_agree(self):
        c = concretize(AbstractTest("t", tuple(random_actions(np.random.default_rng(3), 10))), RangeCatalog(), 1)
        cfg = c.robot_config(RobotConfig())
        suite = MonitorSuite(cfg)
        tr = drive(c, cfg, listeners=[suite])
        assert suite.verdicts() == check_trace(tr, cfg)
        assert all(v.state in VerdictState for v in suite.verdicts())


class TestInvariants:
    def test_empty_run_covers_only_totality(self):
        v = verdicts(SimTrace([Event(0, "run_end", {"conclusive": True})]))
        assert [r for r, s in v.items() if s != "NotCovered"] == ["R4"]

    def test_simulated_runs(self):
        rng = np.random.default_rng(33)
        for i in range(25):
            t = AbstractTest(f"r{i}", (send(ACTIVATE), receive(INFORM), send(READY)) + tuple(random_actions(rng, 5)))
            c = concretize(t, RangeCatalog(), i, Profile.SHORT_TIMEOUTS)
            cfg = c.robot_config(RobotConfig())
            tr = drive(c, cfg)
            v = {x.requirement_id: x.state.value for x in check_trace(tr, cfg)}
            # a run senses at most one latched reading
            assert v["R1"] == "NotCovered" or v["R2"] == "NotCovered"
            fast_near = [g for g in (geometry(e.data["state"]) for e in tr.of_kind("snapshot"))
                         if g["speed"] >= SPEED_LIMIT and g["near_human"] <= 0.10]
            if fast_near:
                assert v["R8a"] == v["R8b"] == "Failed"

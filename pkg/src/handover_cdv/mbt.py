"""Discrete-timed automata, an explicit-state checker, and witness-to-test projection.

Time advances in whole ticks. Clocks are integers capped one above the largest
constant the network compares them against, which keeps the product graph
finite without changing any guard outcome. Synchronisation is broadcast: an
emitter never blocks, and every other automaton with an enabled receive edge
for the channel takes its first such edge.
"""

from __future__ import annotations

import operator
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Optional

from .coverage import GPL_ORDER, CrossTuple, tuple_universe
from .seeding import run_seed
from .stimulus import (
    DISENGAGE_ACTION,
    AbstractTest,
    Profile,
    Provenance,
    RangeCatalog,
    concretize,
    receive,
    send,
    setparam,
)
from .sut import ACTIVATE, INFORM, READY, Loc, Outcome
from .world import WorldConfig

DEFAULT_BUDGET = 10 ** 7

OPS = {
    "<": operator.lt,
    "<=": operator.le,
    "==": operator.eq,
    "!=": operator.ne,
    ">=": operator.ge,
    ">": operator.gt,
}


class ModelError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    def __init__(self, budget: int):
        super().__init__(f"state-space budget of {budget} states exceeded")
        self.budget = budget


class WitnessError(ValueError):
    pass


# --- syntax ------------------------------------------------------------------


class Atom(NamedTuple):
    """``lhs op rhs``; lhs names a clock or variable, rhs is an int or a variable name."""

    lhs: str
    op: str
    rhs: object

    def text(self) -> str:
        return f"{self.lhs}{self.op}{self.rhs}"


class Sync(NamedTuple):
    direction: str  # "!" emits, "?" receives
    channel: str

    def text(self) -> str:
        return f"{self.channel}{self.direction}"


def emit(channel: str) -> Sync:
    return Sync("!", channel)


def recv(channel: str) -> Sync:
    return Sync("?", channel)


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    guard: tuple = ()
    sync: Optional[Sync] = None
    updates: tuple = ()  # (variable, int or variable name), applied in order
    resets: tuple = ()
    weight: float = 1.0

    def text(self) -> str:
        parts = [f"{self.source} -> {self.target}"]
        if self.guard:
            parts.append("guard " + " && ".join(a.text() for a in self.guard))
        if self.sync:
            parts.append("sync " + self.sync.text())
        if self.updates:
            parts.append("update " + ", ".join(f"{v}:={e}" for v, e in self.updates))
        if self.resets:
            parts.append("reset " + ", ".join(f"{c}:=0" for c in self.resets))
        if self.weight != 1.0:
            parts.append(f"weight {self.weight:g}")
        return "  ".join(parts)


@dataclass(frozen=True)
class Automaton:
    id: str
    actor: str
    locations: tuple
    initial: str
    edges: tuple
    invariants: dict = field(default_factory=dict)  # location -> ((clock, upper bound), ...)


@dataclass(frozen=True)
class Network:
    automata: tuple
    clocks: tuple
    variables: dict  # name -> (lo, hi, initial)
    channels: tuple

    def __post_init__(self):
        for a in self.automata:
            if a.initial not in a.locations:
                raise ModelError(f"{a.id}: initial location {a.initial!r} is not declared")
            for loc, inv in a.invariants.items():
                if loc not in a.locations:
                    raise ModelError(f"{a.id}: invariant on unknown location {loc!r}")
                for clock, _ in inv:
                    if clock not in self.clocks:
                        raise ModelError(f"{a.id}: invariant uses undeclared clock {clock!r}")
            for e in a.edges:
                self._check_edge(a, e)
        for name, (lo, hi, init) in self.variables.items():
            if not lo <= init <= hi:
                raise ModelError(f"variable {name} starts outside [{lo}, {hi}]")

    def _check_edge(self, a, e):
        if e.source not in a.locations or e.target not in a.locations:
            raise ModelError(f"{a.id}: edge {e.source}->{e.target} uses an unknown location")
        if e.weight <= 0:
            raise ModelError(f"{a.id}: branch weights must be positive")
        names = set(self.clocks) | set(self.variables)
        for atom in e.guard:
            if atom.lhs not in names or atom.op not in OPS:
                raise ModelError(f"{a.id}: bad guard {atom.text()}")
            if isinstance(atom.rhs, str) and atom.rhs not in self.variables:
                raise ModelError(f"{a.id}: guard compares with unknown {atom.rhs!r}")
            # clock caps are only sound against constants
            if atom.lhs in self.clocks and not isinstance(atom.rhs, int):
                raise ModelError(f"{a.id}: clock {atom.lhs} must be compared with a constant")
        for var, expr in e.updates:
            if var not in self.variables or (isinstance(expr, str) and expr not in self.variables):
                raise ModelError(f"{a.id}: bad update {var}:={expr}")
        for c in e.resets:
            if c not in self.clocks:
                raise ModelError(f"{a.id}: reset of undeclared clock {c!r}")
        if e.sync and e.sync.channel not in self.channels:
            raise ModelError(f"{a.id}: undeclared channel {e.sync.channel!r}")

    def index(self, automaton_id: str) -> int:
        for i, a in enumerate(self.automata):
            if a.id == automaton_id:
                return i
        raise KeyError(automaton_id)

    def max_constant(self) -> int:
        consts = [0]
        for a in self.automata:
            for inv in a.invariants.values():
                consts.extend(b for _, b in inv)
            for e in a.edges:
                consts.extend(atom.rhs for atom in e.guard
                              if atom.lhs in self.clocks and isinstance(atom.rhs, int))
        return max(consts)

    def text(self) -> str:
        lines = ["clocks " + " ".join(self.clocks)]
        for name, (lo, hi, init) in self.variables.items():
            lines.append(f"var {name} [{lo}..{hi}] = {init}")
        lines.append("chan broadcast " + " ".join(self.channels))
        for a in self.automata:
            lines.append(f"automaton {a.id} actor {a.actor} init {a.initial}")
            for loc in a.locations:
                inv = a.invariants.get(loc, ())
                suffix = "  inv " + " && ".join(f"{c}<={b}" for c, b in inv) if inv else ""
                lines.append(f"  location {loc}{suffix}")
            for i, e in enumerate(a.edges):
                lines.append(f"  edge {i}: {e.text()}")
        return "\n".join(lines) + "\n"


# --- semantics ---------------------------------------------------------------


class State(NamedTuple):
    locations: tuple
    clocks: tuple
    values: tuple


class Step(NamedTuple):
    """One witness step; ``automaton is None`` means DelayOneTick."""

    automaton: Optional[int]
    edge: Optional[int]

    @property
    def is_delay(self) -> bool:
        return self.automaton is None

    def text(self) -> str:
        return "delay" if self.is_delay else f"fire {self.automaton}.{self.edge}"


DELAY = Step(None, None)


class View:
    """Read-only name-based access to a state, for predicates."""

    def __init__(self, net: Network, state: State):
        self.net = net
        self.state = state

    def loc(self, automaton_id: str) -> str:
        return self.state.locations[self.net.index(automaton_id)]

    def __getitem__(self, name: str) -> int:
        if name in self.net.variables:
            return self.state.values[list(self.net.variables).index(name)]
        return self.state.clocks[self.net.clocks.index(name)]


class Semantics:
    def __init__(self, net: Network, cap: Optional[int] = None):
        self.net = net
        self.cap = net.max_constant() + 1 if cap is None else cap
        if self.cap <= net.max_constant():
            raise ModelError("clock cap must exceed every constant in the network")
        self.var_names = list(net.variables)
        self.var_pos = {v: i for i, v in enumerate(self.var_names)}
        self.clock_pos = {c: i for i, c in enumerate(net.clocks)}
        self.bounds = [net.variables[v][:2] for v in self.var_names]
        # per automaton, per location: outgoing edge indices (in edge order)
        self.out = []
        for a in net.automata:
            by_loc = {loc: [] for loc in a.locations}
            for i, e in enumerate(a.edges):
                by_loc[e.source].append(i)
            self.out.append(by_loc)

    def initial(self) -> State:
        return State(
            tuple(a.initial for a in self.net.automata),
            (0,) * len(self.net.clocks),
            tuple(self.net.variables[v][2] for v in self.var_names),
        )

    def _value(self, state: State, name):
        if isinstance(name, int):
            return name
        if name in self.var_pos:
            return state.values[self.var_pos[name]]
        return state.clocks[self.clock_pos[name]]

    def guard_ok(self, state: State, guard) -> bool:
        return all(OPS[a.op](self._value(state, a.lhs), self._value(state, a.rhs)) for a in guard)

    def invariants_ok(self, state: State) -> bool:
        for a, loc in zip(self.net.automata, state.locations):
            for clock, bound in a.invariants.get(loc, ()):
                if state.clocks[self.clock_pos[clock]] > bound:
                    return False
        return True

    def _apply(self, values: list, clocks: list, edge: Edge) -> bool:
        for var, expr in edge.updates:
            v = expr if isinstance(expr, int) else values[self.var_pos[expr]]
            lo, hi = self.bounds[self.var_pos[var]]
            if not lo <= v <= hi:
                return False
            values[self.var_pos[var]] = v
        for c in edge.resets:
            clocks[self.clock_pos[c]] = 0
        return True

    def fire(self, state: State, ai: int, ei: int):
        """Fire edge ``ei`` of automaton ``ai``; returns (successor, participants) or None."""
        auto = self.net.automata[ai]
        edge = auto.edges[ei]
        if edge.source != state.locations[ai] or (edge.sync and edge.sync.direction == "?"):
            return None
        if not self.guard_ok(state, edge.guard):
            return None
        moves = [(ai, ei)]
        if edge.sync:
            # receivers are chosen on the pre-state, as the emitter's guard was
            for aj, other in enumerate(self.net.automata):
                if aj == ai:
                    continue
                for ej in self.out[aj][state.locations[aj]]:
                    r = other.edges[ej]
                    if r.sync == recv(edge.sync.channel) and self.guard_ok(state, r.guard):
                        moves.append((aj, ej))
                        break
        locs, clocks, values = list(state.locations), list(state.clocks), list(state.values)
        for aj, ej in moves:
            e = self.net.automata[aj].edges[ej]
            if not self._apply(values, clocks, e):
                return None
            locs[aj] = e.target
        nxt = State(tuple(locs), tuple(clocks), tuple(values))
        if not self.invariants_ok(nxt):
            return None
        return nxt, moves

    def delay(self, state: State) -> Optional[State]:
        nxt = state._replace(clocks=tuple(min(c + 1, self.cap) for c in state.clocks))
        return nxt if self.invariants_ok(nxt) else None

    def successors(self, state: State):
        """(step, successor) pairs in tie-break order: edges by (automaton, index), then delay."""
        for ai in range(len(self.net.automata)):
            for ei in self.out[ai][state.locations[ai]]:
                r = self.fire(state, ai, ei)
                if r is not None:
                    yield Step(ai, ei), r[0]
        d = self.delay(state)
        if d is not None:
            yield DELAY, d


# --- properties and checking -------------------------------------------------


class Kind(str, Enum):
    REACH = "Reach"
    SAFE = "Safe"


@dataclass(frozen=True)
class Property:
    name: str
    kind: Kind
    predicate: Callable  # View -> bool


class Verdict(str, Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    NOT_REACHABLE = "NotReachable"


class CheckResult(NamedTuple):
    verdict: Verdict
    witness: Optional[tuple]  # a shortest path for Reach-Holds and Safe-Fails
    states: int

    @property
    def reachable(self) -> bool:
        return self.witness is not None


def _search(net: Network, goal: Callable, budget: int, cap: Optional[int]):
    sem = Semantics(net, cap)
    start = sem.initial()
    if goal(View(net, start)):
        return (), 1
    parent = {start: None}
    queue = deque([start])
    while queue:
        s = queue.popleft()
        for step, t in sem.successors(s):
            if t in parent:
                continue
            parent[t] = (s, step)
            if len(parent) > budget:
                raise BudgetExceeded(budget)
            if goal(View(net, t)):
                path = []
                while parent[t] is not None:
                    t, step = parent[t]
                    path.append(step)
                return tuple(reversed(path)), len(parent)
            queue.append(t)
    return None, len(parent)


def check(net: Network, prop: Property, budget: int = DEFAULT_BUDGET, cap: Optional[int] = None) -> CheckResult:
    """Breadth-first search; the witness is the lexicographically least among the shortest."""
    if prop.kind is Kind.REACH:
        path, n = _search(net, prop.predicate, budget, cap)
        return CheckResult(Verdict.HOLDS if path is not None else Verdict.NOT_REACHABLE, path, n)
    path, n = _search(net, lambda v: not prop.predicate(v), budget, cap)
    return CheckResult(Verdict.FAILS if path is not None else Verdict.HOLDS, path, n)


def reachable_states(net: Network, budget: int = DEFAULT_BUDGET, cap: Optional[int] = None) -> set:
    sem = Semantics(net, cap)
    seen = {sem.initial()}
    queue = deque(seen)
    while queue:
        for _, t in sem.successors(queue.popleft()):
            if t not in seen:
                seen.add(t)
                if len(seen) > budget:
                    raise BudgetExceeded(budget)
                queue.append(t)
    return seen


def replay(net: Network, witness, cap: Optional[int] = None) -> list:
    """States visited by ``witness``, starting from the initial state; raises on an illegal step."""
    sem = Semantics(net, cap)
    states = [sem.initial()]
    for i, step in enumerate(witness):
        s = states[-1]
        if step.is_delay:
            nxt = sem.delay(s)
        else:
            if not 0 <= step.automaton < len(net.automata) or not 0 <= step.edge < len(
                    net.automata[step.automaton].edges):
                raise WitnessError(f"step {i}: no such edge {step.text()}")
            r = sem.fire(s, step.automaton, step.edge)
            nxt = r[0] if r else None
        if nxt is None:
            raise WitnessError(f"step {i} ({step.text()}) is not enabled")
        states.append(nxt)
    return states


def validate_witness(net: Network, prop: Property, witness, cap: Optional[int] = None) -> bool:
    try:
        final = replay(net, witness, cap)[-1]
    except WitnessError:
        return False
    holds = prop.predicate(View(net, final))
    return holds if prop.kind is Kind.REACH else not holds


# --- the handover protocol ---------------------------------------------------

HUMAN = "Human"
ROBOT = "Robot"

CH_ACTIVATE = ACTIVATE
CH_INFORM = INFORM
CH_READY = READY
CH_SET_GPL = "setGPL"
CH_RELEASE = "release"
CH_NOT_RELEASE = "notRelease"
CH_TIMEOUT = "timeout"
CH_DISENGAGE = "disengage"
CHANNELS = (CH_ACTIVATE, CH_INFORM, CH_READY, CH_SET_GPL, CH_RELEASE, CH_NOT_RELEASE, CH_TIMEOUT, CH_DISENGAGE)

OUT_CODES = {Outcome.TIMED_OUT: 1, Outcome.RELEASED: 2, Outcome.NOT_RELEASED: 3}
ALL_OK = 7


@dataclass(frozen=True)
class ModelConfig:
    """Abstract timing: model ticks per timeout, and ticks a reading must hold to be latched."""

    activation_timeout: int = 3
    ready_timeout: int = 3
    sensing_timeout: int = 4
    settle: int = 2
    pickup: int = 1


def gpl_code(bits: str) -> int:
    return int(bits, 2)


def gpl_bits(code: int) -> str:
    return format(code, "03b")


def build_protocol_model(cfg: ModelConfig = ModelConfig()) -> Network:
    L = Loc
    x = "x"
    y = "y"
    out = {o: OUT_CODES[o] for o in Outcome}

    human_edges = [
        Edge("Idle", "AwaitInform", sync=emit(CH_ACTIVATE)),
        Edge("AwaitInform", "Informed", sync=recv(CH_INFORM)),
        Edge("Informed", "Ready", sync=emit(CH_READY)),
    ]
    human_edges += [Edge("Ready", "Ready", sync=emit(CH_SET_GPL), updates=(("gpl", g),)) for g in range(8)]
    human_edges.append(Edge("Ready", "Gone", sync=emit(CH_DISENGAGE), updates=(("gpl", 0),), weight=0.1))
    human = Automaton(HUMAN, "Human", ("Idle", "AwaitInform", "Informed", "Ready", "Gone"), "Idle",
                      tuple(human_edges))

    def to(loc, *extra_updates, sync=None, guard=()):
        return dict(target=loc.value, sync=sync, guard=guard, updates=tuple(extra_updates))

    robot_edges = [
        Edge(L.WAIT_ACTIVATION.value, L.ANNOUNCE_START.value, sync=recv(CH_ACTIVATE),
             updates=(("act", 1),), resets=(x,)),
        Edge(L.WAIT_ACTIVATION.value, L.TIMED_OUT_END.value, guard=(Atom(x, ">=", cfg.activation_timeout),),
             sync=emit(CH_TIMEOUT), updates=(("out", out[Outcome.TIMED_OUT]),), resets=(x,)),
        Edge(L.ANNOUNCE_START.value, L.PICK_OBJECT.value, sync=emit(CH_INFORM), resets=(x,)),
        Edge(L.PICK_OBJECT.value, L.PICK_OBJECT.value, sync=recv(CH_READY), updates=(("rdy", 1),)),
        Edge(L.PICK_OBJECT.value, L.HOLD_OUT.value, guard=(Atom(x, ">=", cfg.pickup),), resets=(x,)),
        Edge(L.HOLD_OUT.value, L.HOLD_OUT.value, sync=recv(CH_READY), updates=(("rdy", 1),)),
        Edge(L.HOLD_OUT.value, L.WAIT_HUMAN_READY.value, guard=(Atom(x, ">=", cfg.pickup),), resets=(x,)),
        Edge(L.WAIT_HUMAN_READY.value, L.SENSING.value, guard=(Atom("rdy", "==", 1),), resets=(x, y)),
        Edge(L.WAIT_HUMAN_READY.value, L.SENSING.value, sync=recv(CH_READY), updates=(("rdy", 1),),
             resets=(x, y)),
        Edge(L.WAIT_HUMAN_READY.value, L.TIMED_OUT_END.value, guard=(Atom(x, ">=", cfg.ready_timeout),),
             sync=emit(CH_TIMEOUT), updates=(("out", out[Outcome.TIMED_OUT]),), resets=(x,)),
        Edge(L.SENSING.value, L.SENSING.value, sync=recv(CH_SET_GPL), resets=(y,)),
        Edge(L.SENSING.value, L.SENSING.value, sync=recv(CH_DISENGAGE), updates=(("dis", 1),), resets=(y,)),
        Edge(L.SENSING.value, L.DECIDING.value, guard=(Atom(y, ">=", cfg.settle),),
             updates=(("lat", "gpl"),), resets=(x,)),
        Edge(L.SENSING.value, L.TIMED_OUT_END.value,
             guard=(Atom(x, ">=", cfg.sensing_timeout), Atom(y, "<", cfg.settle)),
             sync=emit(CH_TIMEOUT), updates=(("lat", "gpl"), ("out", out[Outcome.TIMED_OUT])), resets=(x,)),
        Edge(L.DECIDING.value, L.RELEASING.value, guard=(Atom("lat", "==", ALL_OK),), sync=emit(CH_RELEASE),
             updates=(("out", out[Outcome.RELEASED]),), resets=(x,)),
        Edge(L.DECIDING.value, L.NOT_RELEASING.value, guard=(Atom("lat", "!=", ALL_OK),),
             sync=emit(CH_NOT_RELEASE), updates=(("out", out[Outcome.NOT_RELEASED]),), resets=(x,)),
        Edge(L.RELEASING.value, L.DONE.value),
        Edge(L.NOT_RELEASING.value, L.DONE.value),
        Edge(L.TIMED_OUT_END.value, L.DONE.value),
    ]
    urgent = ((x, 0),)
    invariants = {
        L.WAIT_ACTIVATION.value: ((x, cfg.activation_timeout),),
        L.ANNOUNCE_START.value: urgent,
        L.PICK_OBJECT.value: ((x, cfg.pickup),),
        L.HOLD_OUT.value: ((x, cfg.pickup),),
        L.WAIT_HUMAN_READY.value: ((x, cfg.ready_timeout),),
        L.SENSING.value: ((x, cfg.sensing_timeout),),
        L.DECIDING.value: urgent,
        L.RELEASING.value: urgent,
        L.NOT_RELEASING.value: urgent,
        L.TIMED_OUT_END.value: urgent,
    }
    robot = Automaton(ROBOT, "Robot", tuple(l.value for l in Loc), L.WAIT_ACTIVATION.value,
                      tuple(robot_edges), invariants)
    variables = {
        "act": (0, 1, 0),
        "rdy": (0, 1, 0),
        "gpl": (0, 7, 0),
        "lat": (-1, 7, -1),
        "dis": (0, 1, 0),
        "out": (0, 3, 0),
    }
    return Network((human, robot), (x, y), variables, CHANNELS)


def human_event(v: View) -> str:
    if v["dis"]:
        return "Disengaged"
    if v["lat"] >= 0:
        return "GPL=" + gpl_bits(v["lat"])
    if v["act"]:
        return "ActivSignal"
    return "NotActive"


def tuple_property(t: CrossTuple) -> Property:
    code = OUT_CODES[Outcome(t.robot)]
    return Property(f"tuple:{t.key}", Kind.REACH, lambda v: v["out"] == code and human_event(v) == t.human)


REQUIREMENT_PROPERTIES = {
    "R1": lambda v: v["out"] == OUT_CODES[Outcome.RELEASED],
    "R2": lambda v: v["out"] == OUT_CODES[Outcome.NOT_RELEASED] and v["dis"] == 0,
    "R3": lambda v: v.loc(ROBOT) == Loc.DECIDING.value,
    "R4": lambda v: v["out"] != 0,
}


def requirement_property(req: str) -> Property:
    try:
        return Property(f"req:{req}", Kind.REACH, REQUIREMENT_PROPERTIES[req])
    except KeyError:
        raise ModelError(f"no model property for requirement {req!r}") from None


def tuple_properties() -> list:
    return [tuple_property(t) for t, _ in tuple_universe()]


def named_property(name: str) -> Property:
    """``tuple:<human>,<robot>`` or ``req:R1`` .. ``req:R4``."""
    kind, _, rest = name.partition(":")
    if kind == "tuple":
        try:
            return tuple_property(CrossTuple.from_key(rest))
        except ValueError as e:
            raise ModelError(str(e)) from None
    if kind == "req":
        return requirement_property(rest)
    raise ModelError(f"unknown property {name!r}")


def expand_targets(text: str) -> list:
    """Target list from config text; ``all-tuples``, ``reqs`` and comma-free names separated by ';'."""
    props = []
    for item in (s.strip() for s in text.split(";")):
        if not item:
            continue
        if item == "all-tuples":
            props.extend(tuple_properties())
        elif item == "reqs":
            props.extend(requirement_property(r) for r in REQUIREMENT_PROPERTIES)
        else:
            props.append(named_property(item))
    return props


def reachable_locations(net: Network, automaton_id: str = ROBOT) -> set:
    i = net.index(automaton_id)
    return {s.locations[i] for s in reachable_states(net)}


# --- projection --------------------------------------------------------------


def witness_to_abstract_test(net: Network, witness, test_id: str = "m0000", target: str = "") -> AbstractTest:
    """Human-side view of a witness: the human's emissions, the robot signals it waited on, and waits."""
    states = replay(net, witness)
    sem = Semantics(net)
    hi = net.index(HUMAN)
    actions = []
    idle = 0

    def flush():
        nonlocal idle
        if idle:
            actions.append(setparam("time", idle))
            idle = 0

    for step, before in zip(witness, states):
        if step.is_delay:
            idle += 1
            continue
        _, moves = sem.fire(before, step.automaton, step.edge)
        edge = net.automata[step.automaton].edges[step.edge]
        if step.automaton == hi:
            flush()
            actions.extend(_human_actions(edge))
        elif any(aj == hi for aj, _ in moves[1:]) and edge.sync.channel == CH_INFORM:
            flush()
            actions.append(receive(INFORM))
    flush()
    if not actions:
        actions.append(setparam("time", 0))
    return AbstractTest(test_id, tuple(actions), Provenance.MODEL_BASED, target)


def _human_actions(edge: Edge) -> list:
    ch = edge.sync.channel if edge.sync else None
    if ch in (CH_ACTIVATE, CH_READY):
        return [send(ch)]
    if ch == CH_DISENGAGE:
        return [DISENGAGE_ACTION]
    if ch == CH_SET_GPL:
        bits = gpl_bits(dict(edge.updates)["gpl"])
        return [setparam(name, b == "1") for name, b in zip(("hgazeOk", "hpressureOk", "hlocationOk"), bits)]
    return []


# --- targeted generation -----------------------------------------------------


@dataclass
class TargetedSuite:
    abstract: list
    concrete: list
    unreachable: list  # property names
    witnesses: dict  # property name -> witness


def generate_targeted(targets, n: int, profile: Profile, seed: int, net: Optional[Network] = None,
                      catalog: RangeCatalog = RangeCatalog(), world: WorldConfig = WorldConfig(),
                      id_prefix: str = "m") -> TargetedSuite:
    """One abstract test per reachable target, each concretized ``n`` times; run k gets run_seed(seed, k)."""
    net = build_protocol_model() if net is None else net
    suite = TargetedSuite([], [], [], {})
    for prop in targets:
        result = check(net, prop)
        if prop.kind is not Kind.REACH or not result.reachable:
            suite.unreachable.append(prop.name)
            continue
        test = witness_to_abstract_test(net, result.witness, f"{id_prefix}{len(suite.abstract):04d}", prop.name)
        suite.abstract.append(test)
        suite.witnesses[prop.name] = result.witness
    for test in suite.abstract:
        for _ in range(n):
            k = len(suite.concrete)
            suite.concrete.append(concretize(test, catalog, run_seed(seed, k), profile, world))
    return suite


__all__ = [
    "Atom", "Automaton", "BudgetExceeded", "CheckResult", "Edge", "Kind", "ModelConfig", "ModelError",
    "Network", "Property", "Semantics", "State", "Step", "TargetedSuite", "Verdict", "View", "WitnessError",
    "build_protocol_model", "check", "emit", "expand_targets", "generate_targeted", "named_property",
    "reachable_locations", "reachable_states", "recv", "replay", "requirement_property", "tuple_properties",
    "validate_witness", "witness_to_abstract_test", "GPL_ORDER",
]

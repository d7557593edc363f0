"""Requirements, cross-product and statement coverage, and their merging."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .monitors import REQUIREMENTS, VerdictState
from .stimulus import FSM_ENTERED, HUMAN_ACTION, OUTCOME, SNAPSHOT, STATEMENT, SimTrace
from .sut import Loc, Outcome, statement_table


class CoverageIntegrityError(RuntimeError):
    pass


GPL_ORDER = ("111", "000", "001", "010", "011", "100", "101", "110")
HUMAN_EVENTS = ("NotActive", "ActivSignal") + tuple(f"GPL={b}" for b in GPL_ORDER) + ("Disengaged",)
ROBOT_OUTCOMES = tuple(o.value for o in Outcome)


class CrossTuple(NamedTuple):
    human: str
    robot: str

    @property
    def key(self) -> str:
        return f"{self.human},{self.robot}"

    @classmethod
    def from_key(cls, key: str) -> "CrossTuple":
        human, _, robot = key.rpartition(",")
        if human not in HUMAN_EVENTS or robot not in ROBOT_OUTCOMES:
            raise ValueError(f"not a cross-product tuple: {key!r}")
        return cls(human, robot)

    def pretty(self) -> str:
        h = self.human
        if h.startswith("GPL="):
            h = "GPL=(" + ",".join("1" if b == "1" else "~1" for b in h[4:]) + ")"
        return f"<{h}, {self.robot}>"


def _unreachable(t: CrossTuple) -> bool:
    h, r = t
    if h in ("NotActive", "ActivSignal"):
        return r != Outcome.TIMED_OUT.value
    if h == "GPL=111":
        return r == Outcome.NOT_RELEASED.value
    # every other GPL and Disengaged
    return r == Outcome.RELEASED.value


def tuple_universe() -> list:
    """All 33 tuples with a reachability tag, in reporting order."""
    return [(CrossTuple(h, r), not _unreachable(CrossTuple(h, r))) for h in HUMAN_EVENTS for r in ROBOT_OUTCOMES]


def classify_trace(trace: SimTrace) -> Optional[CrossTuple]:
    if not trace.conclusive:
        return None
    _check_snapshots(trace)
    outcome = None
    sensing_entry = None
    activated = False
    disengage_ticks = []
    for ev in trace.events:
        if ev.kind == FSM_ENTERED:
            loc = ev.data["location"]
            if loc == Loc.SENSING.value and sensing_entry is None:
                sensing_entry = ev.tick
            elif loc == Loc.ANNOUNCE_START.value:
                activated = True
        elif ev.kind == HUMAN_ACTION and ev.data["action"] == "disengage":
            disengage_ticks.append(ev.tick)
        elif ev.kind == OUTCOME and outcome is None:
            outcome = ev
    if outcome is None:
        raise CoverageIntegrityError("conclusive trace without an outcome")
    robot = outcome.data["value"]
    if sensing_entry is not None and any(sensing_entry < d <= outcome.tick for d in disengage_ticks):
        human = "Disengaged"
    elif outcome.data.get("gpl") is not None:
        human = "GPL=" + outcome.data["gpl"]
    elif activated:
        human = "ActivSignal"
    else:
        human = "NotActive"
    return CrossTuple(human, robot)


def _check_snapshots(trace: SimTrace) -> None:
    seen = {ev.tick for ev in trace.events if ev.kind == SNAPSHOT}
    last = trace.events[-1].tick if trace.events else 0
    if len(seen) != last + 1 or min(seen, default=1) != 0 or max(seen) != last:
        raise CoverageIntegrityError("trace is missing per-tick snapshots")


def statement_hits(trace: SimTrace) -> set:
    return {ev.data["id"] for ev in trace.of_kind(STATEMENT)}


def table_digest(table=None) -> str:
    table = statement_table() if table is None else table
    h = hashlib.sha256()
    for sid, loc, desc in table:
        h.update(f"{sid}|{getattr(loc, 'value', loc)}|{desc}\n".encode())
    return h.hexdigest()[:16]


def blocks(table=None) -> dict:
    table = statement_table() if table is None else table
    out = {}
    for sid, loc, _ in table:
        out.setdefault(getattr(loc, "value", loc), []).append(sid)
    return out


def stmt_coverage(hit_sets: Iterable, table=None) -> dict:
    """Union of hits across traces, as percentages per FSM block and overall."""
    table = statement_table() if table is None else table
    known = {sid for sid, _, _ in table}
    hits = set()
    for s in hit_sets:
        s = set(s)
        unknown = s - known
        if unknown:
            raise CoverageIntegrityError(f"unknown statement ids {sorted(unknown)}")
        hits |= s
    per_block = {}
    for loc, ids in blocks(table).items():
        per_block[loc] = 100.0 * len(hits.intersection(ids)) / len(ids)
    return {"blocks": per_block, "overall": 100.0 * len(hits) / len(known) if known else 0.0}


@dataclass
class CoverageReport:
    runs: int = 0
    conclusive: int = 0
    errors: int = 0
    requirements: dict = field(default_factory=lambda: {r: [0, 0, 0] for r in REQUIREMENTS})
    tuples: dict = field(default_factory=lambda: {t.key: 0 for t, _ in tuple_universe()})
    statements: set = field(default_factory=set)
    table: str = field(default_factory=table_digest)
    metadata: dict = field(default_factory=dict)
    # per-campaign columns kept through merges: name -> {runs, requirements, tuples}
    parts: dict = field(default_factory=dict)

    def add_run(self, verdicts, cross: Optional[CrossTuple], hits: Iterable[int]) -> None:
        self.runs += 1
        for v in verdicts:
            row = self.requirements[v.requirement_id]
            if v.state is VerdictState.PASSED:
                row[0] += 1
                row[1] += 1
            elif v.state is VerdictState.FAILED:
                row[0] += 1
                row[2] += 1
        if cross is not None:
            self.conclusive += 1
            self.tuples[cross.key] += 1
        self.statements |= set(hits)

    def add_error(self) -> None:
        self.runs += 1
        self.errors += 1

    def stmt(self) -> dict:
        return stmt_coverage([self.statements])

    def seal(self, name: str) -> "CoverageReport":
        """Record this report's totals as the single column ``name``."""
        self.parts = {name: {
            "runs": self.runs,
            "requirements": {r: list(row) for r, row in self.requirements.items()},
            "tuples": dict(self.tuples),
        }}
        return self

    def any_failed(self) -> bool:
        return any(row[2] for row in self.requirements.values())

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "conclusive": self.conclusive,
            "errors": self.errors,
            "requirements": {r: {"covered": c, "passed": p, "failed": f}
                             for r, (c, p, f) in self.requirements.items()},
            "tuples": dict(self.tuples),
            "statements": sorted(self.statements),
            "statement_coverage": self.stmt(),
            "statement_table": self.table,
            "metadata": self.metadata,
            "parts": self.parts,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoverageReport":
        return cls(
            runs=d["runs"],
            conclusive=d["conclusive"],
            errors=d.get("errors", 0),
            requirements={r: [v["covered"], v["passed"], v["failed"]] for r, v in d["requirements"].items()},
            tuples=dict(d["tuples"]),
            statements=set(d["statements"]),
            table=d["statement_table"],
            metadata=dict(d.get("metadata", {})),
            parts=dict(d.get("parts", {})),
        )


def merge(reports: Iterable[CoverageReport]) -> CoverageReport:
    out = CoverageReport()
    for r in reports:
        if r.table != out.table:
            raise CoverageIntegrityError("reports come from different statement tables")
        out.runs += r.runs
        out.conclusive += r.conclusive
        out.errors += r.errors
        for req, row in r.requirements.items():
            out.requirements[req] = [a + b for a, b in zip(out.requirements[req], row)]
        for k, n in r.tuples.items():
            out.tuples[k] += n
        out.statements |= r.statements
        for name, part in r.parts.items():
            key, k = name, 2
            while key in out.parts:
                key, k = f"{name}#{k}", k + 1
            out.parts[key] = part
    return out

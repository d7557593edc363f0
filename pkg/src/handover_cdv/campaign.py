"""Campaign configuration, execution, and on-disk artifacts."""

from __future__ import annotations

import dataclasses
import gzip
import json
import logging
import platform
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import NamedTuple, Optional

from .coverage import CoverageReport, CrossTuple, classify_trace, statement_hits
from .mbt import ModelError, expand_targets, generate_targeted
from .monitors import MonitorSuite, MonitorVerdict, VerdictState
from .seeding import gen_seed, run_seed
from .stimulus import DEFAULT_RANGES, ConcreteTest, Profile, RangeCatalog, concretize, drive
from .sut import RobotConfig, SpeedProfile
from .testgen import ConstraintProfile, GenConfig, gen_constrained, gen_unconstrained
from .world import WorldConfig

log = logging.getLogger(__name__)

GENERATORS = ("unconstrained", "constrained", "model-based")


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def parse_kv(text: str) -> dict:
    """``key = value`` lines; '#' starts a comment. Values keep their line numbers."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", n)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", n)
        out[key] = (value, n)
    return out


def _bool(s: str) -> bool:
    if s.lower() in ("true", "yes", "1"):
        return True
    if s.lower() in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _intervals(s: str) -> tuple:
    ivs = []
    for part in s.split(","):
        lo, sep, hi = part.partition(":")
        if not sep:
            raise ValueError(f"interval {part.strip()!r} is not lo:hi")
        ivs.append((float(lo), float(hi)))
    return tuple(ivs)


@dataclass(frozen=True)
class CampaignConfig:
    generator: str
    seed: int
    name: str = "campaign"
    count: int = 100
    length_min: int = 4
    length_max: int = 12
    targets: str = "all-tuples"
    concretizations: int = 20
    profile: Profile = Profile.DEFAULT
    speed_profile: SpeedProfile = SpeedProfile.FLAWED
    save_traces: bool = True
    max_ticks: Optional[int] = None
    robot: dict = field(default_factory=dict)  # RobotConfig field overrides
    ranges: dict = field(default_factory=dict)  # RangeCatalog entry overrides

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ConfigError(f"generator must be one of {', '.join(GENERATORS)}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def robot_config(self) -> RobotConfig:
        return RobotConfig.for_profile(self.speed_profile, **self.robot)

    def catalog(self) -> RangeCatalog:
        entries = dict(DEFAULT_RANGES)
        entries.update(self.ranges)
        return RangeCatalog(entries)

    def echo(self) -> dict:
        """Everything that determines the campaign's results, in JSON form."""
        d = dataclasses.asdict(self)
        d["profile"] = self.profile.value
        d["speed_profile"] = self.speed_profile.value
        d["ranges"] = {f"{p}.{v}": [list(iv) for iv in ivs] for (p, v), ivs in sorted(self.ranges.items())}
        return d


_ROBOT_FIELDS = {f.name: f.type for f in dataclasses.fields(RobotConfig) if f.name != "speed_profile"}


def load_config(text: str, seed: Optional[int] = None) -> CampaignConfig:
    """Build a config from key-value text; ``seed`` (from the command line) overrides the file."""
    kv = parse_kv(text)
    kw, robot, ranges = {}, {}, {}
    converters = {
        "generator": str, "name": str, "targets": str,
        "seed": lambda s: int(s, 0), "count": int, "length_min": int, "length_max": int,
        "concretizations": int, "max_ticks": int,
        "profile": Profile, "speed_profile": SpeedProfile, "save_traces": _bool,
    }
    for key, (value, line) in kv.items():
        try:
            if key in converters:
                kw[key] = converters[key](value)
            elif key.startswith("robot."):
                fname = key[len("robot."):]
                if fname not in _ROBOT_FIELDS:
                    raise ValueError(f"unknown robot setting {fname!r}")
                robot[fname] = float(value) if _ROBOT_FIELDS[fname] in (float, "float") else int(value)
            elif key.startswith("range."):
                param, _, val = key[len("range."):].rpartition(".")
                if (param, val) not in DEFAULT_RANGES:
                    raise ValueError(f"unknown range {param}.{val}")
                ranges[(param, val)] = _intervals(value)
            else:
                raise ValueError(f"unknown key {key!r}")
        except (ValueError, TypeError) as e:
            raise ConfigError(str(e), line) from None
    if seed is not None:
        kw["seed"] = seed
    for required in ("generator", "seed"):
        if required not in kw:
            raise ConfigError(f"missing required key {required!r}")
    try:
        cfg = CampaignConfig(robot=robot, ranges=ranges, **kw)
        cfg.robot_config()
        cfg.catalog()
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return cfg


# --- test construction -------------------------------------------------------


class GeneratedTests(NamedTuple):
    abstract: list
    concrete: list
    unreachable: list


def build_tests(cfg: CampaignConfig, world: WorldConfig = WorldConfig()) -> GeneratedTests:
    catalog = cfg.catalog()
    if cfg.generator == "model-based":
        try:
            targets = expand_targets(cfg.targets)
        except ModelError as e:
            raise ConfigError(str(e)) from None
        suite = generate_targeted(targets, cfg.concretizations, cfg.profile, cfg.seed,
                                  catalog=catalog, world=world)
        return GeneratedTests(suite.abstract, suite.concrete, suite.unreachable)
    if cfg.generator == "unconstrained":
        gc = GenConfig(gen_seed(cfg.seed), cfg.count, (cfg.length_min, cfg.length_max))
        abstract = gen_unconstrained(gc)
    else:
        gc = GenConfig(gen_seed(cfg.seed), cfg.count, (cfg.length_min, cfg.length_max),
                       ConstraintProfile.FORCE_ACTIVATION)
        abstract = gen_constrained(gc)
    concrete = [concretize(t, catalog, run_seed(cfg.seed, k), cfg.profile, world) for k, t in enumerate(abstract)]
    return GeneratedTests(abstract, concrete, [])


# --- execution ---------------------------------------------------------------


class RunSummary(NamedTuple):
    index: int
    test: str
    seed: int
    tuple: Optional[str]
    verdicts: tuple  # MonitorVerdict, in requirement order
    hits: tuple
    error: Optional[str] = None

    @property
    def name(self) -> str:
        return run_name(self.index)


def run_name(index: int) -> str:
    return f"run-{index:05d}"


def write_gz(path: Path, text: str) -> None:
    # mtime=0 keeps the archive bytes a function of the content only
    path.write_bytes(gzip.compress(text.encode(), mtime=0))


def read_gz(path: Path) -> str:
    return gzip.decompress(Path(path).read_bytes()).decode()


def execute(index: int, test: ConcreteTest, robot: RobotConfig, world: WorldConfig = WorldConfig(),
            catalog: Optional[RangeCatalog] = None, out: Optional[Path] = None, save_traces: bool = True,
            max_ticks: Optional[int] = None) -> RunSummary:
    """Drive one test and check it; a crash becomes an error summary, never an exception."""
    name = run_name(index)
    try:
        suite = MonitorSuite(test.robot_config(robot), world)
        trace = drive(test, robot, world, catalog, listeners=[suite], max_ticks=max_ticks)
        verdicts = tuple(suite.verdicts())
        cross = classify_trace(trace)
        hits = tuple(sorted(statement_hits(trace)))
        summary = RunSummary(index, test.abstract.id, test.seed, cross.key if cross else None, verdicts, hits)
        if out is not None:
            if save_traces:
                trace.meta["run"] = name
                write_gz(out / "traces" / f"{name}.jsonl.gz", trace.to_jsonl())
            (out / "verdicts" / f"{name}.json").write_text(json.dumps(summary_dict(summary), indent=1) + "\n")
        return summary
    except Exception as e:
        log.warning("%s crashed: %s", name, e)
        if out is not None:
            (out / "errors" / f"{name}.txt").write_text(traceback.format_exc())
        return RunSummary(index, test.abstract.id, test.seed, None, (), (), f"{type(e).__name__}: {e}")


def summary_dict(s: RunSummary) -> dict:
    return {
        "run": s.name,
        "test": s.test,
        "seed": s.seed,
        "tuple": s.tuple,
        "verdicts": [v.to_dict() for v in s.verdicts],
        "statements": list(s.hits),
        "error": s.error,
    }


def _execute_job(job):
    return execute(*job)


class CampaignResult(NamedTuple):
    config: CampaignConfig
    tests: GeneratedTests
    runs: list
    report: CoverageReport


def run_campaign(cfg: CampaignConfig, out: Optional[Path] = None, jobs: int = 1,
                 world: WorldConfig = WorldConfig()) -> CampaignResult:
    """Generate, concretize, drive and check every test, then merge coverage in run order."""
    if jobs < 1:
        raise ConfigError("jobs must be at least 1")
    tests = build_tests(cfg, world)
    out = Path(out) if out is not None else None
    if out is not None:
        write_tests(out, tests)
        for sub in ("traces", "verdicts", "errors"):
            (out / sub).mkdir(parents=True, exist_ok=True)
    robot, catalog = cfg.robot_config(), cfg.catalog()
    job_list = [(k, t, robot, world, catalog, out, cfg.save_traces, cfg.max_ticks)
                for k, t in enumerate(tests.concrete)]
    started = datetime.now(timezone.utc)
    if jobs == 1 or len(job_list) <= 1:
        runs = [_execute_job(j) for j in job_list]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            runs = list(ex.map(_execute_job, job_list, chunksize=max(1, len(job_list) // (4 * jobs))))
    report = CoverageReport()
    for r in runs:
        if r.error is not None:
            report.add_error()
        else:
            report.add_run(r.verdicts, CrossTuple.from_key(r.tuple) if r.tuple else None, r.hits)
    report.metadata = {
        "config": cfg.echo(),
        "abstract_tests": len(tests.abstract),
        "unreachable_targets": list(tests.unreachable),
        "runs": [{"run": r.name, "test": r.test, "seed": r.seed, "tuple": r.tuple, "error": r.error,
                  "failed": [v.requirement_id for v in r.verdicts if v.state is VerdictState.FAILED]}
                 for r in runs],
    }
    report.seal(cfg.name)
    if out is not None:
        write_report(out, report)
        info = {"started": started.isoformat(), "finished": datetime.now(timezone.utc).isoformat(),
                "jobs": jobs, "python": platform.python_version()}
        (out / "run_info.json").write_text(json.dumps(info, indent=1) + "\n")
    return CampaignResult(cfg, tests, runs, report)


def write_tests(out: Path, tests: GeneratedTests) -> None:
    (out / "tests" / "abstract").mkdir(parents=True, exist_ok=True)
    for t in tests.abstract:
        (out / "tests" / "abstract" / f"{t.id}.test").write_text(t.text())
    for k, c in enumerate(tests.concrete):
        (out / "tests" / f"{run_name(k)}.test").write_text(c.text())
    if tests.unreachable:
        (out / "tests" / "unreachable.txt").write_text("\n".join(tests.unreachable) + "\n")


def write_report(out: Path, report: CoverageReport) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")


def load_report(path: Path) -> CoverageReport:
    return CoverageReport.from_dict(json.loads(Path(path).read_text()))


def load_verdicts(path: Path) -> list:
    d = json.loads(Path(path).read_text())
    return [MonitorVerdict(v["req"], VerdictState(v["state"]), v["trigger_tick"]) for v in d["verdicts"]]

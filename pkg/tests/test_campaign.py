import json

import pytest

from handover_cdv import campaign
from handover_cdv.campaign import (
    CampaignConfig,
    ConfigError,
    build_tests,
    load_config,
    load_report,
    load_verdicts,
    parse_kv,
    read_gz,
    run_campaign,
)
from handover_cdv.stimulus import AbstractTest, ConcreteTest, Profile, SimTrace
from handover_cdv.sut import SpeedProfile


def small(generator="constrained", **kw):
    base = dict(generator=generator, seed=11, name="small", count=4, length_min=4, length_max=8,
                concretizations=1, targets="reqs")
    base.update(kw)
    return CampaignConfig(**base)


class TestConfigParsing:
    def test_parse_kv(self):
        kv = parse_kv("# header\ngenerator = constrained\n\nseed=3  # inline\n")
        assert kv == {"generator": ("constrained", 2), "seed": ("3", 4)}

    def test_missing_equals_reports_line(self):
        with pytest.raises(ConfigError) as e:
            parse_kv("generator = constrained\nseed 3\n")
        assert e.value.line == 2

    def test_duplicate_key_reports_line(self):
        with pytest.raises(ConfigError) as e:
            parse_kv("seed = 1\nseed = 2\n")
        assert e.value.line == 2

    def test_full_config(self):
        cfg = load_config("""
generator = model-based
seed = 0x10
targets = reqs
concretizations = 3
profile = short
speed_profile = safe
robot.sensing_settle = 20
range.hlocationOk.true = 0.05:0.08
""")
        assert cfg.seed == 16
        assert cfg.profile is Profile.SHORT_TIMEOUTS
        assert cfg.robot_config().speed_profile is SpeedProfile.SAFE
        assert cfg.robot_config().sensing_settle == 20
        assert cfg.catalog().get("hlocationOk", "true") == ((0.05, 0.08),)

    def test_command_line_seed_wins(self):
        assert load_config("generator = constrained\nseed = 1\n", seed=9).seed == 9

    @pytest.mark.parametrize("text,line", [
        ("generator = constrained\nseed = 1\ncolour = red\n", 3),
        ("generator = constrained\nseed = one\n", 2),
        ("generator = constrained\nseed = 1\nrobot.warp = 3\n", 3),
        ("generator = constrained\nseed = 1\nrange.hgazeOk.maybe = 0:1\n", 3),
        ("generator = constrained\nseed = 1\nrange.hgazeOk.true = 0.1\n", 3),
        ("generator = constrained\nseed = 1\nsave_traces = perhaps\n", 3),
        ("generator = constrained\nseed = 1\nprofile = fast\n", 3),
    ])
    def test_bad_values_name_their_line(self, text, line):
        with pytest.raises(ConfigError) as e:
            load_config(text)
        assert e.value.line == line
        assert f"line {line}" in str(e.value)

    @pytest.mark.parametrize("text", [
        "seed = 1\n",
        "generator = constrained\n",
        "generator = random\nseed = 1\n",
        "generator = constrained\nseed = -1\n",
        "generator = constrained\nseed = 1\nrobot.sensing_settle = 0\n",
    ])
    def test_invalid_configs(self, text):
        with pytest.raises(ConfigError):
            load_config(text)

    def test_echo_is_json(self):
        cfg = load_config("generator = constrained\nseed = 1\nrange.hgazeOk.true = 0:1\n")
        assert json.loads(json.dumps(cfg.echo()))["ranges"] == {"hgazeOk.true": [[0.0, 1.0]]}


class TestBuildTests:
    def test_counts_per_generator(self):
        assert len(build_tests(small("unconstrained")).concrete) == 4
        assert len(build_tests(small("constrained")).concrete) == 4
        mb = build_tests(small("model-based", concretizations=2))
        assert len(mb.abstract) == 4 and len(mb.concrete) == 8

    def test_bad_target_is_a_config_error(self):
        with pytest.raises(ConfigError):
            build_tests(small("model-based", targets="tuple:Nothing,Released"))


class TestRunCampaign:
    def test_directory_layout(self, tmp_path):
        res = run_campaign(small(), tmp_path)
        assert (tmp_path / "report.json").is_file()
        assert (tmp_path / "run_info.json").is_file()
        assert len(list((tmp_path / "tests" / "abstract").glob("*.test"))) == 4
        for k in range(4):
            name = f"run-{k:05d}"
            ConcreteTest.parse((tmp_path / "tests" / f"{name}.test").read_text())
            trace = SimTrace.from_jsonl(read_gz(tmp_path / "traces" / f"{name}.jsonl.gz"))
            assert trace.meta["run"] == name
            assert load_verdicts(tmp_path / "verdicts" / f"{name}.json") == list(res.runs[k].verdicts)
        assert load_report(tmp_path / "report.json") == res.report

    def test_abstract_files_parse(self, tmp_path):
        run_campaign(small("model-based"), tmp_path)
        for p in (tmp_path / "tests" / "abstract").glob("*.test"):
            assert AbstractTest.parse(p.read_text()).target.startswith("req:")

    def test_report_is_reproducible(self, tmp_path):
        run_campaign(small(), tmp_path / "a")
        run_campaign(small(), tmp_path / "b")
        assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()

    def test_parallel_equals_serial(self, tmp_path):
        run_campaign(small(), tmp_path / "serial")
        run_campaign(small(), tmp_path / "parallel", jobs=2)
        for rel in ("report.json", "traces/run-00002.jsonl.gz", "verdicts/run-00003.json"):
            assert (tmp_path / "serial" / rel).read_bytes() == (tmp_path / "parallel" / rel).read_bytes()

    def test_other_seed_differs(self, tmp_path):
        a = run_campaign(small(), None).report
        b = run_campaign(small(seed=12), None).report
        assert a.metadata["runs"] != b.metadata["runs"]

    def test_crash_is_isolated(self, tmp_path, monkeypatch):
        real = campaign.drive
        calls = []

        def flaky(test, *a, **kw):
            calls.append(test.abstract.id)
            if len(calls) == 2:
                raise RuntimeError("simulator fell over")
            return real(test, *a, **kw)

        monkeypatch.setattr(campaign, "drive", flaky)
        res = run_campaign(small(), tmp_path)
        assert res.report.runs == 4 and res.report.errors == 1
        assert "simulator fell over" in (tmp_path / "errors" / "run-00001.txt").read_text()
        assert not (tmp_path / "verdicts" / "run-00001.json").exists()
        assert (tmp_path / "verdicts" / "run-00002.json").exists()
        assert res.runs[1].error == "RuntimeError: simulator fell over"

    def test_traces_can_be_skipped(self, tmp_path):
        run_campaign(small(save_traces=False), tmp_path)
        assert not list((tmp_path / "traces").iterdir())

    def test_unreachable_targets_recorded(self, tmp_path):
        cfg = small("model-based", targets="tuple:NotActive,Released;req:R1")
        res = run_campaign(cfg, tmp_path)
        assert res.report.metadata["unreachable_targets"] == ["tuple:NotActive,Released"]
        assert (tmp_path / "tests" / "unreachable.txt").read_text() == "tuple:NotActive,Released\n"

    def test_jobs_must_be_positive(self):
        with pytest.raises(ConfigError):
            run_campaign(small(), None, jobs=0)

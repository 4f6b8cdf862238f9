import json

import pytest

from sublinmorse.harness import (
    ConfigError,
    ExperimentConfig,
    emit,
    main,
    parse_letters,
    parse_target,
    run,
)
from sublinmorse.spaces import RegularTree, parse_space


class TestConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig("census", params={"R": 4}, seed=9)
        assert ExperimentConfig.from_json(json.dumps(cfg.to_json())) == cfg

    def test_unknown_field(self):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_json({"experiment": "census", "colour": "red"})

    def test_unknown_param(self):
        with pytest.raises(ConfigError):
            ExperimentConfig("census", params={"radius": 4})

    def test_unknown_experiment(self):
        with pytest.raises(ConfigError):
            ExperimentConfig("nope")


class TestTargets:
    def test_letters(self):
        assert parse_letters("aBc") == (1, -2, 3)

    def test_tree_ray(self):
        T = RegularTree(2)
        _, ray = parse_target(T, "ray:b/aB")
        assert ray.kind == "ray"

    def test_bad_target(self):
        with pytest.raises(ConfigError):
            parse_target(parse_space("h2"), "ray:north")


class TestRun:
    def test_deterministic(self):
        cfg = ExperimentConfig("contract", "e2", {"radii": [10, 20], "trials": 100}, seed=7)
        assert run(cfg).verdict_json() == run(cfg).verdict_json()

    def test_workers_do_not_matter(self):
        a = run(ExperimentConfig("walk", params={"n": 200, "trials": 16}, seed=3, workers=1))
        b = run(ExperimentConfig("walk", params={"n": 200, "trials": 16}, seed=3, workers=8))
        assert a.verdict_json() == b.verdict_json()

    def test_bad_space_is_structured(self):
        rep = run(ExperimentConfig("contract", "h3"))
        assert not rep.ok and rep.error["type"] == "ConfigError"


class TestEmit:
    def test_json_only_without_series(self, tmp_path):
        rep = run(ExperimentConfig("kappa-fit", params={"R": [10, 20, 40], "values": [1, 2, 3]}))
        emit(rep, tmp_path)
        assert sorted(p.name for p in tmp_path.iterdir()) == ["run.json", "verdict.json"]

    def test_thick_csv_header(self, tmp_path):
        rep = run(ExperimentConfig("thick", "h2", {"target": "ray:0.3", "T": [50, 100]}))
        emit(rep, tmp_path)
        assert (tmp_path / "thick.csv").read_text().splitlines()[0] == "T,thick,fraction"

    def test_refuses_overwrite(self, tmp_path):
        rep = run(ExperimentConfig("census", params={"R": 2}))
        emit(rep, tmp_path)
        with pytest.raises(FileExistsError):
            emit(rep, tmp_path)
        emit(rep, tmp_path, force=True)


class TestMain:
    def test_exit_codes(self, tmp_path, capsys):
        assert main(["census", "--gens", "free2", "--R", "3"]) == 0
        assert json.loads(capsys.readouterr().out)["verdict"]["ball"][-1] == 53
        assert main(["contract", "--space", "h3"]) == 2
        assert main(["frobnicate"]) == 1
        assert main(["--out", str(tmp_path), "census", "--R", "2"]) == 0
        assert main(["--out", str(tmp_path), "census", "--R", "2"]) == 2
        assert main(["--out", str(tmp_path), "--force", "census", "--R", "2"]) == 0

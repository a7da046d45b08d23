import csv
import json
import os

import numpy as np
import pytest

from bamc.errors import GenerationFailed, ParseError, SchemaError
from bamc.harness import cli
from bamc.harness.config import GeneratorSpec, load_config, load_instance
from bamc.harness.generators import generate_instance
from bamc.harness.report import emit_report, runs_header
from bamc.harness.runner import ResultSet, run_experiment
from bamc.policies import Policy, SnapshotMode, oracle_static_allocation

from conftest import sym3

INSTANCE = {"states": 3, "chains": [sym3(1 / 3).tolist(), sym3(0.6).tolist(), sym3(0.8).tolist()]}


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
    return str(path)


@pytest.fixture
def instance_file(tmp_path):
    return write_json(tmp_path / "instance.json", INSTANCE)


def make_config(tmp_path, instance_file, **extra):
    body = {"instance": instance_file, "budgets": [300]}
    body.update(extra)
    return write_json(tmp_path / "config.json", body)


class TestConfig:
    def test_defaults(self, tmp_path, instance_file):
        cfg = load_config(make_config(tmp_path, instance_file, budgets=[10000]))
        assert cfg.delta == 0.05 and cfg.c == 1.1 and cfg.replications == 100
        assert cfg.smoothing == pytest.approx(1 / 9)
        assert cfg.policies == [Policy.BAMC] and cfg.snapshot_mode is SnapshotMode.OFF
        assert cfg.budgets == [10000] and cfg.instance.K == 3

    def test_unknown_key(self, tmp_path, instance_file):
        with pytest.raises(SchemaError) as e:
            load_config(make_config(tmp_path, instance_file, colour="blue"))
        assert e.value.field == "colour"

    def test_zero_replications(self, tmp_path, instance_file):
        path = make_config(tmp_path, instance_file, replications=0)
        with pytest.raises(SchemaError) as e:
            load_config(path)
        assert e.value.field == "replications"
        lines = open(path).read().splitlines()
        assert '"replications": 0' in lines[e.value.line - 1]

    def test_budget_below_2k(self, tmp_path, instance_file):
        with pytest.raises(SchemaError) as e:
            load_config(make_config(tmp_path, instance_file, budgets=[300, 5]))
        assert e.value.field == "budgets[1]"

    @pytest.mark.parametrize("delta", [0, 1, 1.5, "x"])
    def test_bad_delta(self, tmp_path, instance_file, delta):
        with pytest.raises(SchemaError):
            load_config(make_config(tmp_path, instance_file, delta=delta))

    def test_full_snapshot_cap(self, tmp_path, instance_file):
        with pytest.raises(SchemaError):
            load_config(make_config(tmp_path, instance_file, budgets=[200_000], snapshot_mode="full"))
        cfg = load_config(make_config(tmp_path, instance_file, budgets=[200_000], snapshot_mode="full",
                                      full_snapshot_limit=300_000))
        assert cfg.snapshot_mode is SnapshotMode.FULL

    def test_inline_and_generator(self, tmp_path):
        cfg = load_config(write_json(tmp_path / "c.json", {"instance": INSTANCE, "budgets": [10]}))
        assert cfg.instance_source == "inline"
        gen = {"generator": {"family": "lazy-two-state", "K": 2, "S": 2, "params": {"epsilon": [0.1, 0.3]}}}
        cfg = load_config(write_json(tmp_path / "g.json", {"instance": gen, "budgets": [10]}))
        assert cfg.instance.matrices[1].matrix[1, 0] == 0.3

    def test_parse_error_location(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text('{\n  "instance": "x.json",\n  "budgets": [10,]\n}\n')
        with pytest.raises(ParseError) as e:
            load_config(str(p))
        assert e.value.line == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_config(str(tmp_path / "nope.json"))

    def test_instance_errors_name_the_chain(self, tmp_path):
        bad = json.loads(json.dumps(INSTANCE))
        bad["chains"][2][1] = [0.5, 0.6, 0.0]
        with pytest.raises(SchemaError) as e:
            load_instance(write_json(tmp_path / "bad.json", bad))
        assert e.value.field == "chains[2][1]"
        assert e.value.line is not None
        periodic = {"chains": [sym3(0.5).tolist(), [[0, 1, 0], [0, 0, 1], [1, 0, 0]]]}
        with pytest.raises(SchemaError) as e:
            load_instance(write_json(tmp_path / "per.json", periodic))
        assert e.value.field.startswith("chains[1]")


class TestGenerators:
    def test_lazy_exact(self):
        inst = generate_instance(GeneratorSpec("lazy-two-state", 1, 2, {"epsilon": 0.1}), 0)
        assert inst.matrices[0].matrix.tolist() == [[0.5, 0.5], [0.1, 0.9]]

    def test_dirichlet_concentration_limit(self):
        inst = generate_instance(GeneratorSpec("dirichlet-rows", 2, 4, {"concentration": 1e7}), 5)
        for P in inst.matrices:
            assert np.max(np.abs(P.matrix - 0.25)) < 1e-3

    @pytest.mark.parametrize("family,params", [("dirichlet-rows", {"concentration": 0.5}),
                                               ("near-deterministic", {"noise": 0.1})])
    def test_deterministic_and_valid(self, family, params):
        spec = GeneratorSpec(family, 3, 4, params)
        a, b = generate_instance(spec, 11), generate_instance(spec, 11)
        for Pa, Pb in zip(a.matrices, b.matrices):
            assert Pa.matrix.tobytes() == Pb.matrix.tobytes()
            assert Pa.ergodic
        assert abs(a.eta.sum() - 1) < 1e-12
        c = generate_instance(spec, 12)
        assert a.matrices[0].matrix.tobytes() != c.matrices[0].matrix.tobytes()

    def test_retry_cap(self):
        # zero noise makes every chain a deterministic map, never ergodic with positive Gini mass
        with pytest.raises(GenerationFailed):
            generate_instance(GeneratorSpec("near-deterministic", 2, 3, {"noise": 0.0}), 0)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            generate_instance(GeneratorSpec("ring", 1, 3), 0)


class TestRunner:
    def test_single_cell(self, tmp_path, instance_file):
        cfg = load_config(make_config(tmp_path, instance_file, replications=1))
        res = run_experiment(cfg)
        assert len(res.records) == 1 and res.records[0].seed == 0

    def test_byte_identical_reports(self, tmp_path, instance_file):
        cfg = load_config(make_config(tmp_path, instance_file, replications=3,
                                      policies=["bamc", "uniform", "oracle-static"], budgets=[60, 300]))
        a, b = tmp_path / "a", tmp_path / "b"
        emit_report(run_experiment(cfg), cfg.formats, str(a))
        emit_report(run_experiment(cfg), cfg.formats, str(b))
        for name in ("runs.csv", "curves.csv", "summary.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_parallel_matches_serial(self, tmp_path, instance_file):
        cfg = load_config(make_config(tmp_path, instance_file, replications=4, budgets=[60, 120]))
        assert run_experiment(cfg, jobs=2).records == run_experiment(cfg).records

    def test_oracle_cell_allocation(self, tmp_path, instance_file):
        cfg = load_config(make_config(tmp_path, instance_file, replications=2, policies=["oracle-static"],
                                      budgets=[1000]))
        res = run_experiment(cfg)
        expected = oracle_static_allocation(cfg.instance, 1000) / 1000
        for rec in res.cell("oracle-static", 1000):
            np.testing.assert_array_equal(rec.fractions, expected)

    def test_replications_independent(self, tmp_path, instance_file):
        cfg = load_config(make_config(tmp_path, instance_file, replications=200, budgets=[200, 400],
                                      policies=["uniform"]))
        res = run_experiment(cfg)
        x = np.array([r.loss for r in res.cell("uniform", 200)])
        y = np.array([r.loss for r in res.cell("uniform", 400)])
        # lag-1 correlation between consecutive replications
        rho = np.corrcoef(x[:-1], x[1:])[0, 1]
        assert abs(rho) < 3 / np.sqrt(200)
        # same seed across budgets shares the chain path prefix, hence positive correlation
        assert np.corrcoef(x, y)[0, 1] > 0.2


class TestReport:
    def test_empty_result_set(self, tmp_path, instance_file):
        cfg = load_config(make_config(tmp_path, instance_file))
        emit_report(ResultSet(cfg), ("csv",), str(tmp_path / "out"))
        text = (tmp_path / "out" / "runs.csv").read_text()
        assert text == ",".join(runs_header(3)) + "\n"

    def test_columns_and_summary(self, tmp_path, instance_file):
        cfg = load_config(make_config(tmp_path, instance_file, replications=2, budgets=[60, 300]))
        paths = emit_report(run_experiment(cfg), cfg.formats, str(tmp_path / "out"))
        assert [os.path.basename(p) for p in paths] == ["runs.csv", "curves.csv", "summary.json"]
        with open(paths[0]) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["run_id", "policy", "n", "seed", "L_1", "L_2", "L_3", "L", "L_prime", "L_pseudo",
                           "frac_1", "frac_2", "frac_3", "event_c"]
        assert len(rows) == 5
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        lam = summary["instance"]["Lambda"]
        for cell in summary["cells"]:
            assert cell["theory_bounds"]["asymptotic_target"] == pytest.approx(lam / cell["n"])


class TestCli:
    def test_validate(self, instance_file, capsys):
        assert cli.main(["validate", "--instance", instance_file]) == 0
        assert "3 ergodic chain(s)" in capsys.readouterr().out

    def test_analyze(self, instance_file, capsys):
        assert cli.main(["analyze", "--instance", instance_file]) == 0
        out = capsys.readouterr().out
        assert "Lambda" in out and "n_cutoff" in out and "gamma" in out

    def test_run(self, tmp_path, instance_file, capsys):
        cfg = make_config(tmp_path, instance_file, replications=2)
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--seed", "5"]) == 0
        rows = (tmp_path / "o" / "runs.csv").read_text().splitlines()
        assert rows[1].split(",")[3] == "5"

    def test_config_error_exit(self, tmp_path, instance_file, capsys):
        cfg = make_config(tmp_path, instance_file, replications=0)
        assert cli.main(["run", "--config", cfg]) == 2
        assert "replications" in capsys.readouterr().err

    def test_parse_error_exit(self, tmp_path, capsys):
        p = tmp_path / "x.json"
        p.write_text("{\n  oops\n}")
        assert cli.main(["validate", "--instance", str(p)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_runtime_error_exit(self, tmp_path, instance_file, capsys):
        # generator failures are reported against the config field
        gen = {"generator": {"family": "near-deterministic", "K": 1, "S": 3, "params": {"noise": 0.0}}}
        path = write_json(tmp_path / "g.json", {"instance": gen, "budgets": [10]})
        assert cli.main(["run", "--config", path]) == 2
        out_dir = tmp_path / "ro"
        out_dir.write_text("not a directory")
        cfg = make_config(tmp_path, instance_file, replications=1)
        assert cli.main(["run", "--config", cfg, "--out", str(out_dir)]) == 3

import csv
from pathlib import Path

import pytest

from gradplast import cli
from gradplast.config import ConfigError, check_document, load_config, validate_config
from gradplast.scenarios import CheckResult

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
material: {mu: 1.0, lambda: 1.5, sigma0: 0.01, sigma_hat0: 0.015, Lc: 0.1, alpha1: 0.2, alpha2: 0.5}
grid: {axes: [y], cells: [10], h: 0.1}
boundary: {dirichlet: [y-, y+], micro_hard: [y-, y+]}
load: {grad: [[0, 1, 0], [0, 0, 0], [0, 0, 0]], factors: [0.0, 0.03]}
stepping: {dt: 0.25, n_steps: 4}
"""


@pytest.fixture
def small(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_shipped_configs(self):
        assert validate_config(CONFIGS / "strip_shear.yaml") == []
        assert validate_config(CONFIGS / "point_shear.yaml") == []
        diags = validate_config(CONFIGS / "invalid_spin_yield.yaml")
        assert [d.constraint for d in diags] == ["spin_yield_stress_positive"]
        assert diags[0].line == 6

    def test_load_builds_problem(self):
        cfg = load_config(CONFIGS / "strip_shear.yaml")
        assert cfg.grid.shape == (1, 41, 1)
        assert cfg.params.Lc == 0.1
        assert cfg.mask.hard_faces == ("y-", "y+")

    @pytest.mark.parametrize(
        "edit,constraint",
        [
            (("mu: 1.0", "mu: -1.0"), "shear_modulus_positive"),
            (("sigma0: 0.01", "sigma0: 0"), "yield_stress_positive"),
            (("Lc: 0.1", "Lc: -0.1"), "Lc_nonnegative"),
            (("alpha1: 0.2", "alpha1: 0.2, bogus: 1"), "unknown_key"),
        ],
    )
    def test_named_constraints(self, edit, constraint):
        _, diags = check_document(SMALL.replace(*edit))
        assert constraint in [d.constraint for d in diags]

    def test_unknown_section_and_syntax(self):
        _, diags = check_document(SMALL + "extras: {a: 1}\n")
        assert "unknown_section" in [d.constraint for d in diags]
        _, diags = check_document("material: [1, 2\n")
        assert diags[0].constraint == "yaml_syntax"

    def test_load_raises(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text(SMALL.replace("sigma_hat0: 0.015", "sigma_hat0: 0.0"))
        with pytest.raises(ConfigError):
            load_config(p)


class TestCommands:
    def test_validate(self, capsys):
        assert cli.main(["validate", "--config", str(CONFIGS / "strip_shear.yaml")]) == 0
        assert cli.main(["validate", "--config", str(CONFIGS / "invalid_spin_yield.yaml")]) == 2
        assert "spin_yield_stress_positive" in capsys.readouterr().out

    def test_missing_file(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "none.yaml")]) == 2

    def test_point(self, tmp_path):
        assert cli.main(["point", "--config", str(CONFIGS / "point_shear.yaml"), "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "point.csv")
        assert rows[0][:2] == ["t", "eps11"] and len(rows) == 41

    def test_run_config(self, small, tmp_path, capsys):
        assert cli.main(["run", "--config", str(small), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "small.csv").exists()
        assert (tmp_path / "small_final_snapshot.csv").exists()
        assert "PASS" in capsys.readouterr().out

    def test_run_scenario_and_list(self, tmp_path, capsys):
        assert cli.main(["run", "--list"]) == 0
        assert "point_shear" in capsys.readouterr().out
        assert cli.main(["run", "point_shear", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "checks.txt").exists()

    def test_unknown_scenario(self, tmp_path):
        assert cli.main(["run", "nope", "--out", str(tmp_path)]) == 2
        assert cli.main(["run", "--out", str(tmp_path)]) == 2

    def test_sweep(self, small, tmp_path):
        code = cli.main(["sweep", "--config", str(small), "--param", "material.Lc", "--values", "0.2,0.1", "--out", str(tmp_path)])
        assert code == 0
        rows = read_csv(tmp_path / "sweep.csv")
        assert [r[0] for r in rows[1:]] == ["0.20000000000000001", "0.10000000000000001"]
        # the skew part is driven by the backstress and shrinks with Lc
        assert float(rows[1][3]) >= float(rows[2][3])

    def test_sweep_bad_param(self, small, tmp_path):
        assert cli.main(["sweep", "--config", str(small), "--param", "grid.h", "--values", "1", "--out", str(tmp_path)]) == 2

    def test_solver_failure_exit_code(self, tmp_path):
        p = tmp_path / "tight.yaml"
        p.write_text(SMALL + "fixed_point: {max_outer: 1}\n")
        assert cli.main(["run", "--config", str(p), "--out", str(tmp_path)]) == 3

    def test_check_failure_exit_code(self, small, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "check_kkt", lambda res: CheckResult("kkt", False, "forced"))
        assert cli.main(["run", "--config", str(small), "--out", str(tmp_path)]) == 1

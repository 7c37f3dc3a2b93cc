"""CLI: exit codes, output headers, byte-level reproducibility."""

import json

import pytest

from dreidel_lab.cli import main


def run(tmp_path, args, name="out.txt"):
    path = tmp_path / name
    code = main(args + ["-o", str(path)])
    return code, path


class TestExitCodes:
    def test_success(self, tmp_path, capsys):
        code, _ = run(tmp_path, ["exact", "--n", "3"])
        assert code == 0

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["nonsense"])
        assert exc.value.code == 2

    def test_infeasible_is_usage_error(self, tmp_path, capsys):
        code, _ = run(tmp_path, ["construct", "--k", "2", "--n", "20", "--s", "2"])
        assert code == 2

    def test_missing_required_flag(self):
        with pytest.raises(SystemExit) as exc:
            main(["exact"])
        assert exc.value.code == 2


class TestOutputs:
    def test_header_has_runspec(self, tmp_path, capsys):
        _, path = run(tmp_path, ["exact", "--n", "3"], "a.csv")
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# runspec: ")
        spec = json.loads(lines[0].split("# runspec: ", 1)[1])
        assert spec["command"] == "exact" and spec["n"] == 3
        assert lines[1].startswith("# artifact-version: ")

    def test_json_format(self, tmp_path, capsys):
        _, path = run(tmp_path, ["pot-chain", "--xmax", "50", "--format", "json"], "a.json")
        doc = json.loads(path.read_text())
        assert doc["runspec"]["command"] == "pot-chain"
        assert doc["data"]

    def test_lf_endings(self, tmp_path, capsys):
        _, path = run(tmp_path, ["exact", "--n", "2"], "a.csv")
        assert b"\r" not in path.read_bytes()

    def test_scaling_columns(self, tmp_path, capsys):
        _, path = run(
            tmp_path,
            ["scaling", "--k", "2", "--n-list", "5,8", "--mode", "exact"],
            "s.csv",
        )
        lines = path.read_text().splitlines()
        assert lines[2] == "n,mean,se,exact,ratio_to_n2,ratio_to_asymptotic_bound"

    def test_plot_data(self, tmp_path, capsys):
        plot = tmp_path / "plot.dat"
        code = main(
            [
                "scaling", "--k", "2", "--n-list", "5,8", "--mode", "exact",
                "--plot", str(plot), "-o", str(tmp_path / "s.csv"),
            ]
        )
        assert code == 0
        assert plot.read_text().splitlines()[-1].startswith("8 ")


class TestReproducibility:
    @pytest.mark.parametrize(
        "args",
        [
            ["simulate", "--k", "2", "--n", "3", "--trials", "3000", "--seed", "11"],
            ["epochs", "--k", "2", "--epochs", "5000", "--seed", "4"],
            ["wald", "--records", "1000", "--epochs", "5000", "--seed", "2"],
            ["bounds", "--n", "3"],
            ["gamelets", "--k", "2", "--p", "2"],
            ["construct", "--k", "2", "--n", "20", "--s", "60", "--seed", "3"],
        ],
    )
    def test_byte_identical_reruns(self, tmp_path, capsys, args):
        _, a = run(tmp_path, list(args), "a.out")
        _, b = run(tmp_path, list(args), "b.out")
        assert a.read_bytes() == b.read_bytes()

    def test_jobs_do_not_change_bytes(self, tmp_path, capsys):
        base = ["simulate", "--k", "2", "--n", "3", "--trials", "80000", "--seed", "1"]
        _, a = run(tmp_path, base + ["--jobs", "1"], "a.out")
        _, b = run(tmp_path, base + ["--jobs", "4"], "b.out")
        assert a.read_bytes() == b.read_bytes()

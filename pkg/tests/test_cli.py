import json
import subprocess
import sys

import numpy as np

from vilab.cli import main

CSV_HEADER = "iter,fevals,alpha,grad_norm,min_grad_norm_sq,gap,dist,wall_ms"


def read_csv_without_wall(path):
    lines = path.read_text().strip().splitlines()
    return [",".join(line.split(",")[:-1]) for line in lines]


class TestRun:
    def test_zero_iters_header_plus_initial_row(self, tmp_path):
        rc = main(["run", "--problem", "matrix-game", "--kind", "random", "--d", "6",
                   "--solver", "graal,phi=2", "--iters", "0", "--out", str(tmp_path)])
        assert rc == 0
        csvs = [p for p in tmp_path.iterdir() if p.suffixes == [".csv"]]
        assert len(csvs) == 1
        lines = csvs[0].read_text().strip().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 2
        assert lines[1].startswith("0,")

    def test_deterministic_reruns_modulo_wall_ms(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        args = ["run", "--problem", "matrix-game", "--d", "8", "--seed", "3",
                "--solver", "agraal,phi=1.5", "--iters", "200", "--out"]
        assert main(args + [str(a)]) == 0
        assert main(args + [str(b)]) == 0
        fa = sorted(p.name for p in a.iterdir() if p.name.endswith(".csv"))
        fb = sorted(p.name for p in b.iterdir() if p.name.endswith(".csv"))
        assert fa == fb
        for name in fa:
            assert read_csv_without_wall(a / name) == read_csv_without_wall(b / name)

    def test_gap_column_populated_for_games(self, tmp_path):
        rc = main(["run", "--problem", "matrix-game", "--d", "6",
                   "--solver", "graal,phi=2", "--iters", "50", "--out", str(tmp_path)])
        assert rc == 0
        csv = next(p for p in tmp_path.iterdir() if p.suffixes == [".csv"])
        last = csv.read_text().strip().splitlines()[-1].split(",")
        gap = float(last[5])
        assert gap >= 0

    def test_path_sidecar_for_2d(self, tmp_path):
        rc = main(["run", "--problem", "polar", "--a", "0.3333",
                   "--solver", "agraal,phi=1.2", "--iters", "100", "--out", str(tmp_path)])
        assert rc == 0
        path_csv = next(p for p in tmp_path.iterdir() if p.name.endswith(".path.csv"))
        lines = path_csv.read_text().strip().splitlines()
        assert lines[0] == "iter,x,y"
        first = lines[1].split(",")
        assert float(first[1]) == 0.9 and float(first[2]) == 0.9

    def test_summary_json_and_verdicts(self, tmp_path):
        rc = main(["run", "--problem", "qp", "--d", "10", "--solver", "eg",
                   "--solver", "graal,phi=2", "--iters", "100",
                   "--jobs", "2", "--out", str(tmp_path)])
        assert rc == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert len(summary["runs"]) == 2
        for r in summary["runs"]:
            assert r["verdicts"]["feasible_iterates"]
            assert r["verdicts"]["min_grad_norm_sq_nonincreasing"]
            assert r["verdicts"]["fevals_nondecreasing"]

    def test_manifest_with_flag_override(self, tmp_path):
        manifest = tmp_path / "m.toml"
        manifest.write_text(
            'out = "%s"\nrecord_every = 5\n'
            "[problem]\nname = \"matrix-game\"\nd = 6\nseed = 2\n"
            "[[solvers]]\nalgorithm = \"graal\"\nphi = 2.0\nmax_iters = 40\n"
            "[[solvers]]\nalgorithm = \"agraal\"\nphi = 1.5\nmax_iters = 40\n"
            % str(tmp_path / "traces"))
        rc = main(["run", "--manifest", str(manifest), "--iters", "20"])
        assert rc == 0
        out = tmp_path / "traces"
        csvs = [p for p in out.iterdir() if p.suffixes == [".csv"]]
        assert len(csvs) == 2
        for c in csvs:
            rows = c.read_text().strip().splitlines()
            assert rows[-1].split(",")[0] == "20"  # flag overrode manifest iters

    def test_no_solver_is_config_error(self, tmp_path):
        rc = main(["run", "--problem", "qp", "--out", str(tmp_path)])
        assert rc == 2

    def test_unknown_option_is_config_error(self, tmp_path):
        rc = main(["run", "--problem", "qp", "--solver", "eg,bogus=1",
                   "--iters", "5", "--out", str(tmp_path)])
        assert rc == 2

    def test_missing_lipschitz_is_config_error(self, tmp_path):
        # forsaken has no analytic L; EG needs alpha or L
        rc = main(["run", "--problem", "forsaken", "--solver", "eg",
                   "--iters", "5", "--out", str(tmp_path)])
        assert rc == 2

    def test_estimate_l_enables_wm_mode(self, tmp_path):
        rc = main(["run", "--problem", "polar", "--a", "0.3333", "--estimate-l", "100",
                   "--solver", "graal-wm,phi=1.2", "--iters", "50", "--out", str(tmp_path)])
        assert rc == 0

    def test_seed_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("VI_LAB_SEED", "99")
        rc = main(["run", "--problem", "matrix-game", "--d", "6",
                   "--solver", "graal,phi=2", "--iters", "5", "--out", str(tmp_path)])
        assert rc == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["seed"] == 99


class TestOtherCommands:
    def test_sdp_check_passes(self, capsys):
        rc = main(["sdp-check"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "PASS" in out and "FAIL" not in out

    def test_sdp_check_bad_tol(self, capsys):
        assert main(["sdp-check", "--tol", "0"]) == 2

    def test_sdp_check_tighter_cap(self, capsys):
        rc = main(["sdp-check", "--cap", "1.2"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "g11_max <= 1.2: PASS" in out

    def test_estimate_wm(self, capsys):
        rc = main(["estimate-wm", "--problem", "polar", "--a", "0.3333",
                   "--grid-n", "200"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "L_hat" in out and "rho_hat" in out and "phi" in out

    def test_estimate_wm_bad_grid(self):
        assert main(["estimate-wm", "--problem", "polar", "--grid-n", "1"]) == 2

    def test_selftest(self, capsys):
        rc = main(["selftest"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "FAIL" not in out


class TestEntrypoint:
    def test_console_script_runs(self):
        proc = subprocess.run([sys.executable, "-m", "vilab.cli", "estimate-wm",
                               "--problem", "lower-bound", "--a", "1.0", "--b", "-0.5",
                               "--grid-n", "50"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "L_hat" in proc.stdout

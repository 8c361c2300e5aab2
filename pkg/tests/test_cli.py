import json
import math

import numpy as np
import pytest

from deltascat.cli import main, run, validate

Z_SCENE = {
    "wave": {"k": 1.0, "direction": [0.0, 0.0, 1.0]},
    "pt_double_delta": {"r0": [0.0, 0.0, 0.5], "alpha": 1.0, "sigma": 0.4, "gamma": 0.2},
}


def write_scene(tmp_path, payload, name="scene.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def read_csv_table(path):
    header, rows, footers = None, [], {}
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            if "=" in line:
                key, _, value = line[1:].partition("=")
                footers[key.strip()] = value.strip()
            continue
        if header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    return header, rows, footers


class TestValidate:
    def test_valid_scene_empty_report(self, tmp_path):
        path = write_scene(tmp_path, Z_SCENE)
        assert validate(path) == []
        assert run("validate", path) == 0

    def test_coincident_scatterers_named(self, tmp_path):
        scene = {
            "wave": {"k": 1.0, "direction": [0.0, 0.0, 1.0]},
            "scatterers": [
                {"position": [0.0, 0.0, 0.1], "coupling": [1.0, 0.0]},
                {"position": [1.0, 0.0, 0.0], "coupling": [1.0, 0.0]},
                {"position": [0.0, 0.0, 0.1], "coupling": [2.0, 0.0]},
            ],
        }
        path = write_scene(tmp_path, scene)
        report = validate(path)
        assert any("coincident" in line and "0 and 2" in line for line in report)
        assert run("validate", path) == 2

    def test_degenerate_pair_reports_coincident(self, tmp_path):
        scene = dict(Z_SCENE)
        scene["pt_double_delta"] = {"r0": [0.0, 0.0, 0.0], "alpha": 1.0, "sigma": 0.4, "gamma": 0.2}
        report = validate(write_scene(tmp_path, scene))
        assert any("coincident scatterers" in line for line in report)

    def test_non_unit_direction_reported(self, tmp_path):
        scene = {
            "wave": {"k": 1.0, "direction": [0.0, 0.0, 1.2]},
            "scatterers": [{"position": [0.0, 0.0, 0.0], "coupling": 1.0}],
        }
        report = validate(write_scene(tmp_path, scene))
        assert any("not a unit vector" in line for line in report)

    def test_cutoff_below_wavenumber_reported(self, tmp_path):
        scene = {
            "wave": {"k": 2.0, "direction": [0.0, 0.0, 1.0]},
            "scatterers": [{"position": [0.0, 0.0, 0.0], "coupling": -0.4}],
            "scan": {"lambdas": [1.0, 30.0]},
        }
        report = validate(write_scene(tmp_path, scene))
        assert any("<= k" in line for line in report)

    def test_both_scatterer_blocks_rejected(self, tmp_path):
        scene = dict(Z_SCENE)
        scene["scatterers"] = [{"position": [0.0, 0.0, 0.0], "coupling": 1.0}]
        report = validate(write_scene(tmp_path, scene))
        assert any("exactly one" in line for line in report)

    def test_unreadable_file_is_io_error(self, tmp_path):
        with pytest.raises(OSError):
            validate(str(tmp_path / "missing.json"))


class TestAmplitude:
    def test_zero_couplings_give_all_zero_column(self, tmp_path):
        scene = {
            "wave": {"k": 1.0, "direction": [0.0, 0.0, 1.0]},
            "scatterers": [
                {"position": [0.0, 0.0, 0.5], "coupling": [0.0, 0.0]},
                {"position": [0.0, 0.0, -0.5], "coupling": [0.0, 0.0]},
            ],
            "scan": {"directions": {"n_polar": 4, "n_azimuthal": 6}},
        }
        out = tmp_path / "amp.csv"
        assert run("amplitude", write_scene(tmp_path, scene), str(out)) == 0
        header, rows, _ = read_csv_table(out)
        i_re = header.index("f_re[length]")
        i_im = header.index("f_im[length]")
        assert len(rows) == 24
        assert all(float(r[i_re]) == 0.0 and float(r[i_im]) == 0.0 for r in rows)

    def test_scheme_column_and_angles_present(self, tmp_path):
        scene = dict(Z_SCENE)
        scene["scan"] = {"directions": {"n_polar": 3, "n_azimuthal": 4}}
        scene["scheme"] = "closed_form"
        out = tmp_path / "amp.csv"
        assert run("amplitude", write_scene(tmp_path, scene), str(out)) == 0
        header, rows, _ = read_csv_table(out)
        assert header[:5] == ["theta[rad]", "phi[rad]", "s_x[-]", "s_y[-]", "s_z[-]"]
        assert all(r[-1] == "closed_form" for r in rows)

    def test_closed_form_matches_exact_through_cli(self, tmp_path):
        scene = dict(Z_SCENE)
        scene["scan"] = {"directions": {"n_polar": 5, "n_azimuthal": 5}}
        out_exact = tmp_path / "exact.csv"
        out_closed = tmp_path / "closed.csv"
        path = write_scene(tmp_path, scene)
        assert run("amplitude", path, str(out_exact)) == 0
        scene["scheme"] = "closed_form"
        path2 = write_scene(tmp_path, scene, "scene2.json")
        assert run("amplitude", path2, str(out_closed)) == 0
        _, rows_e, _ = read_csv_table(out_exact)
        _, rows_c, _ = read_csv_table(out_closed)
        for re_, rc in zip(rows_e, rows_c):
            assert float(re_[5]) == pytest.approx(float(rc[5]), rel=1e-12)
            assert float(re_[6]) == pytest.approx(float(rc[6]), rel=1e-12)

    def test_missing_scan_block_is_validation_error(self, tmp_path):
        assert run("amplitude", write_scene(tmp_path, Z_SCENE), None) == 2


class TestCrossSection:
    def test_real_couplings_satisfy_optical_identity(self, tmp_path):
        scene = {
            "wave": {"k": 1.2, "direction": [0.0, 0.0, 1.0]},
            "scatterers": [
                {"position": [0.0, 0.0, 0.5], "coupling": -0.4},
                {"position": [0.2, -0.1, -0.5], "coupling": 0.3},
            ],
        }
        out = tmp_path / "cs.csv"
        assert run("cross-section", write_scene(tmp_path, scene), str(out)) == 0
        _, rows, footers = read_csv_table(out)
        sigma = float(footers["sigma_total[length^2]"])
        residual = float(footers["optical_residual[length^2]"])
        assert abs(residual) <= 1e-10 * sigma
        assert len(rows) == 64 * 128

    def test_grid_order_flags(self, tmp_path):
        out = tmp_path / "cs.csv"
        rc = run(
            "cross-section",
            write_scene(tmp_path, Z_SCENE),
            str(out),
            grid_polar=8,
            grid_azimuthal=10,
        )
        assert rc == 0
        _, rows, _ = read_csv_table(out)
        assert len(rows) == 80


class TestField:
    def scene(self):
        scene = dict(Z_SCENE)
        scene["scan"] = {"line": {"start": [0.0, 0.0, -3.0], "stop": [0.0, 0.0, 3.0], "n": 41}}
        return scene

    def test_json_round_trip_reproduces_identical_output(self, tmp_path):
        path = write_scene(tmp_path, self.scene())
        out1 = tmp_path / "field1.json"
        assert run("field", path, str(out1), fmt="json") == 0
        payload = json.loads(out1.read_text())

        # the inputs echo is itself a valid scene: re-run from it
        path2 = write_scene(tmp_path, payload["inputs"], "echo.json")
        out2 = tmp_path / "field2.json"
        assert run("field", path2, str(out2), fmt="json") == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_point_on_scatterer_is_rejected(self, tmp_path):
        scene = dict(Z_SCENE)
        scene["scan"] = {"line": {"start": [0.0, 0.0, 0.5], "stop": [0.0, 0.0, 2.0], "n": 3}}
        assert run("field", write_scene(tmp_path, scene), None) == 2

    def test_plane_scan(self, tmp_path):
        scene = dict(Z_SCENE)
        scene["scan"] = {
            "plane": {
                "origin": [-1.0, -1.0, 2.0],
                "span1": [2.0, 0.0, 0.0],
                "span2": [0.0, 2.0, 0.0],
                "n1": 5,
                "n2": 7,
            }
        }
        out = tmp_path / "plane.csv"
        assert run("field", write_scene(tmp_path, scene), str(out)) == 0
        _, rows, _ = read_csv_table(out)
        assert len(rows) == 35


class TestCompareRB:
    def scene(self):
        scene = dict(Z_SCENE)
        scene["scan"] = {
            "alphas": {"start": 1e-4, "stop": 1e-2, "num": 9, "spacing": "log"},
            "outgoing": [0.0, 1.0, 0.0],
        }
        return scene

    def test_byte_identical_reruns(self, tmp_path):
        path = write_scene(tmp_path, self.scene())
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run("compare-rb", path, str(out1)) == 0
        assert run("compare-rb", path, str(out2)) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_threads_do_not_change_output(self, tmp_path):
        path = write_scene(tmp_path, self.scene())
        out1, out2 = tmp_path / "t1.csv", tmp_path / "t4.csv"
        assert run("compare-rb", path, str(out1), threads=1) == 0
        assert run("compare-rb", path, str(out2), threads=4) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_columns_and_slope_footer(self, tmp_path):
        out = tmp_path / "cmp.csv"
        assert run("compare-rb", write_scene(tmp_path, self.scene()), str(out)) == 0
        header, rows, footers = read_csv_table(out)
        names = [h.split("[")[0] for h in header]
        assert names == [
            "alpha", "k", "f_exact_re", "f_exact_im", "f_rb_re", "f_rb_im",
            "f_neumann_re", "f_neumann_im", "f_born_re", "f_born_im",
            "abs_diff_rb", "abs_diff_neumann", "abs_diff_born",
            "rb_converged", "neumann_converged", "scheme",
        ]
        assert len(rows) == 9
        assert all(r[13] == "1" for r in rows)
        slope = float(footers["rb_discrepancy_loglog_slope"])
        assert slope == pytest.approx(2.0, abs=0.05)

    def test_k_sweep_keeps_schema(self, tmp_path):
        scene = dict(Z_SCENE)
        scene["scan"] = {"ks": [0.8, 1.0, 1.2]}
        out = tmp_path / "ks.csv"
        assert run("compare-rb", write_scene(tmp_path, scene), str(out)) == 0
        header, rows, _ = read_csv_table(out)
        assert header[0].startswith("alpha") and header[1].startswith("k")
        assert len(rows) == 3
        assert {r[0] for r in rows} == {"1"}  # alpha fixed from the pt block

    def test_requires_pair_block(self, tmp_path):
        scene = {
            "wave": {"k": 1.0, "direction": [0.0, 0.0, 1.0]},
            "scatterers": [{"position": [0.0, 0.0, 0.0], "coupling": -0.4}],
            "scan": {"alphas": [1e-3]},
        }
        assert run("compare-rb", write_scene(tmp_path, scene), None) == 2


class TestRenormFlow:
    def test_flow_table(self, tmp_path):
        scene = {
            "wave": {"k": 1.0, "direction": [0.0, 0.0, 1.0]},
            "scatterers": [{"position": [0.0, 0.0, 0.0], "coupling": -0.37}],
            "scan": {"lambdas": [100.0, 1000.0, 10000.0]},
        }
        out = tmp_path / "flow.csv"
        assert run("renorm-flow", write_scene(tmp_path, scene), str(out)) == 0
        header, rows, _ = read_csv_table(out)
        i_dev = header.index("deviation[length]")
        devs = [float(r[i_dev]) for r in rows]
        assert devs[0] > devs[1] > devs[2]
        assert devs[0] / devs[2] >= 50.0

    def test_requires_single_scatterer(self, tmp_path):
        scene = dict(Z_SCENE)
        scene["scan"] = {"lambdas": [100.0]}
        assert run("renorm-flow", write_scene(tmp_path, scene), None) == 2


class TestExitCodes:
    def test_unknown_subcommand_exits_1(self, capsys):
        assert main(["bogus", "--config", "x.json"]) == 1
        assert run("bogus", "x.json") == 1

    def test_no_subcommand_exits_1(self):
        assert main([]) == 1

    def test_help_exits_0(self):
        assert main(["--help"]) == 0

    def test_validation_error_exits_2(self, tmp_path):
        scene = {"wave": {"k": -1.0, "direction": [0.0, 0.0, 1.0]}}
        assert run("amplitude", write_scene(tmp_path, scene), None) == 2

    def test_unreadable_config_exits_2(self, tmp_path):
        assert run("amplitude", str(tmp_path / "nope.json"), None) == 2

    def test_spectral_singularity_exits_3(self, tmp_path, capsys):
        k, r0 = 1.0, 1.0
        c = (4.0 * k * k * r0 * r0 + np.exp(4j * k * r0)) / (64.0 * math.pi**2 * r0 * r0)
        s_star = -2.0 * math.pi * c.imag / c.real
        g_star = math.sqrt(1.0 / c.real - s_star**2)
        scene = {
            "wave": {"k": k, "direction": [0.0, 0.0, 1.0]},
            "pt_double_delta": {"r0": [0.0, 0.0, r0], "alpha": 1.0, "sigma": s_star, "gamma": g_star},
            "scan": {"directions": {"n_polar": 2, "n_azimuthal": 2}},
        }
        assert run("amplitude", write_scene(tmp_path, scene), None) == 3
        err = capsys.readouterr().err
        assert "offending parameters" in err

    def test_divergent_series_scheme_exits_3(self, tmp_path):
        scene = {
            "wave": {"k": 1.0, "direction": [0.0, 0.0, 1.0]},
            "pt_double_delta": {"r0": [0.0, 0.0, 0.05], "alpha": 1e4, "sigma": 1.0, "gamma": 0.0},
            "scan": {"directions": {"n_polar": 2, "n_azimuthal": 2}},
            "scheme": "neumann",
        }
        assert run("amplitude", write_scene(tmp_path, scene), None) == 3


class TestFormats:
    def test_json_payload_structure(self, tmp_path):
        scene = dict(Z_SCENE)
        scene["scan"] = {"directions": {"n_polar": 2, "n_azimuthal": 3}}
        out = tmp_path / "amp.json"
        assert run("amplitude", write_scene(tmp_path, scene), str(out), fmt="json") == 0
        payload = json.loads(out.read_text())
        assert set(payload) == {"subcommand", "inputs", "columns", "units", "rows", "summary"}
        assert payload["subcommand"] == "amplitude"
        assert len(payload["rows"]) == 6
        assert len(payload["columns"]) == len(payload["units"])

    def test_toml_config_accepted(self, tmp_path):
        toml_text = (
            'scheme = "exact"\n'
            "[wave]\nk = 1.0\ndirection = [0.0, 0.0, 1.0]\n"
            "[pt_double_delta]\nr0 = [0.0, 0.0, 0.5]\nalpha = 1.0\nsigma = 0.4\ngamma = 0.2\n"
            "[scan.directions]\nn_polar = 2\nn_azimuthal = 2\n"
        )
        path = tmp_path / "scene.toml"
        path.write_text(toml_text, encoding="utf-8")
        out = tmp_path / "amp.csv"
        assert run("amplitude", str(path), str(out)) == 0
        _, rows, _ = read_csv_table(out)
        assert len(rows) == 4

    def test_stdout_when_no_output_path(self, tmp_path, capsys):
        scene = dict(Z_SCENE)
        scene["scan"] = {"directions": {"n_polar": 1, "n_azimuthal": 2}}
        assert run("amplitude", write_scene(tmp_path, scene), None) == 0
        out = capsys.readouterr().out
        assert out.startswith("# deltascat amplitude")
        assert out.endswith("\n")

    def test_csv_uses_lf_and_17_digits(self, tmp_path):
        scene = dict(Z_SCENE)
        scene["scan"] = {"directions": {"n_polar": 1, "n_azimuthal": 1}}
        out = tmp_path / "amp.csv"
        assert run("amplitude", write_scene(tmp_path, scene), str(out)) == 0
        blob = out.read_bytes()
        assert b"\r" not in blob
        # one third of pi survives 17 significant digits
        value = f"{math.pi / 3.0:.17g}"
        assert float(value) == math.pi / 3.0


def test_console_entry_point_runs(tmp_path):
    import subprocess
    import sys

    path = write_scene(tmp_path, dict(Z_SCENE, scan={"directions": {"n_polar": 1, "n_azimuthal": 2}}))
    proc = subprocess.run(
        [sys.executable, "-m", "deltascat.cli", "amplitude", "--config", path],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("# deltascat amplitude")

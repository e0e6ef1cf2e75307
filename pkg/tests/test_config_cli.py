import math

import numpy as np
import pytest

from ddebound.cli import _bundled_config, main
from ddebound.config import ConfigError, load_config_text
from ddebound.plotting import Curve, emit_csv, emit_region_svg, emit_svg

MINIMAL = """
[system]
dim = 1
A0 1 1 = -1
history = constant 0.5
[solver]
horizon = 5
"""

ROBUST_ONLY = """
[system]
dim = 1
A0 1 1 = -1
history = constant 0.1
[analysis]
p_hat = -2
c_hat = 1
L_hat = 1 ; 3
"""


class TestLoadConfig:
    def test_bundled_cases_load(self):
        for case in ("a", "b"):
            cfg = _bundled_config(case)
            assert cfg.system.dim == 2
            assert cfg.system.forcing_amplitude == 0.05
            assert cfg.horizon == 50.0
            spec = cfg.delay_spec()
            assert spec.count == 1 and spec.h_bar == 0.5
            vs = cfg.build_vector_system()
            assert vs.dim == 2
            assert np.allclose(vs.history(0.0), [0.1, 0.1])

    def test_empty_file_rejected(self):
        with pytest.raises(ConfigError):
            load_config_text("", "<test>")

    def test_missing_dim(self):
        with pytest.raises(ConfigError) as err:
            load_config_text("[system]\nhistory = constant 1\n", "<test>")
        assert "dim" in str(err.value)

    def test_monomial_referencing_missing_delay_slot(self):
        text = MINIMAL + "\n"
        text = text.replace("[solver]", "f 1 = 1 ; 3 1 2\ndelay 1 = 0.5\n[solver]")
        with pytest.raises(ConfigError) as err:
            load_config_text(text, "<test>")
        assert "delay slot 3" in str(err.value)

    def test_history_must_cover_delay_interval(self):
        text = """
[system]
dim = 1
A0 1 1 = -1
delay 1 = 1.0
history sample = -0.5 1.0
history sample = 0.0 1.0
"""
        with pytest.raises(ConfigError) as err:
            load_config_text(text, "<test>")
        assert "cover" in str(err.value)

    def test_bad_expression_names_location(self):
        text = "[system]\ndim = 1\nA0 1 1 = sin(\nhistory = constant 1\n"
        with pytest.raises(ConfigError) as err:
            load_config_text(text, "<test>")
        assert "<test>:3" in str(err.value)

    def test_minimal_system_builds(self):
        cfg = load_config_text(MINIMAL, "<test>")
        vs = cfg.build_vector_system()
        from ddebound import integrate
        traj = integrate(vs, 5.0, cfg.solver)
        assert traj.eval(1.0)[0] == pytest.approx(0.5 * math.exp(-1.0), rel=1e-5)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            load_config_text(MINIMAL + "\nwarp = 9\n", "<test>")

    def test_per_coordinate_history_expressions(self):
        text = """
[system]
dim = 2
A0 1 1 = -1
A0 2 2 = -1
delay 1 = 0.5
history 1 = exp(t)
history 2 = 1 + t
"""
        cfg = load_config_text(text, "<test>")
        hist = cfg.history()
        assert hist(-0.5)[0] == pytest.approx(math.exp(-0.5))
        assert hist(-0.5)[1] == pytest.approx(0.5)


class TestCsvEmission:
    def test_two_columns_three_rows(self, tmp_path):
        path = tmp_path / "out.csv"
        emit_csv([("a", [1.0, 2.0, 3.0]), ("b", [4.0, 5.0, 6.5])], path)
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 4
        assert lines[0] == "a,b"
        assert lines[1] == "1.0,4.0"

    def test_round_trip_precision(self, tmp_path):
        value = 0.1 + 0.2
        path = tmp_path / "out.csv"
        emit_csv([("v", [value])], path)
        back = float(path.read_text().strip().split("\n")[1])
        assert back == value

    def test_empty_series_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_csv([], tmp_path / "out.csv")
        with pytest.raises(ValueError):
            emit_csv([("a", [])], tmp_path / "out.csv")

    def test_unequal_columns_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_csv([("a", [1.0]), ("b", [1.0, 2.0])], tmp_path / "out.csv")


class TestSvgEmission:
    def test_line_plot_smoke(self, tmp_path):
        path = tmp_path / "plot.svg"
        x = np.linspace(0.0, 1.0, 20)
        emit_svg([Curve("one", x, np.sin(x)), Curve("two", x, np.cos(x))], path,
                 title="demo")
        text = path.read_text()
        assert text.startswith("<svg")
        assert text.count("<polyline") == 2
        assert "demo" in text and "one" in text

    def test_region_plot_uses_log_radius(self, tmp_path):
        path = tmp_path / "region.svg"
        angles = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
        radii = np.full(16, math.e)          # ln r = 1: unit circle in the plot
        emit_region_svg([("ring", angles, radii)], path)
        assert "<polyline" in path.read_text()

    def test_empty_curves_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_svg([], tmp_path / "x.svg")
        with pytest.raises(ValueError):
            emit_region_svg([("bad", np.array([0.0]), np.array([0.0]))],
                            tmp_path / "y.svg")


class TestCliCommands:
    def _write(self, tmp_path, text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    def test_missing_config_is_usage_error(self, tmp_path, capsys):
        assert main(["simulate", "--out", str(tmp_path)]) == 2

    def test_unreadable_config_is_config_error(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 2

    def test_simulate_writes_csv(self, tmp_path):
        cfg = self._write(tmp_path, MINIMAL)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path),
                     "--svg"]) == 0
        assert (tmp_path / "simulate.csv").exists()
        assert (tmp_path / "simulate.svg").exists()
        header = (tmp_path / "simulate.csv").read_text().split("\n")[0]
        assert header == "t,x1,x_norm"

    def test_csv_output_is_deterministic(self, tmp_path):
        cfg = self._write(tmp_path, MINIMAL)
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "r1")])
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "r2")])
        a = (tmp_path / "r1" / "simulate.csv").read_bytes()
        b = (tmp_path / "r2" / "simulate.csv").read_bytes()
        assert a == b

    def test_robust_command(self, tmp_path, capsys):
        cfg = self._write(tmp_path, ROBUST_ONLY)
        assert main(["robust", "--config", cfg]) == 0
        out = capsys.readouterr().out
        assert "1.41421" in out
        assert "holds = True" in out

    def test_robust_failure_exit_code(self, tmp_path):
        text = ROBUST_ONLY.replace("p_hat = -2", "p_hat = -1")
        text = text.replace("L_hat = 1 ; 3", "L_hat = 2 ; 1")
        cfg = self._write(tmp_path, text)
        assert main(["robust", "--config", cfg]) == 1

    def test_region_rejects_non_planar_systems(self, tmp_path):
        text = """
[system]
dim = 3
A0 1 1 = -1
A0 2 2 = -1
A0 3 3 = -1
history = constant 0.1 0.1 0.1
"""
        cfg = self._write(tmp_path, text)
        assert main(["region", "--config", cfg]) == 2

    def test_fts_command(self, tmp_path, capsys):
        text = MINIMAL.replace("constant 0.5", "constant 0.9") + """
[analysis]
alpha = 1.0
beta = 1.1
T = 5
gamma = 0.1
"""
        cfg = self._write(tmp_path, text)
        assert main(["fts", "--config", cfg]) == 0
        out = capsys.readouterr().out
        assert "FTS = True" in out and "FTCS = True" in out

    def test_verify_command_on_minimal_linear_system(self, tmp_path):
        text = """
[system]
dim = 2
A0 1 1 = -1 + 0.2*sin(t)
A0 2 2 = -1 + 0.2*sin(t)
history = constant 0.3 0.4
[reduction]
p = -1 + 0.2*sin(t)
c = 1
[solver]
horizon = 10
[output]
grid = 400
"""
        cfg = self._write(tmp_path, text)
        assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 0
        header = (tmp_path / "verify.csv").read_text().split("\n")[0]
        assert header == "t,x_norm,y,y_hat"

    def test_reduce_command_numerical_path(self, tmp_path, capsys):
        text = """
[system]
dim = 2
A0 1 1 = -1
A0 2 2 = -2
history = constant 0.1 0.1
[solver]
horizon = 3
[output]
grid = 50
"""
        cfg = self._write(tmp_path, text)
        assert main(["reduce", "--config", cfg, "--out", str(tmp_path)]) == 0
        assert "numerical" in capsys.readouterr().out
        rows = (tmp_path / "reduce.csv").read_text().strip().split("\n")
        assert rows[0] == "t,p,c"
        # p ~ -1 (largest singular value decays like e^-t)
        last = [float(v) for v in rows[-1].split(",")]
        assert last[1] == pytest.approx(-1.0, abs=1e-4)

    def test_radius_command(self, tmp_path, capsys):
        text = """
[system]
dim = 1
A0 1 1 = -2
f 1 = 1 ; 0 1 3
history = constant 0.1
[reduction]
p = -2
c = 1
[solver]
horizon = 50
[analysis]
q_max = 3
bisect_tol = 1e-4
"""
        cfg = self._write(tmp_path, text)
        assert main(["radius", "--config", cfg, "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "scalar radius" in out
        # the printed estimate is the sqrt(2) basin boundary
        value = float(out.split("):")[1].split()[0])
        assert value == pytest.approx(math.sqrt(2.0), abs=1e-3)

    def test_region_command_on_globally_stable_system(self, tmp_path):
        text = """
[system]
dim = 2
A0 1 1 = -1
A0 2 2 = -1
history = constant 0.0 0.0
[reduction]
p = -1
c = 1
[solver]
horizon = 10
[analysis]
r_max = 4
probe_rtol = 1e-3
"""
        cfg = self._write(tmp_path, text)
        assert main(["region", "--config", cfg, "--out", str(tmp_path),
                     "--svg"]) == 0
        rows = (tmp_path / "region.csv").read_text().strip().split("\n")
        assert rows[0] == "angle,radius,lo,hi"
        assert len(rows) == 201            # header + 200 angles
        first = [float(v) for v in rows[1].split(",")]
        assert first[1] == 4.0             # unbracketed above at r_max
        assert (tmp_path / "region.svg").exists()

    def test_reproduce_fig1_bundled_cases(self, tmp_path):
        assert main(["reproduce-fig1", "--out", str(tmp_path), "--svg"]) == 0
        for case in ("a", "b"):
            assert (tmp_path / f"fig1_{case}.csv").exists()
            assert (tmp_path / f"fig1_{case}.svg").exists()
        header = (tmp_path / "fig1_a.csv").read_text().split("\n")[0]
        assert header == "t,x_norm,y,y_hat"

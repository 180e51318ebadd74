import json
import subprocess
import sys

import numpy as np
import pytest

from nonlocal_ch import cli, io
from nonlocal_ch.config import config_from_dict, parse_config, preset_path
from nonlocal_ch.energetics import EnergyRecord
from nonlocal_ch.errors import ConfigError
from nonlocal_ch.spectral_grid import Grid

PRESETS = [
    "coarsen_512_d005.json",
    "coarsen_1024_d0005.json",
    "coarsen_desk.json",
    "converge_desk.json",
    "quick_demo.json",
]


def minimal_config(**overrides):
    cfg = {
        "domain": {"X1": 1.0, "X2": 1.0},
        "grid": {"N1": 16, "N2": 16},
        "model": {"epsilon": 0.2, "delta": 0.1},
        "schedule": [{"t_end": 0.01, "dt": 0.001}],
        "initial": {"type": "random", "amplitude": 0.1, "seed": 1},
    }
    cfg.update(overrides)
    return cfg


class TestConfig:
    @pytest.mark.parametrize("name", PRESETS)
    def test_presets_parse(self, name):
        cfg = parse_config(preset_path(name))
        assert cfg.t_final > 0 and cfg.N1 % 2 == 0

    def test_full_scale_preset(self):
        cfg = parse_config(preset_path("coarsen_512_d005.json"))
        assert (cfg.N1, cfg.epsilon, cfg.delta) == (512, 0.1, 0.05)
        assert cfg.t_final == 10000.0

    def test_defaults(self):
        cfg = config_from_dict(minimal_config())
        assert (cfg.A0, cfg.A1, cfg.dealias, cfg.kernel_image_range) == (2.0, 5.0, False, 1)
        assert cfg.m0 is None and cfg.output.energy_every_steps == 100

    def test_empty_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("")
        with pytest.raises(ConfigError, match="empty"):
            parse_config(p)

    def test_bad_json_line(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{\n  "domain": ,\n}')
        with pytest.raises(ConfigError, match="line 2"):
            parse_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "nope.json")

    def test_decreasing_schedule(self):
        sched = [{"t_end": 1.0, "dt": 0.1}, {"t_end": 0.5, "dt": 0.1}]
        with pytest.raises(ConfigError, match="schedule"):
            config_from_dict(minimal_config(schedule=sched))

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="model.eps"):
            config_from_dict(minimal_config(model={"epsilon": 0.2, "delta": 0.1, "eps": 1}))
        with pytest.raises(ConfigError, match="'extra'"):
            config_from_dict(minimal_config(extra=1))

    @pytest.mark.parametrize(
        "patch, key",
        [
            ({"grid": {"N1": 15, "N2": 16}}, "grid.N1"),
            ({"model": {"epsilon": -0.2, "delta": 0.1}}, "model.epsilon"),
            ({"scheme": {"init_method": "euler"}}, "scheme.init_method"),
            ({"initial": {"type": "random", "amplitude": 0.1}}, "initial.seed"),
            ({"output": {"snapshot_times": [0.5, 0.2]}}, "output.snapshot_times"),
            ({"schedule": []}, "schedule"),
        ],
    )
    def test_errors_name_key(self, patch, key):
        with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
            config_from_dict(minimal_config(**patch))

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            preset_path("nothing.json")


def make_records(n):
    rng = np.random.default_rng(0)
    out = []
    for i in range(n):
        v = rng.standard_normal(6)
        out.append(EnergyRecord(i * 0.1, v[0], v[1], None if i % 3 == 0 else v[2], abs(v[3]), v[4], v[5], 0.1))
    return out


class TestEnergyCsv:
    def test_round_trip(self, tmp_path):
        recs = make_records(1000)
        io.write_energy_csv(recs, tmp_path / "e.csv")
        assert io.read_energy_csv(tmp_path / "e.csv") == recs

    def test_layout(self, tmp_path):
        io.write_energy_csv(make_records(2), tmp_path / "e.csv")
        lines = (tmp_path / "e.csv").read_text().splitlines()
        assert lines[0] == "t,mass,E,E_mod,linf,min,max,dt"
        assert lines[1].split(",")[3] == ""

    def test_bad_header(self, tmp_path):
        (tmp_path / "e.csv").write_text("a,b\n1,2\n")
        with pytest.raises(io.FormatError, match="line 1"):
            io.read_energy_csv(tmp_path / "e.csv")

    def test_bad_row(self, tmp_path):
        (tmp_path / "e.csv").write_text("t,mass,E,E_mod,linf,min,max,dt\n1,2,3,,5,6,7,x\n")
        with pytest.raises(io.FormatError, match="line 2"):
            io.read_energy_csv(tmp_path / "e.csv")


class TestSnapshot:
    def test_round_trip_bit_exact(self, tmp_path, rng):
        g = Grid(1.5, 2.0, 8, 12)
        f = rng.standard_normal(g.shape)
        io.write_snapshot(f, 3.25, tmp_path / "s.nchf", g)
        back, t, g2 = io.read_snapshot(tmp_path / "s.nchf")
        assert t == 3.25 and g2 == g
        assert back.tobytes() == f.tobytes()

    def test_header_bytes(self, tmp_path):
        g = Grid(1.0, 1.0, 4, 4)
        io.write_snapshot(np.zeros(g.shape), 0.0, tmp_path / "s.nchf", g)
        data = (tmp_path / "s.nchf").read_bytes()
        assert data[:4] == b"NCHF" and len(data) == 40 + 8 * 16
        assert int.from_bytes(data[4:8], "little") == 1

    def test_bad_magic(self, tmp_path):
        g = Grid(1.0, 1.0, 4, 4)
        io.write_snapshot(np.zeros(g.shape), 0.0, tmp_path / "s.nchf", g)
        data = bytearray((tmp_path / "s.nchf").read_bytes())
        data[:4] = b"XXXX"
        (tmp_path / "s.nchf").write_bytes(bytes(data))
        with pytest.raises(io.FormatError, match="magic"):
            io.read_snapshot(tmp_path / "s.nchf")

    def test_truncated(self, tmp_path):
        g = Grid(1.0, 1.0, 4, 4)
        io.write_snapshot(np.zeros(g.shape), 0.0, tmp_path / "s.nchf", g)
        data = (tmp_path / "s.nchf").read_bytes()
        (tmp_path / "s.nchf").write_bytes(data[:-8])
        with pytest.raises(io.FormatError):
            io.read_snapshot(tmp_path / "s.nchf")
        (tmp_path / "s.nchf").write_bytes(data[:20])
        with pytest.raises(io.FormatError, match="header"):
            io.read_snapshot(tmp_path / "s.nchf")


class TestPgm:
    def test_levels(self):
        # 255 * 2.1 / 2.2 = 243.41; 255 * 1.1 / 2.2 evaluates just below 127.5
        levels = io.gray_levels(np.array([-2.0, -1.1, 0.0, 1.0, 1.1, 5.0]))
        assert levels.tolist() == [0, 0, 127, 243, 255, 255]

    def test_orientation(self, tmp_path):
        f = np.full((4, 3), -1.1)
        f[3, 2] = 1.1  # largest x, largest y
        io.write_pgm(f, tmp_path / "p.pgm")
        img = io.read_pgm(tmp_path / "p.pgm")
        assert img.shape == (3, 4)
        assert img[0, 3] == 255 and img.sum() == 255
        assert (tmp_path / "p.pgm").read_bytes().startswith(b"P5\n4 3\n255\n")


def table1_csv(path):
    t = np.linspace(1, 10000, 500)
    recs = [EnergyRecord(ti, 0.0, 22.447 * ti**-0.304, None, 1.0, -1.0, 1.0, 0.01) for ti in t]
    io.write_energy_csv(recs, path)


class TestCli:
    def test_fit(self, tmp_path, capsys):
        table1_csv(tmp_path / "e.csv")
        assert cli.main(["fit", "--csv", str(tmp_path / "e.csv"), "--tmin", "10", "--tmax", "8000"]) == 0
        out = capsys.readouterr().out
        assert "m_e=-0.304 " in out and "b_e=22.447 " in out

    def test_no_args(self, capsys):
        assert cli.main([]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert cli.main(["fit", "--bogus"]) == 1

    def test_missing_csv(self, tmp_path, capsys):
        assert cli.main(["fit", "--csv", str(tmp_path / "x.csv"), "--tmin", "1", "--tmax", "2"]) == 1

    def test_kernel_check_violation(self, capsys):
        rc = cli.main(["kernel-check", "--delta", "0.2", "--epsilon", "0.1", "--nx", "128", "--X", "1"])
        cap = capsys.readouterr()
        assert rc == 0
        rep = json.loads(cap.out)
        assert abs(rep["gamma0"]) < 1e-12 and rep["condition_d"] is False
        assert "condition (d)" in cap.err

    def test_kernel_check_ok(self, capsys):
        assert cli.main(["kernel-check", "--delta", "0.05", "--epsilon", "0.1", "--nx", "512", "--X", "1"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["gamma0"] == pytest.approx(15.0, rel=1e-5) and rep["condition_d"] is True

    def write_cfg(self, tmp_path, **overrides):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(minimal_config(**overrides)))
        return p

    def test_run(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path, output={"energy_every_steps": 2, "snapshot_times": [0.01]})
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        rows = io.read_energy_csv(tmp_path / "o" / "energy.csv")
        assert len(rows) == 6
        field, t, g = io.read_snapshot(tmp_path / "o" / "phi_t0.01.nchf")
        assert t == pytest.approx(0.01) and g.shape == (16, 16)
        assert (tmp_path / "o" / "phi_t0.01.pgm").exists()

    def test_invalid_config_exit_1(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path, model={"epsilon": 0.02, "delta": 0.1})
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
        assert "condition (d)" in capsys.readouterr().err

    def test_divergence_exit_2(self, tmp_path, capsys):
        cfg = self.write_cfg(
            tmp_path,
            scheme={"init_method": "rk2"},
            schedule=[{"t_end": 1.0, "dt": 0.5}],
            initial={"type": "random", "amplitude": 1.0, "seed": 3},
            output={"energy_every_steps": 1},
        )
        assert cli.main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "diverged" in capsys.readouterr().err
        assert (tmp_path / "o" / "energy.csv").exists()

    def test_coarsen_writes_fit(self, tmp_path, capsys):
        cfg = self.write_cfg(
            tmp_path, schedule=[{"t_end": 0.2, "dt": 0.005}], output={"energy_every_steps": 2},
            fit={"t_min": 0.05, "t_max": 0.2},
        )  # fmt: skip
        assert cli.main(["coarsen", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        fit = json.loads((tmp_path / "o" / "fit.json").read_text())
        assert fit["n_points"] == 16 and "m_e=" in capsys.readouterr().out

    def test_converge(self, tmp_path, capsys):
        cfg = self.write_cfg(tmp_path, convergence={"t_final": 0.02, "dt_base": 0.004, "k_max": 2})
        assert cli.main(["converge", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        lines = (tmp_path / "o" / "convergence.csv").read_text().splitlines()
        assert lines[0] == "dt,steps,l2_error,rate" and len(lines) == 4
        assert "least-squares order" in capsys.readouterr().out

    def test_converge_needs_section(self, tmp_path):
        assert cli.main(["converge", "--config", str(self.write_cfg(tmp_path))]) == 1

    def test_module_entry_point(self):
        r = subprocess.run([sys.executable, "-m", "nonlocal_ch"], capture_output=True, text=True)
        assert r.returncode == 1 and "usage" in r.stderr

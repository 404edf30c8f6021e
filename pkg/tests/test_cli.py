import subprocess
import sys

import pytest

from fejerlab.cli import EXIT_FAIL, EXIT_OK, EXIT_REFUSED, EXIT_USAGE, main, read_config
from fejerlab.experiments import read_report


def _body(path):
    return path.read_text().splitlines()


class TestVerifyKernel:
    def test_fejer(self, tmp_path):
        out = tmp_path / "k.csv"
        rc = main(["verify-kernel", "--family", "fejer", "--sweep", "n:1:4", "--out", str(out)])
        lines = _body(out)
        assert rc == EXIT_OK
        assert lines[0] == "param,l1_norm,mass,tail_0.1"
        assert len(lines) == 1 + 4 + 1
        assert lines[-1].startswith("# family=fejer") and lines[-1].endswith("verdict=ok")

    def test_multiple_radii(self, tmp_path):
        out = tmp_path / "k.csv"
        main(["verify-kernel", "--family", "poisson", "--sweep", "theta:1:3:0.1",
              "--radii", "0.1,0.5", "--out", str(out)])
        assert _body(out)[0] == "param,l1_norm,mass,tail_0.1,tail_0.5"

    def test_sweep_mode_mismatch(self, capsys):
        assert main(["verify-kernel", "--family", "fejer", "--sweep", "theta:0.1:3"]) == EXIT_USAGE
        assert "sweep" in capsys.readouterr().err

    def test_stdout(self, capsys):
        assert main(["verify-kernel", "--family", "axbphi", "--sweep", "theta:0.5:3"]) == EXIT_OK
        assert "verdict=ok" in capsys.readouterr().out


class TestConverge:
    def test_fejer_step(self, tmp_path):
        out = tmp_path / "r.csv"
        rc = main(["converge", "--group", "torus1", "--family", "fejer", "--partition", "halves",
                   "--function", "step:0.25", "--point", "0", "--sweep", "n:1:11",
                   "--tol", "5e-3", "--out", str(out)])
        r = read_report(out)
        assert rc == EXIT_OK
        assert r.verdict == "pass"
        assert r.predicted == pytest.approx(0.5, abs=1e-12)
        assert [s.param for s in r.steps] == [2 ** k for k in range(11)]

    def test_axb_cells(self, tmp_path):
        out = tmp_path / "r.csv"
        rc = main(["converge", "--group", "axb", "--family", "axbphi", "--partition", "axb4",
                   "--function", "cells:0,1,2,3", "--point", "1,0", "--sweep", "theta:0.1:3",
                   "--tol", "1e-5", "--out", str(out)])
        assert rc == EXIT_OK
        assert read_report(out).predicted == pytest.approx(1.5, abs=1e-12)

    def test_fail_exit_code(self, tmp_path):
        rc = main(["converge", "--group", "torus1", "--family", "fejer", "--partition", "halves",
                   "--function", "step:0.25", "--point", "0", "--sweep", "n:1:4",
                   "--tol", "1e-8", "--out", str(tmp_path / "r.csv")])
        assert rc == EXIT_FAIL

    def test_refused_exit_code(self, tmp_path):
        out = tmp_path / "r.csv"
        rc = main(["converge", "--group", "r1", "--family", "poisson", "--partition", "halves",
                   "--function", "sin-oscillation", "--point", "0", "--sweep", "theta:0.1:3",
                   "--out", str(out)])
        assert rc == EXIT_REFUSED
        r = read_report(out)
        assert r.verdict == "refused" and "directional limit" in r.reason

    def test_config_with_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# semicircle at a jump\n"
                       "group = r1\nfamily = semicircle:0.3\npartition = halves\n"
                       "function = step\npoint = 0\nsweep = theta:0.1:4\ntol = 1e-6\n"
                       f"out = {tmp_path / 'ignored.csv'}\n")
        out = tmp_path / "r.csv"
        assert main(["converge", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert not (tmp_path / "ignored.csv").exists()
        assert read_report(out).predicted == pytest.approx(0.3, abs=1e-12)

    def test_deterministic(self, tmp_path):
        args = ["converge", "--group", "r1", "--family", "poisson", "--partition", "halves",
                "--function", "step", "--point", "0", "--sweep", "theta:0.1:3"]
        main(args + ["--out", str(tmp_path / "a.csv")])
        main(args + ["--out", str(tmp_path / "b.csv")])
        def strip(ln):
            return ln if ln.startswith("#") else ln.rsplit(",", 1)[0]

        a = [strip(ln) for ln in _body(tmp_path / "a.csv")]
        b = [strip(ln) for ln in _body(tmp_path / "b.csv")]
        assert a == b

    @pytest.mark.parametrize("extra", [
        ["--group", "nope"],
        ["--family", "nope"],
        ["--partition", "axb4"],
        ["--function", "nope"],
        ["--sweep", "n:1:4"],
        ["--sweep", "theta:0.1:2"],
        ["--point", "a"],
    ])
    def test_usage_errors(self, extra, capsys):
        base = {"--group": "r1", "--family": "poisson", "--partition": "halves",
                "--function": "step", "--point": "0", "--sweep": "theta:0.1:3"}
        base[extra[0]] = extra[1]
        argv = ["converge"] + [t for kv in base.items() for t in kv]
        assert main(argv) == EXIT_USAGE
        assert "error" in capsys.readouterr().err

    def test_missing_required(self, capsys):
        assert main(["converge", "--group", "r1"]) == EXIT_USAGE
        assert "missing required option" in capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("colour = blue\n")
        assert main(["converge", "--config", str(cfg)]) == EXIT_USAGE

    def test_missing_config_file(self, tmp_path):
        assert main(["converge", "--config", str(tmp_path / "none.cfg")]) == EXIT_USAGE


class TestCompare:
    def test_default(self, tmp_path):
        out = tmp_path / "c.csv"
        assert main(["compare", "--n-max", "32", "--function", "step", "--out", str(out)]) == EXIT_OK
        lines = _body(out)
        assert lines[0] == "N,x,cesaro,convolve,abs_diff"
        Ns = sorted({int(ln.split(",")[0]) for ln in lines[1:-1]})
        assert Ns == [0, 1, 2, 4, 8, 16, 32]
        assert len(lines) == 1 + 7 * 20 + 1
        assert float(lines[-1].split("=")[1]) < 1e-7

    def test_non_power_of_two(self, tmp_path):
        out = tmp_path / "c.csv"
        main(["compare", "--n-max", "5", "--function", "harmonic:2", "--points", "3",
              "--out", str(out)])
        Ns = sorted({int(ln.split(",")[0]) for ln in _body(out)[1:-1]})
        assert Ns == [0, 1, 2, 4, 5]

    def test_seeded(self, tmp_path):
        for name in ("a", "b"):
            main(["compare", "--n-max", "4", "--function", "step", "--points", "5",
                  "--out", str(tmp_path / name)])
        assert (tmp_path / "a").read_text() == (tmp_path / "b").read_text()

    def test_rejects_non_torus(self):
        assert main(["compare", "--group", "r1", "--function", "step"]) == EXIT_USAGE


class TestLebesgue:
    def test_jump(self, capsys):
        assert main(["lebesgue", "--function", "interval:0:1", "--point", "0"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.splitlines()[0] == "radius,average"
        assert "lebesgue_point=false" in out

    def test_interior(self, capsys):
        main(["lebesgue", "--function", "interval:0:1", "--point", "0.5"])
        assert "lebesgue_point=true" in capsys.readouterr().out


class TestConfigFile:
    def test_read(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("a = 1  # trailing\n\n# comment\nn-max = 8\n")
        assert read_config(p) == {"a": "1", "n_max": "8"}

    def test_bad_line(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("just words\n")
        with pytest.raises(Exception, match="key = value"):
            read_config(p)


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "fejerlab.cli", "--help"], capture_output=True,
                       text=True)
    assert r.returncode == 0
    assert "verify-kernel" in r.stdout

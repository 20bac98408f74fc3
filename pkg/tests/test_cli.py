import subprocess
import sys

import pytest

from gaugechain.cli import EXIT_CAPACITY, EXIT_CONFIG, EXIT_IDENTITY, EXIT_OK, main

SMALL = """\
seed = 2
n_range = [2, 3]
samples = 2
suites = ["norms", "decomposition", "thermo"]
[interaction]
preset = "gauge_ising"
[generator]
h = [[0.5, 0], [0, -0.5]]
"""


@pytest.fixture
def cfg_file(tmp_path):
    def write(text, name="exp.toml"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return write


class TestMain:
    def test_run(self, cfg_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["run", cfg_file(SMALL), "--out", str(out), "-q"]) == EXIT_OK
        assert (out / "thermo.csv").exists()
        assert "checks passed" in capsys.readouterr().out

    def test_config_error(self, cfg_file, capsys):
        assert main(["run", cfg_file("seed = 1\nn_range = [5, 2]\n")]) == EXIT_CONFIG
        assert "line 2" in capsys.readouterr().err

    def test_capacity(self, cfg_file, capsys):
        assert main(["run", cfg_file("seed = 1\nn_range = [2, 16]\n")]) == EXIT_CAPACITY
        assert "largest feasible n: 14" in capsys.readouterr().err

    def test_max_dim_flag(self, cfg_file, tmp_path):
        assert main(["run", cfg_file(SMALL), "--max-dim", "16", "--out", str(tmp_path / "o")]) == EXIT_CAPACITY

    def test_identity_failure(self, cfg_file, tmp_path, capsys):
        from gaugechain.tags import TAGS
        text = SMALL + f"[tolerances.overrides]\n{TAGS['partition_defect']} = -1.0\n"
        assert main(["run", cfg_file(text), "--out", str(tmp_path / "o"), "-q"]) == EXIT_IDENTITY
        assert "FAIL" in capsys.readouterr().out

    def test_validate(self, cfg_file, capsys):
        text = ('seed = 1\n[symmetry]\nbackend = "abelian"\ncharges = [1, -1]\n'
                '[[interaction.terms]]\nsupport = [0]\nmatrix = [[0, 1], [1, 0]]\n')
        assert main(["validate", cfg_file(text)]) == EXIT_OK
        assert "not gauge invariant" in capsys.readouterr().out
        assert main(["run", cfg_file(text)]) == EXIT_CONFIG

    def test_presets(self, capsys):
        assert main(["presets"]) == EXIT_OK
        assert "heisenberg" in capsys.readouterr().out


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "gaugechain", "presets"], capture_output=True, text=True)
    assert res.returncode == 0 and "gauge_ising" in res.stdout

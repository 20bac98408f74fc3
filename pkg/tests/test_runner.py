import csv
import io
import json

import numpy as np
import pytest

from gaugechain import config, runner
from gaugechain.errors import CapacityError
from gaugechain.tags import TAGS

GAUGE_ISING = """\
seed = 7
n_range = [2, 4]
samples = 3
buffers = [1, 2]

[symmetry]
backend = "abelian"
charges = [1, -1]

[interaction]
preset = "gauge_ising"

[generator]
h = [[1, 0], [0, -1]]
"""


def rows(table):
    return list(csv.DictReader(io.StringIO(table.csv_text())))


@pytest.fixture(scope="module")
def bundle():
    return runner.run(config.parse(GAUGE_ISING), write=False)


class TestRun:
    def test_passes(self, bundle):
        assert bundle.passed, [c.describe() for c in bundle.failures]
        assert set(bundle.tables) == set(config.SUITES)

    def test_norms_table(self, bundle):
        r = rows(bundle.tables["norms"])
        assert [int(x["n"]) for x in r] == [1, 2, 3]
        assert float(r[0][TAGS["zero_norm"]]) == 5.0

    def test_thermo_gates_partition_identity(self, bundle):
        tags = {c.tag for c in bundle.checks}
        assert TAGS["partition_defect"] in tags
        assert TAGS["derivative_defect"] in tags

    def test_testing_long_format(self, bundle):
        t = bundle.tables["testing"]
        assert t.columns == runner.TESTING_COLUMNS
        labels = {x["tag"] for x in rows(t)}
        assert TAGS["log_ratio"] in labels
        assert TAGS["aep_psi_mass"] in labels

    def test_manifest(self, bundle):
        m = bundle.manifest
        assert m["passed"] is True
        assert m["checks"]["failed"] == 0
        assert set(m["versions"]) >= {"gaugechain", "numpy", "scipy", "python", "cover_backend"}
        assert len(m["config_sha256"]) == 64

    def test_csv_formatting(self):
        t = runner.Table("x", ["a", "b", "c", "d"], [[1, 0.1, None, True]])
        assert t.csv_text() == "a,b,c,d\n1,0.10000000000000001,,true\n"


class TestDeterminism:
    def test_byte_identical(self, tmp_path):
        a = runner.run(config.parse(GAUGE_ISING), tmp_path / "a")
        b = runner.run(config.parse(GAUGE_ISING, overrides={"jobs": 3}), tmp_path / "b")
        for name in a.tables:
            assert (tmp_path / "a" / f"{name}.csv").read_bytes() == (tmp_path / "b" / f"{name}.csv").read_bytes()
        ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
        mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
        assert ma["tables"] == mb["tables"]

    def test_seed_changes_samples(self):
        base = 'seed = {s}\nn_range = [2, 3]\nsamples = 2\nsuites = ["decomposition"]\n'
        a = runner.run(config.parse(base.format(s=1)), write=False)
        b = runner.run(config.parse(base.format(s=2)), write=False)
        assert a.tables["decomposition"].csv_text() != b.tables["decomposition"].csv_text()


class TestCapacity:
    def test_raises_with_suggestion(self):
        cfg = config.parse("seed = 1\nn_range = [2, 16]\n")
        with pytest.raises(CapacityError) as err:
            runner.run(cfg, write=False)
        assert err.value.suggestion == 14

    def test_empty_suites(self, tmp_path):
        bundle = runner.run(config.parse("seed = 1\nsuites = []\n"), tmp_path)
        assert bundle.tables == {} and bundle.passed
        assert (tmp_path / "manifest.json").exists()


class TestNonCentral:
    def test_notes_and_skips(self):
        text = ('seed = 3\nn_range = [2, 3]\nsamples = 2\nsuites = ["thermo", "variational"]\n'
                '[interaction]\npreset = "xxz_charge"\n[generator]\nh = [[0.3, 0.2], [0.2, -0.3]]\n')
        bundle = runner.run(config.parse(text), write=False)
        assert bundle.passed
        assert any("not central" in n for n in bundle.notes)
        assert TAGS["partition_defect"] not in {c.tag for c in bundle.checks}


class TestValidate:
    def test_gauge_diagnostic(self):
        text = """\
seed = 1
[symmetry]
backend = "abelian"
charges = [1, -1]
[[interaction.terms]]
support = [0]
matrix = [[0, 1], [1, 0]]
"""
        diags = runner.validate(config.parse(text, lenient=True))
        assert any(d.topic == "gauge" and "not gauge invariant" in d.message for d in diags)

    def test_normalization(self):
        diags = runner.validate(config.parse(GAUGE_ISING))
        gen = [d for d in diags if d.topic == "generator"][0]
        assert "central" in gen.message and f"{np.log(np.cosh(1.0)):.12g}" in gen.message

import numpy as np
import pytest

from orbitlift import catalog, regcheck
from orbitlift.cli import EXIT_DOMAIN, EXIT_INCONCLUSIVE, EXIT_OK, main
from orbitlift.curvedsl import read_samples_csv


def run(args):
    return main(args)


class TestRoots:
    def test_cubic(self, tmp_path, capsys):
        assert run(["roots", "--poly", "6,11,6"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "root[0]: 1" in out and "root[2]: 3" in out

    def test_not_hyperbolic_exit_2(self, capsys):
        assert run(["roots", "--poly", "0,1"]) == EXIT_DOMAIN


class TestSelect:
    def test_crossing_lines_csv(self, tmp_path):
        out = tmp_path / "sel.csv"
        rep = tmp_path / "sel.txt"
        code = run([
            "select", "--curve", "0,-t^2", "--domain", "-1:1", "--level", "10",
            "--out", str(out), "--report", str(rep),
        ])
        assert code == EXIT_OK
        t, cols, names = read_samples_csv(out)
        assert names == ["branch0", "branch1"]
        best = min(
            max(np.max(np.abs(cols[:, 0] - t)), np.max(np.abs(cols[:, 1] + t))),
            max(np.max(np.abs(cols[:, 0] + t)), np.max(np.abs(cols[:, 1] - t))),
        )
        assert best < 1e-8
        text = rep.read_text()
        assert "swap-count: 1" in text
        assert "swap[0].perm: 1,0" in text

    def test_not_hyperbolic_curve_exit_2(self, tmp_path):
        code = run(["select", "--curve", "0,0.25-t^2", "--domain", "-1:1", "--level", "5"])
        assert code == EXIT_DOMAIN


class TestCertify:
    def test_sqrt_cusp_csv(self, tmp_path):
        from orbitlift.curvedsl import write_samples_csv

        t = np.linspace(-1, 1, 2**9 + 1)
        write_samples_csv(tmp_path / "sqrtabs.csv", t, np.abs(t)[:, None] ** 0.5, ["f"])
        rep = tmp_path / "cert.txt"
        code = run(["certify", "--csv", str(tmp_path / "sqrtabs.csv"), "--report", str(rep)])
        assert code == EXIT_OK
        assert f"column[f].verdict: {regcheck.UNBOUNDED}" in rep.read_text()

    def test_expression_source(self, tmp_path):
        rep = tmp_path / "cert.txt"
        code = run([
            "certify", "--curve", "powabs(t,1)", "--domain", "-1:1", "--level", "9",
            "--report", str(rep),
        ])
        assert code == EXIT_OK
        assert f"column[f].verdict: {regcheck.LIPSCHITZ}" in rep.read_text()

    def test_strict_inconclusive_exit_3(self, tmp_path):
        code = run([
            "certify", "--curve", "powabs(t,0.8)", "--domain", "-1:1", "--level", "9",
            "--strict", "--report", str(tmp_path / "r.txt"),
        ])
        assert code == EXIT_INCONCLUSIVE

    def test_round_trip_reproduces_select_verdicts(self, tmp_path):
        sel_csv = tmp_path / "sel.csv"
        sel_rep = tmp_path / "sel.txt"
        run([
            "select", "--curve", "0,-powabs(t,1)", "--domain", "-1:1", "--level", "10",
            "--out", str(sel_csv), "--report", str(sel_rep),
        ])
        cert_rep = tmp_path / "cert.txt"
        run(["certify", "--csv", str(sel_csv), "--report", str(cert_rep)])
        sel_lines = {
            line.split(".verdict: ")[1]
            for line in sel_rep.read_text().splitlines()
            if line.startswith("branch[") and ".verdict: " in line and ".report." not in line
        }
        cert_lines = {
            line.split(".verdict: ")[1]
            for line in cert_rep.read_text().splitlines()
            if line.startswith("column[") and ".verdict: " in line and ".report." not in line
        }
        assert sel_lines == cert_lines


class TestLift:
    def test_dihedral_circle(self, tmp_path):
        out = tmp_path / "lift.csv"
        rep = tmp_path / "lift.txt"
        code = run([
            "lift", "--group", "I2:4", "--curve", "1,cos(4*t)", "--domain", "-1:1",
            "--level", "8", "--out", str(out), "--report", str(rep),
        ])
        assert code == EXIT_OK
        t, cols, names = read_samples_csv(out)
        assert names == ["x1", "x2"]
        assert np.max(np.abs(cols[:, 0] ** 2 + cols[:, 1] ** 2 - 1.0)) < 1e-9
        assert "residual: 0" in rep.read_text() or "residual: " in rep.read_text()

    def test_not_in_image_exit_2(self, tmp_path):
        code = run(["lift", "--group", "A:1", "--curve", "0,1", "--domain", "-1:1", "--level", "4"])
        assert code == EXIT_DOMAIN


class TestKdata:
    def test_a2(self, tmp_path):
        rep = tmp_path / "kd.txt"
        assert run(["kdata", "--group", "A:2", "--report", str(rep)]) == EXIT_OK
        text = rep.read_text()
        assert "d: 3" in text and "k: 3" in text

    def test_bad_group_exit_2(self):
        assert run(["kdata", "--group", "Z:9"]) == EXIT_DOMAIN


class TestExamples:
    def test_catalog_listing(self, capsys):
        assert run(["examples"]) == EXIT_OK
        out = capsys.readouterr().out
        for name in catalog.names():
            assert name in out
        assert "sqrt-cusp" in out and "unbounded-derivative-detected" in out


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ["roots", "--poly", "6,11,6"],
            ["select", "--curve", "0,-t^2", "--domain", "-1:1", "--level", "8"],
            ["lift", "--group", "A:1", "--curve", "0,-t^2", "--domain", "-1:1", "--level", "8"],
            ["kdata", "--group", "B:2"],
            ["examples"],
        ],
    )
    def test_byte_identical_reruns(self, argv, tmp_path):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        run(argv + ["--seed", "7", "--report", str(a)])
        run(argv + ["--seed", "7", "--report", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestCatalogModule:
    def test_all_entries_certify_as_expected(self):
        for entry in catalog.CATALOG:
            _, _, weakest = catalog.certify_entry(entry, level=10)
            assert catalog.verdict_matches(entry, weakest.verdict), (
                entry.name, weakest.verdict,
            )

    def test_flip_partners_are_symmetric(self):
        for entry in catalog.CATALOG:
            if entry.flip_partner:
                assert catalog.get(entry.flip_partner).flip_partner == entry.name

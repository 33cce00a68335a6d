import shutil
from pathlib import Path

import pytest

from conelab_plots import PlotJob, SchemaMismatch, render
from conelab_plots.render import main

DEMO = Path(__file__).resolve().parent.parent / "demo"


def read_rows(path):
    import csv

    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConvergence:
    def test_smoke_on_demo(self, tmp_path):
        out = render("convergence", DEMO / "convergence.csv", tmp_path / "c.png")
        assert out.exists() and out.stat().st_size > 0

    def test_band_at_largest_n_contains_closed_form(self):
        rows = read_rows(DEMO / "convergence.csv")
        last = max(rows, key=lambda r: int(r["n_samples"]))
        est = float(last["estimate"])
        se = float(last["std_error"])
        closed = float(last["closed_form"])
        assert abs(est - closed) <= 3 * se

    def test_missing_closed_form_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("estimate,std_error,n_samples\n1.0,0.1,100\n")
        with pytest.raises(SchemaMismatch):
            render("convergence", bad, tmp_path / "x.png")

    def test_input_not_modified(self, tmp_path):
        src = tmp_path / "conv.csv"
        shutil.copy(DEMO / "convergence.csv", src)
        before = src.read_bytes()
        render("convergence", src, tmp_path / "c.png")
        assert src.read_bytes() == before


class TestRadialDensity:
    def test_smoke_on_demo(self, tmp_path):
        out = render("radial-density", DEMO / "radial.csv", tmp_path / "r.png")
        assert out.exists() and out.stat().st_size > 0

    def test_empty_csv_rejected(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("vnorm,d,alpha,beta,eps,rmax\n")
        with pytest.raises(SchemaMismatch):
            render("radial-density", empty, tmp_path / "x.png")

    def test_varying_parameters_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text(
            "vnorm,d,alpha,beta,eps,rmax\n1.0,1,1.0,2.0,0.5,2.0\n1.1,1,1.5,2.0,0.5,2.0\n"
        )
        with pytest.raises(SchemaMismatch):
            render("radial-density", bad, tmp_path / "x.png")

    def test_chi_square_annotation_present(self, tmp_path, monkeypatch):
        captured = {}
        import matplotlib.axes

        original = matplotlib.axes.Axes.annotate

        def spy(self, text, *args, **kwargs):
            captured["text"] = text
            return original(self, text, *args, **kwargs)

        monkeypatch.setattr(matplotlib.axes.Axes, "annotate", spy)
        render("radial-density", DEMO / "radial.csv", tmp_path / "r.png")
        assert "chi2" in captured["text"]


class TestKappaProfile:
    def test_smoke_on_demo(self, tmp_path):
        out = render("kappa-profile", DEMO / "kappa.csv", tmp_path / "k.png")
        assert out.exists() and out.stat().st_size > 0

    def test_profile_tracks_closed_form(self):
        rows = read_rows(DEMO / "kappa.csv")
        within = sum(
            abs(float(r["estimate"]) - float(r["closed_form"]))
            <= 4 * float(r["std_error"])
            for r in rows
        )
        assert within >= len(rows) - 1  # one 4-sigma outlier tolerated


class TestJobValidation:
    def test_unknown_kind(self, tmp_path):
        with pytest.raises(SchemaMismatch):
            PlotJob(tmp_path / "x.csv", "pie-chart", tmp_path / "x.png")

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaMismatch):
            render("convergence", tmp_path / "nope.csv", tmp_path / "x.png")


class TestCli:
    def test_success_exit_code(self, tmp_path, capsys):
        code = main(["convergence", str(DEMO / "convergence.csv"), str(tmp_path / "c.png")])
        assert code == 0
        assert (tmp_path / "c.png").exists()

    def test_bad_usage(self, capsys):
        assert main(["convergence"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_schema_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        assert main(["convergence", str(bad), str(tmp_path / "x.png")]) == 1
        assert "error" in capsys.readouterr().err

"""Renderer checks: plotted data equals CSV values, thresholds always drawn."""

import csv
from pathlib import Path

import matplotlib.pyplot as plt
import pytest

from figrender import RenderError, RenderJob, build_figure, render

FIXTURES = Path(__file__).parent / "fixtures"


def _job(kind, results, out=Path("unused.svg"), snr=None):
    return RenderJob(kind=kind, results_csv=FIXTURES / results, out_path=out,
                     snr_csv=FIXTURES / snr if snr else None)


def _rows(name):
    with open(FIXTURES / name, newline="") as fh:
        return list(csv.DictReader(fh))


def _series_of(rows, name, xcol, ycol):
    pts = [(float(r[xcol]), float(r[ycol])) for r in rows
           if r["series"] == name and r[ycol] != ""]
    return [p[0] for p in pts], [p[1] for p in pts]


def _data_lines(ax):
    return {ln.get_label(): ln for ln in ax.get_lines()
            if not ln.get_label().endswith(("4.0e-03", "1.9e-02"))}


def _fec_lines(ax):
    return [ln for ln in ax.get_lines()
            if ln.get_label().endswith(("4.0e-03", "1.9e-02"))]


@pytest.fixture(autouse=True)
def _close_figures():
    yield
    plt.close("all")


def test_osnr_curves_plot_csv_values_exactly():
    fig = build_figure(_job("osnr-curves", "b2b-osnr-analytic.csv"))
    ax = fig.axes[0]
    rows = _rows("b2b-osnr-analytic.csv")
    lines = _data_lines(ax)
    assert set(lines) == {r["series"] for r in rows}
    for name, line in lines.items():
        xs, ys = _series_of(rows, name, "osnr_db", "ber")
        assert list(line.get_xdata()) == xs
        assert list(line.get_ydata()) == ys
    assert ax.get_yscale() == "log"


def test_reach_curves_plot_csv_values_exactly():
    fig = build_figure(_job("reach-curves", "pam4-reach.csv"))
    ax = fig.axes[0]
    rows = _rows("pam4-reach.csv")
    lines = _data_lines(ax)
    assert set(lines) == {"pam4-ffe0", "pam4-ffe13"}
    for name, line in lines.items():
        xs, ys = _series_of(rows, name, "distance_km", "ber")
        assert list(line.get_xdata()) == xs
        assert list(line.get_ydata()) == ys


def test_inset_kind_draws_both_layers():
    fig = build_figure(_job("ber-vs-osnr-with-snr-inset", "dmt-rate-82km.csv",
                            snr="dmt-rate-82km-snr.csv"))
    main = fig.axes[0]
    inset = main.child_axes[0]
    rows = _rows("dmt-rate-82km.csv")
    for name, line in _data_lines(main).items():
        xs, ys = _series_of(rows, name, "osnr_db", "ber")
        assert list(line.get_xdata()) == xs
        assert list(line.get_ydata()) == ys
    snr_rows = _rows("dmt-rate-82km-snr.csv")
    inset_lines = _data_lines(inset)
    assert set(inset_lines) == {r["series"] for r in snr_rows}
    for name, line in inset_lines.items():
        xs, ys = _series_of(snr_rows, name, "freq_ghz", "snr_db")
        assert len(xs) == 255
        assert list(line.get_xdata()) == xs
        assert list(line.get_ydata()) == ys


def test_inset_kind_requires_snr_csv():
    with pytest.raises(RenderError, match="--snr"):
        build_figure(_job("ber-vs-osnr-with-snr-inset", "dmt-rate-82km.csv"))


def test_vsb_panel_plots_channels_and_aggregate():
    fig = build_figure(_job("vsb-wdm-panel", "vsb-wdm-400g.csv"))
    ax = fig.axes[0]
    rows = _rows("vsb-wdm-400g.csv")
    line = _data_lines(ax)["per-channel"]
    xs, ys = _series_of(rows, "per-channel", "channel_index", "ber")
    assert list(line.get_xdata()) == xs == [float(i) for i in range(8)]
    assert list(line.get_ydata()) == ys
    assert "448" in ax.get_title()


def test_fec_threshold_lines_on_every_kind():
    jobs = [
        _job("osnr-curves", "b2b-osnr-analytic.csv"),
        _job("reach-curves", "pam4-reach.csv"),
        _job("ber-vs-osnr-with-snr-inset", "dmt-rate-82km.csv",
             snr="dmt-rate-82km-snr.csv"),
        _job("vsb-wdm-panel", "vsb-wdm-400g.csv"),
    ]
    for job in jobs:
        fig = build_figure(job)
        fec = _fec_lines(fig.axes[0])
        assert sorted(set(ln.get_ydata()[0] for ln in fec)) == [4.0e-3, 1.9e-2]


def test_axis_range_override():
    fig = build_figure(_job("osnr-curves", "b2b-osnr-analytic.csv"))
    job = _job("osnr-curves", "b2b-osnr-analytic.csv")
    job.xlim = (12.0, 30.0)
    job.ylim = (1e-6, 1e-1)
    fig = build_figure(job)
    assert fig.axes[0].get_xlim() == (12.0, 30.0)
    assert fig.axes[0].get_ylim() == (1e-6, 1e-1)


def test_render_is_deterministic(tmp_path):
    outs = []
    for name in ("a.svg", "b.svg"):
        job = _job("osnr-curves", "b2b-osnr-analytic.csv", out=tmp_path / name)
        render(job)
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    assert len(outs[0]) > 10000
    assert b"4.0e-03" in outs[0] or b"HD-FEC" in outs[0]


def test_unknown_kind_rejected(tmp_path):
    job = _job("osnr-curves", "b2b-osnr-analytic.csv")
    job.kind = "pie-chart"
    with pytest.raises(RenderError, match="pie-chart"):
        build_figure(job)


def _write_csv(path, header, rows):
    path.write_text("\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n")


def test_unknown_schema_version_rejected(tmp_path):
    bad = tmp_path / "bad.csv"
    _write_csv(bad, ["schema_version", "series", "osnr_db", "ber"],
               [["2", "s", "10", "1e-3"]])
    with pytest.raises(RenderError, match="schema_version '2'"):
        build_figure(RenderJob("osnr-curves", bad, tmp_path / "x.svg"))


def test_missing_column_named(tmp_path):
    bad = tmp_path / "bad.csv"
    _write_csv(bad, ["schema_version", "series", "osnr_db"], [["1", "s", "10"]])
    with pytest.raises(RenderError, match="missing column 'ber'"):
        build_figure(RenderJob("osnr-curves", bad, tmp_path / "x.svg"))


def test_empty_results_reported_as_no_series(tmp_path):
    empty = tmp_path / "empty.csv"
    _write_csv(empty, ["schema_version", "series", "osnr_db", "ber"], [])
    with pytest.raises(RenderError, match="no series"):
        build_figure(RenderJob("osnr-curves", empty, tmp_path / "x.svg"))

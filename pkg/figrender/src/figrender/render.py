"""Figure assembly from sweep CSVs.

Loaders group rows by series in file order and the plot calls receive those
numbers untouched, so probing rendered line data recovers the CSV exactly.
Rendering is deterministic: fixed style, fixed SVG hash salt, no timestamps.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  backend pinned before pyplot

from . import theme  # noqa: E402

KINDS = (
    "osnr-curves",
    "reach-curves",
    "ber-vs-osnr-with-snr-inset",
    "vsb-wdm-panel",
)

_HASH_SALT = "figrender"


class RenderError(ValueError):
    """Input contract violation; the CLI reports it and exits 2."""


@dataclass(slots=True)
class RenderJob:
    kind: str
    results_csv: Path
    out_path: Path
    snr_csv: Path | None = None
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None


def load_rows(path: Path, required: tuple[str, ...]) -> list[dict]:
    """Parse one CSV, insisting on the columns a figure kind consumes."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in ("schema_version", "series", *required):
            if col not in header:
                raise RenderError(f"missing column '{col}' in {path}")
        rows = list(reader)
    for row in rows:
        if row["schema_version"] != "1":
            raise RenderError(
                f"unknown schema_version '{row['schema_version']}' in {path}"
            )
    return rows


def _series_xy(rows: list[dict], xcol: str, ycol: str) -> dict[str, tuple[list, list]]:
    """Group (x, y) pairs by series, keeping file order; empty cells drop."""
    series: dict[str, tuple[list, list]] = {}
    for row in rows:
        if row[xcol] == "" or row[ycol] == "":
            continue
        xs, ys = series.setdefault(row["series"], ([], []))
        xs.append(float(row[xcol]))
        ys.append(float(row[ycol]))
    if not series:
        raise RenderError("no series")
    return series


def _draw_ber_series(ax, series: dict, xlabel: str) -> None:
    for i, (name, (xs, ys)) in enumerate(series.items()):
        ax.plot(xs, ys, color=theme.series_color(i), label=name, **theme.MARKER_KW)
    ax.set_yscale("log")
    theme.draw_fec_lines(ax)
    theme.style_axes(ax, xlabel, "pre-FEC BER")
    ax.legend(fontsize=8)


def _fig_osnr_curves(job: RenderJob):
    rows = load_rows(job.results_csv, ("osnr_db", "ber"))
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    _draw_ber_series(ax, _series_xy(rows, "osnr_db", "ber"), "OSNR (dB)")
    return fig


def _fig_reach_curves(job: RenderJob):
    rows = load_rows(job.results_csv, ("distance_km", "ber"))
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    _draw_ber_series(ax, _series_xy(rows, "distance_km", "ber"), "distance (km)")
    return fig


def _fig_ber_with_snr_inset(job: RenderJob):
    if job.snr_csv is None:
        raise RenderError(
            "kind 'ber-vs-osnr-with-snr-inset' needs an SNR profile CSV (--snr)"
        )
    rows = load_rows(job.results_csv, ("osnr_db", "ber"))
    snr_rows = load_rows(job.snr_csv, ("freq_ghz", "snr_db"))
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    _draw_ber_series(ax, _series_xy(rows, "osnr_db", "ber"), "OSNR (dB)")
    inset = ax.inset_axes(theme.INSET_RECT)
    for i, (name, (xs, ys)) in enumerate(_series_xy(snr_rows, "freq_ghz", "snr_db").items()):
        inset.plot(xs, ys, color=theme.series_color(i), linewidth=0.9, label=name)
    inset.set_xlabel("frequency (GHz)", fontsize=7)
    inset.set_ylabel("SNR (dB)", fontsize=7)
    inset.tick_params(labelsize=6)
    inset.grid(True, **theme.GRID_KW)
    return fig


def _fig_vsb_wdm_panel(job: RenderJob):
    rows = load_rows(job.results_csv, ("channel_index", "ber", "aggregate_rate_gbps"))
    series = _series_xy(rows, "channel_index", "ber")
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    _draw_ber_series(ax, series, "channel index")
    channels = sorted({x for xs, _ in series.values() for x in xs})
    ax.set_xticks(channels)
    aggregate = next(r["aggregate_rate_gbps"] for r in rows if r["aggregate_rate_gbps"])
    ax.set_title(f"{float(aggregate):g} Gb/s raw aggregate", fontsize=10)
    return fig


_BUILDERS = {
    "osnr-curves": _fig_osnr_curves,
    "reach-curves": _fig_reach_curves,
    "ber-vs-osnr-with-snr-inset": _fig_ber_with_snr_inset,
    "vsb-wdm-panel": _fig_vsb_wdm_panel,
}


def build_figure(job: RenderJob):
    """Build the figure for a job; the caller owns (and closes) it."""
    if job.kind not in KINDS:
        raise RenderError(f"unknown kind '{job.kind}'")
    fig = _BUILDERS[job.kind](job)
    ax = fig.axes[0]
    if job.xlim is not None:
        ax.set_xlim(*job.xlim)
    if job.ylim is not None:
        ax.set_ylim(*job.ylim)
    return fig


def render(job: RenderJob) -> None:
    fig = build_figure(job)
    try:
        with plt.rc_context({"svg.hashsalt": _HASH_SALT}):
            metadata = {"Date": None} if job.out_path.suffix == ".svg" else None
            fig.savefig(job.out_path, metadata=metadata)
    finally:
        plt.close(fig)

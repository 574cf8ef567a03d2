"""Fixed figure styling: one place for every aesthetic decision."""

# pre-FEC thresholds drawn on every BER axis, value and printed label
FEC_LINES = (
    (4.0e-3, "HD-FEC 4.0e-03", "#b03030"),
    (1.9e-2, "SD-FEC 1.9e-02", "#b07830"),
)

# series colors are assigned in order of first appearance in the CSV
SERIES_COLORS = (
    "#1f5fa8", "#d2691e", "#2e8b57", "#8b3a8b",
    "#708090", "#b8860b", "#178a8a", "#99414d",
)

GRID_KW = {"color": "#cccccc", "linewidth": 0.6, "alpha": 0.8}
MARKER_KW = {"marker": "o", "markersize": 4.0, "linewidth": 1.3}
FEC_KW = {"linestyle": "--", "linewidth": 1.0}
INSET_RECT = (0.56, 0.58, 0.40, 0.38)  # upper right, axes fraction


def series_color(index: int) -> str:
    return SERIES_COLORS[index % len(SERIES_COLORS)]


def style_axes(ax, xlabel: str, ylabel: str) -> None:
    ax.grid(True, which="major", **GRID_KW)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)


def draw_fec_lines(ax) -> None:
    for value, label, color in FEC_LINES:
        ax.axhline(value, color=color, label=label, **FEC_KW)

"""
Deterministic SVG line charts of test accuracy per round.
"""
import logging
from pathlib import Path
from typing import List, Sequence, Union
from xml.sax.saxutils import escape

from genfl.errors import EmptyDatasetError
from genfl.schemas.metrics import MetricsTable
from genfl.utils.files import atomic_write_text

logger = logging.getLogger(__name__)

WIDTH = 720
HEIGHT = 440
MARGIN_LEFT = 64
MARGIN_RIGHT = 180
MARGIN_TOP = 40
MARGIN_BOTTOM = 56

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _x_ticks(max_round: int) -> List[int]:
    if max_round <= 0:
        return [0]
    step = max(1, -(-max_round // 5))
    ticks = list(range(0, max_round + 1, step))
    if ticks[-1] != max_round:
        ticks.append(max_round)
    return ticks


def _series_labels(tables: Sequence[MetricsTable]) -> List[str]:
    labels = [t.label or f"series {i + 1}" for i, t in enumerate(tables)]
    if len(set(labels)) != len(labels):
        labels = [f"{label} ({i + 1})" for i, label in enumerate(labels)]
    return labels


class PlotService:
    def render_svg(self, tables: Sequence[MetricsTable], title: str = "Test accuracy per round") -> str:
        """
        One polyline per table, x = round, y = test accuracy in [0, 1].

        Raises:
            EmptyDatasetError: no tables, or a table without rows
        """
        if not tables:
            raise EmptyDatasetError("plot needs at least one metrics table")
        if any(len(t) == 0 for t in tables):
            raise EmptyDatasetError("plot cannot draw an empty metrics table")

        plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        max_round = max(t.rows[-1].round for t in tables)
        x_span = max(max_round, 1)

        def x_of(round_no: int) -> float:
            return MARGIN_LEFT + plot_w * round_no / x_span

        def y_of(accuracy: float) -> float:
            return MARGIN_TOP + plot_h * (1.0 - accuracy)

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
            f'<text x="{_fmt(MARGIN_LEFT + plot_w / 2)}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        ]

        # grid + y ticks
        for i in range(6):
            acc = i / 5
            y = _fmt(y_of(acc))
            parts.append(f'<line x1="{MARGIN_LEFT}" y1="{y}" x2="{MARGIN_LEFT + plot_w}" y2="{y}" stroke="#e0e0e0"/>')
            parts.append(f'<text x="{MARGIN_LEFT - 8}" y="{y}" text-anchor="end" dominant-baseline="middle">{acc:.1f}</text>')
        for tick in _x_ticks(max_round):
            x = _fmt(x_of(tick))
            parts.append(f'<line x1="{x}" y1="{MARGIN_TOP + plot_h}" x2="{x}" y2="{MARGIN_TOP + plot_h + 5}" stroke="#333333"/>')
            parts.append(f'<text x="{x}" y="{MARGIN_TOP + plot_h + 18}" text-anchor="middle">{tick}</text>')

        # axes
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP + plot_h}" x2="{MARGIN_LEFT + plot_w}" '
            f'y2="{MARGIN_TOP + plot_h}" stroke="#333333"/>'
        )
        parts.append(f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{MARGIN_TOP + plot_h}" stroke="#333333"/>')
        parts.append(
            f'<text x="{_fmt(MARGIN_LEFT + plot_w / 2)}" y="{HEIGHT - 14}" text-anchor="middle">Round</text>'
        )
        parts.append(
            f'<text x="16" y="{_fmt(MARGIN_TOP + plot_h / 2)}" text-anchor="middle" '
            f'transform="rotate(-90 16 {_fmt(MARGIN_TOP + plot_h / 2)})">Test accuracy</text>'
        )

        # series + legend
        legend_x = MARGIN_LEFT + plot_w + 16
        for index, (table, label) in enumerate(zip(tables, _series_labels(tables))):
            color = PALETTE[index % len(PALETTE)]
            points = " ".join(f"{_fmt(x_of(r.round))},{_fmt(y_of(r.test_accuracy))}" for r in table.rows)
            parts.append(
                f'<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{points}">'
                f'<title>{escape(label)}</title></polyline>'
            )
            legend_y = MARGIN_TOP + 10 + index * 20
            parts.append(
                f'<line class="legend-key" x1="{legend_x}" y1="{legend_y}" x2="{legend_x + 24}" y2="{legend_y}" '
                f'stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<text class="legend" x="{legend_x + 30}" y="{legend_y}" dominant-baseline="middle">{escape(label)}</text>'
            )

        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    def plot(self, metrics_tables: Sequence[MetricsTable], out_path: Union[str, Path], title: str = None) -> Path:
        """Render the accuracy chart and write it atomically"""
        svg = self.render_svg(metrics_tables) if title is None else self.render_svg(metrics_tables, title)
        path = atomic_write_text(out_path, svg)
        logger.info(f"Wrote {len(metrics_tables)} series to {path}")
        return path


plot_service = PlotService()

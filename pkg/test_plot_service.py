import pytest

from genfl.errors import EmptyDatasetError
from genfl.schemas.metrics import MetricsTable, RoundMetrics
from genfl.services.plot_service import plot_service


def _table(label, accuracies):
    rows = [RoundMetrics(i, acc, 1.0, 0.5, 0.1 * i, 2.0 * i, 0, label) for i, acc in enumerate(accuracies)]
    return MetricsTable(rows=rows, config_hash="abc123", seed=0, label=label)


def test_single_trace_draws_one_polyline():
    svg = plot_service.render_svg([_table("genfl", [0.1, 0.4, 0.7])])
    assert svg.startswith("<svg")
    assert svg.endswith("</svg>\n")
    assert svg.count("<polyline") == 1
    assert ">Round<" in svg
    assert ">Test accuracy<" in svg


def test_one_legend_entry_per_mode():
    tables = [_table(mode, [0.1, 0.5]) for mode in ("genfl", "fl-only", "aigc-only")]
    svg = plot_service.render_svg(tables)
    assert svg.count("<polyline") == 3
    assert svg.count('class="legend"') == 3
    for mode in ("genfl", "fl-only", "aigc-only"):
        assert f">{mode}</text>" in svg


def test_plot_is_deterministic(tmp_path):
    tables = [_table("a", [0.2, 0.3, 0.9]), _table("b", [0.1, 0.6])]
    first = plot_service.plot(tables, tmp_path / "one.svg").read_bytes()
    second = plot_service.plot(tables, tmp_path / "two.svg").read_bytes()
    assert first == second


def test_duplicate_labels_are_disambiguated():
    svg = plot_service.render_svg([_table("genfl", [0.1]), _table("genfl", [0.2])])
    assert ">genfl (1)</text>" in svg
    assert ">genfl (2)</text>" in svg


def test_labels_and_title_are_escaped():
    svg = plot_service.render_svg([_table("a<b", [0.5])], title="x & y")
    assert "a&lt;b" in svg
    assert "x &amp; y" in svg


def test_empty_input_is_rejected():
    with pytest.raises(EmptyDatasetError):
        plot_service.render_svg([])
    with pytest.raises(EmptyDatasetError):
        plot_service.render_svg([MetricsTable(label="empty")])

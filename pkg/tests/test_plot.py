import xml.etree.ElementTree as ET

import pytest

from app.api.schemas.report_schemas import DiagnosticRow, DiagnosticTable, JumpReport, LimitTrace, PointRecord
from app.services.plot_service import PlotService, series_gid
from app.utils.exceptions import NoDataError


def _table(point_ids=(0, 1), count=10):
    rows = [
        DiagnosticRow(point_id=pid, delta=0.5 ** k, s_sum=(pid + 1) * 0.5 ** k, s_diff=0.1 * 0.5 ** k)
        for pid in point_ids for k in range(count)
    ]
    return DiagnosticTable(generated_at="2024-01-01T00:00:00Z", scene={"name": "unit-circle"},
                           kernel={"name": "riesz"}, rows=rows)


def _report(traces):
    trace = LimitTrace(value=[0.0, 0.0], converged=True, last_delta=0.0, samples=[], increments=[])
    points = [
        PointRecord(
            point_id=i, patch=0, params=[0.0], x=[1.0, 0.0], normal=[1.0, 0.0], f=1.0,
            pv=[0.0, 0.0], t_plus=[0.0, 0.0], t_minus=[0.0, 0.0], jump_constant=[0.0, 0.0],
            jump_term=[0.0, 0.0], residual_avg=0.0, residual_jump=0.0, converged=True,
            traces={"pv": trace, "t_plus": trace, "t_minus": trace}, residual_trace=t,
        )
        for i, t in enumerate(traces)
    ]
    return JumpReport(generated_at="2024-01-01T00:00:00Z", mode="jump", scene={"name": "flat-line"},
                      kernel={"name": "riesz"}, config={}, residual_tol=1e-3, all_converged=True,
                      passed=True, max_residual_avg=0.0, max_residual_jump=0.0, points=points)


@pytest.fixture(scope="module")
def plots():
    return PlotService()


SVG = "{http://www.w3.org/2000/svg}"


def _markers(svg, index):
    root = ET.fromstring(svg.encode("utf-8"))
    for group in root.iter(SVG + "g"):
        if group.get("id") == series_gid(index):
            return len(list(group.iter(SVG + "use")))
    return None


def test_one_marker_per_point(plots):
    svg = plots.render_svg(_table())
    assert "<svg" in svg
    assert _markers(svg, 0) == 10
    assert _markers(svg, 1) == 10
    assert _markers(svg, 2) is None
    assert "point 0" in svg and "point 1" in svg


def test_output_is_byte_identical(plots, tmp_path):
    first = plots.emit_plot(_table(), tmp_path / "a.svg").read_bytes()
    second = plots.emit_plot(_table(), tmp_path / "b.svg").read_bytes()
    assert first == second


def test_series_from_report(plots):
    report = _report([[[0.1, 1e-3, 2e-3], [0.05, 1e-4, 5e-5]], [[0.1, 0.0, 0.0]]])
    title, x_label, series = plots.series_from(report)
    assert x_label == "scale"
    assert "flat-line" in title
    assert series[0][1] == [(0.1, 2e-3), (0.05, 1e-4)]
    # 零残差按下限画出
    svg = plots.render_svg(report)
    assert _markers(svg, 0) == 2
    assert _markers(svg, 1) == 1


def test_series_from_table(plots):
    title, x_label, series = plots.series_from(_table(point_ids=(3,), count=2))
    assert x_label == "delta"
    assert series == [("point 3", [(1.0, 4.0), (0.5, 2.0)])]


def test_no_data(plots):
    with pytest.raises(NoDataError):
        plots.render_svg(_table(point_ids=()))
    with pytest.raises(NoDataError):
        plots.render_svg(_report([[]]))

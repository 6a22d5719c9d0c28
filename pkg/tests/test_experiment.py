import json
import math

import numpy as np
import pytest

from app.api.schemas.experiment_schemas import ExperimentConfig
from app.config.settings import settings
from app.repositories.report_repository import ReportRepository
from app.services.experiment_service import ExperimentService
from app.services.operator_service import OperatorService
from app.utils.exceptions import ConfigurationError, SceneError


@pytest.fixture(scope="module")
def experiments():
    return ExperimentService()


def _config(**kwargs):
    return ExperimentConfig.model_validate(kwargs)


def test_flat_line_passes(experiments):
    report = experiments.run_experiment(_config(scene="flat-line", points=2))
    assert report.passed
    assert report.mode == "jump"
    assert report.scene["name"] == "flat-line"
    assert report.truncation_length == pytest.approx(1e6)
    for point in report.points:
        assert point.residual_avg < 1e-5
        assert point.residual_jump < 1e-5
        assert np.allclose(point.jump_term, [0.0, np.pi])
    assert experiments.exit_code(report) == 0


def test_circle_passes(experiments):
    report = experiments.run_experiment(_config(scene="unit-circle", points=2))
    assert report.all_converged
    assert report.max_residual_avg < 1e-3
    assert report.max_residual_jump < 1e-3
    assert [p.point_id for p in report.points] == [0, 1]


def test_atom_pair_is_continuous(experiments):
    report = experiments.run_experiment(_config(scene="atom-pair", points=2))
    assert report.passed
    for point in report.points:
        assert point.f == 0.0
        assert point.jump_term == [0.0, 0.0]
        assert np.allclose(point.t_plus, point.t_minus, atol=1e-6)


def test_residual_tolerance_decides_exit_code(experiments):
    report = experiments.run_experiment(_config(scene="unit-circle", points=1, residual_tol=1e-30))
    assert not report.passed
    assert experiments.exit_code(report) == 1


@pytest.mark.parametrize("scene, constant", [("unit-circle", True), ("unit-circle-cos", False)])
def test_double_layer_jump_is_half_density(experiments, scene, constant):
    report = experiments.run_double_layer(_config(scene=scene, points=2))
    assert report.mode == "double-layer"
    assert report.kernel["name"] == "double-layer"
    for point in report.points:
        assert point.jump_term == pytest.approx([0.5 * point.f])
        assert point.residual_jump < 1e-3
        assert point.residual_avg < 1e-3
    if constant:
        assert all(p.f == 1.0 for p in report.points)


def test_double_layer_selected_by_kernel_name(experiments):
    prepared = experiments.prepare(_config(scene="unit-circle", points=1, kernel={"name": "double-layer"}))
    assert prepared.mode == "double-layer"
    assert prepared.measure.normal_weighted
    assert prepared.kernel.n == 1


@pytest.mark.slow
def test_double_layer_on_sphere(experiments):
    config = _config(scene="unit-sphere", points=1,
                     quadrature={"abs_tol": 1e-8, "rel_tol": 1e-9, "exclusion_refine": 0.25})
    report = experiments.run_double_layer(config)
    assert report.max_residual_jump < 1e-3


def test_double_layer_needs_closed_carrier(experiments):
    with pytest.raises(SceneError):
        experiments.run_double_layer(_config(scene="flat-line", points=1))


def test_unknown_scene(experiments):
    with pytest.raises(SceneError):
        experiments.run_experiment(_config(scene="nope"))


def test_kernel_dimension_must_match_scene(experiments):
    with pytest.raises(ConfigurationError):
        experiments.prepare(_config(scene="unit-sphere", kernel={"name": "cauchy-power", "j": 1}))


def test_atom_at_anchor_rejected(experiments):
    config = _config(
        scene={"shape": "circle", "atoms": [[[1.0, 0.0], 1.0]]},
        anchors=[{"patch": 0, "params": [0.0]}],
    )
    with pytest.raises(SceneError):
        experiments.prepare(config)


def test_anchor_outside_domain(experiments):
    with pytest.raises(SceneError):
        experiments.prepare(_config(scene="flat-line", anchors=[{"patch": 0, "params": [2e6]}]))
    with pytest.raises(SceneError):
        experiments.prepare(_config(scene="flat-line", anchors=[{"patch": 3, "params": [0.0]}]))


def test_explicit_anchors(experiments):
    prepared = experiments.prepare(_config(scene="unit-square", anchors=[{"patch": 1, "params": [0.25]}]))
    assert len(prepared.anchors) == 1
    assert prepared.anchors[0].patch_index == 1


def _dump(report):
    return report.model_dump(mode="json", exclude={"generated_at"})


def test_reports_are_deterministic(experiments, monkeypatch):
    config = _config(scene="unit-circle", points=3)
    first = _dump(experiments.run_experiment(config))
    second = _dump(experiments.run_experiment(config))
    assert first == second
    monkeypatch.setattr(settings, "JUMPLAB_THREADS", 3)
    parallel = _dump(experiments.run_experiment(config))
    assert parallel == first


def test_persistence(experiments, tmp_path):
    out = tmp_path / "report.json"
    table = tmp_path / "report.csv"
    plot = tmp_path / "report.svg"
    report = experiments.run_experiment(
        _config(scene="flat-line", points=1, output=str(out), csv=str(table), plot=str(plot))
    )
    saved = json.loads(out.read_text(encoding="utf-8"))
    assert saved["passed"] == report.passed
    assert "output" not in saved["config"]
    assert len(saved["points"]) == 1
    assert len(saved["points"][0]["traces"]) == 3

    lines = table.read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",") == ReportRepository.csv_header(report)
    assert lines[0] == ("point_id,x0,x1,N0,N1,f,pv0,pv1,Tplus0,Tplus1,Tminus0,Tminus1,"
                        "CK0,CK1,res_avg,res_jump,converged")
    assert len(lines) == 2
    assert "<svg" in plot.read_text(encoding="utf-8")


def test_reflection_checks(experiments):
    report = experiments.run_experiment(_config(scene="flat-line", points=1, reflection_checks=True))
    assert report.points[0].reflection is not None
    assert report.points[0].reflection < 1e-9


def test_single_delta_sweep(experiments):
    table = experiments.diagnostic_sweep(_config(scene="flat-line", points=2), [0.1])
    assert len(table.rows) == 2
    assert {row.point_id for row in table.rows} == {0, 1}
    assert all(row.s_sum < 1e-5 and row.s_diff < 1e-5 for row in table.rows)


def test_circle_sweep_is_monotone(experiments, tmp_path):
    out = tmp_path / "diag.csv"
    table = experiments.diagnostic_sweep(
        _config(scene="unit-circle", points=1, csv=str(out)), [0.4, 0.2, 0.1, 0.05],
    )
    sums = [row.s_sum for row in table.rows]
    diffs = [row.s_diff for row in table.rows]
    assert all(b <= a for a, b in zip(sums, sums[1:]))
    assert all(b <= a for a, b in zip(diffs, diffs[1:]))
    assert out.read_text(encoding="utf-8").splitlines()[0] == "point_id,delta,s_sum,s_diff"


def test_sweep_uses_config_ladder(experiments):
    table = experiments.diagnostic_sweep(_config(scene="atom-pair", points=1, delta_ladder=[0.2, 0.1]))
    assert [row.delta for row in table.rows] == [0.2, 0.1]


def test_sweep_rejects_empty_ladder(experiments):
    with pytest.raises(ConfigurationError):
        experiments.diagnostic_sweep(_config(scene="flat-line", points=1), [])


def test_circle_sweep_default_ladder_reaches_bound(experiments):
    table = experiments.diagnostic_sweep(_config(scene="unit-circle", points=1))
    ladder = settings.DIAGNOSTIC_DELTA_LADDER
    assert [row.delta for row in table.rows] == ladder
    assert all(b == pytest.approx(0.5 * a) for a, b in zip(ladder, ladder[1:]))
    sums = [row.s_sum for row in table.rows]
    diffs = [row.s_diff for row in table.rows]
    for column in (sums, diffs):
        assert all(b <= 1.1 * a for a, b in zip(column, column[1:]))
        assert column[-1] < 1e-2
    # 圆周上偏差主项为 πδ
    last = table.rows[-1]
    assert last.s_sum < 1.2 * math.pi * last.delta


@pytest.mark.slow
def test_circle_full_grid(experiments):
    report = experiments.run_experiment(_config(scene="unit-circle", points=16))
    assert report.passed
    assert len(report.points) == 16


@pytest.mark.parametrize("scene, j", [
    ("flat-line", 1), ("flat-line", 3), ("fourier-graph", 1), ("fourier-graph", 3),
])
def test_cauchy_residuals(experiments, scene, j):
    report = experiments.run_experiment(_config(scene=scene, points=2, kernel={"name": "cauchy-power", "j": j}))
    bound = 1e-5 if scene == "flat-line" else 1e-3
    assert report.all_converged
    assert report.max_residual_avg < bound
    assert report.max_residual_jump < bound
    if scene == "flat-line":
        # N = i，(-1)^{(j-1)/2} π i^j 对 j = 1, 3 都等于 πi
        for point in report.points:
            assert np.allclose(point.jump_term, [0.0, np.pi])


@pytest.mark.slow
def test_sphere_cos_double_layer_grid(experiments):
    config = _config(scene="unit-sphere-cos", points=8,
                     quadrature={"abs_tol": 1e-8, "rel_tol": 1e-9, "exclusion_refine": 0.25})
    report = experiments.run_double_layer(config)
    assert len(report.points) == 8
    for point in report.points:
        assert point.jump_term == pytest.approx([0.5 * point.f])
        assert point.residual_jump < 1e-3


def _riemann_pv(x, nodes=10 ** 6, exclusion=2e-5):
    """单位圆上 ∫ (x-y)/|x-y|² ds(y) 的中点 Riemann 和，节点关于 x 对称，去掉 |x-y| < exclusion"""
    h = 2.0 * math.pi / nodes
    t = math.atan2(x[1], x[0]) + (np.arange(nodes) + 0.5) * h
    diff = np.asarray(x)[None, :] - np.stack([np.cos(t), np.sin(t)], axis=1)
    r2 = np.sum(diff ** 2, axis=1)
    kept = r2 > exclusion ** 2
    return h * np.sum(diff[kept] / r2[kept][:, None], axis=0)


@pytest.mark.slow
def test_circle_pv_matches_riemann_sum(experiments):
    prepared = experiments.prepare(_config(scene="unit-circle", points=8))
    operators = OperatorService()
    for anchor in prepared.anchors:
        frame = prepared.measure.carrier.frame_at(anchor)
        pv = operators.principal_value(prepared.kernel, prepared.measure, anchor).value
        reference = _riemann_pv(frame.point)
        assert np.allclose(reference, math.pi * frame.normal, atol=1e-4)
        assert np.allclose(pv, reference, atol=1e-4)

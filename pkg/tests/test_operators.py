import math

import numpy as np
import pytest

from app.models.configs import ExtrapolationConfig
from app.models.geometry import CarrierPoint, make_circle, make_segment
from app.models.kernel import make_cauchy_power, make_riesz
from app.models.measure import Atom, RadonMeasure, constant_density, trig_density
from app.services.operator_service import OperatorService, Side
from app.utils.exceptions import ConfigurationError, DomainError

RIESZ = make_riesz(1)
# 长线段用场景长度尺度 2 而不是线段全长
FLAT_CFG = ExtrapolationConfig(eps0=0.2)


@pytest.fixture(scope="module")
def operators():
    return OperatorService()


@pytest.fixture(scope="module")
def circle_measure():
    return RadonMeasure(make_circle(), constant_density(1.0))


@pytest.fixture(scope="module")
def flat_line():
    return RadonMeasure(make_segment([-1e6, 0.0], [1e6, 0.0]), constant_density(1.0))


def _atoms(*pairs):
    return RadonMeasure(None, None, tuple(Atom(tuple(p), w) for p, w in pairs))


def test_single_atom_outside_truncation(operators):
    nu = _atoms(([2.0, 0.0], 1.0))
    value = operators.truncated_transform(RIESZ, nu, [0.0, 0.0], 1.0).value
    assert np.allclose(value, RIESZ.evaluate([-2.0, 0.0]))


def test_single_atom_inside_truncation(operators):
    nu = _atoms(([0.5, 0.0], 1.0))
    assert np.array_equal(operators.truncated_transform(RIESZ, nu, [0.0, 0.0], 1.0).value, np.zeros(2))


@pytest.mark.parametrize("kernel", [make_riesz(1), make_cauchy_power(1), make_cauchy_power(3)])
def test_symmetric_atoms_cancel_exactly(operators, kernel):
    x = np.array([0.3, -0.2])
    p = np.array([1.1, 0.7])
    nu = _atoms((p, 1.0), (2.0 * x - p, 1.0))
    for eps in (1e-3, 0.5, 1.0):
        assert np.linalg.norm(operators.truncated_transform(kernel, nu, x, eps).value) < 1e-12


def test_maximal_transform_atoms(operators):
    single = _atoms(([1.0, 0.0], 1.0))
    assert operators.maximal_transform(RIESZ, single, [0.0, 0.0], [0.1, 0.5, 0.9]) == pytest.approx(1.0)
    pair = _atoms(([1.0, 0.0], 1.0), ([-1.0, 0.0], 1.0))
    assert operators.maximal_transform(RIESZ, pair, [0.0, 0.0], [0.1, 0.5]) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ConfigurationError):
        operators.maximal_transform(RIESZ, pair, [0.0, 0.0], [])


def test_maximal_transform_circle(operators, circle_measure):
    value = operators.maximal_transform(RIESZ, circle_measure, [1.0, 0.0], [0.5, 0.1, 0.01])
    assert value >= math.pi - 0.6


def test_truncation_must_be_positive(operators, circle_measure):
    with pytest.raises(ConfigurationError):
        operators.truncated_transform(RIESZ, circle_measure, [1.0, 0.0], 0.0)


def test_dimension_mismatch(operators):
    nu = _atoms(([1.0, 0.0, 0.0], 1.0))
    with pytest.raises(ConfigurationError):
        operators.truncated_transform(RIESZ, nu, [0.0, 0.0, 0.0], 0.1)


def test_linearity(operators):
    circle = make_circle()
    a = RadonMeasure(circle, trig_density(c0=1.0, cos=[0.3]), (Atom((2.0, 0.0), 1.0),))
    b = RadonMeasure(circle, trig_density(sin=[0.7]), (Atom((0.0, -3.0), -2.0),))
    mix = a.scaled(2.0) + b.scaled(-0.5)
    x = circle.points(0, [0.4])[0]
    eps = 0.05
    lhs = operators.truncated_transform(RIESZ, mix, x, eps).value
    rhs = (2.0 * operators.truncated_transform(RIESZ, a, x, eps).value
           - 0.5 * operators.truncated_transform(RIESZ, b, x, eps).value)
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_pv_segment_midpoint_vanishes(operators):
    nu = RadonMeasure(make_segment([-1.0, 0.0], [1.0, 0.0]), constant_density(1.0))
    anchor = CarrierPoint(0, (0.0,))
    for kernel in (make_riesz(1), make_cauchy_power(1)):
        result = operators.principal_value(kernel, nu, anchor)
        assert result.converged
        assert np.linalg.norm(result.value) < 1e-9


def test_pv_unit_circle(operators, circle_measure):
    result = operators.principal_value(RIESZ, circle_measure, CarrierPoint(0, (0.0,)))
    assert result.converged
    assert np.allclose(result.value, [math.pi, 0.0], atol=1e-4)
    assert result.increments[-1] < 1e-6


def test_pv_richardson_converges_sooner(operators, circle_measure):
    anchor = CarrierPoint(0, (0.0,))
    plain = operators.principal_value(RIESZ, circle_measure, anchor)
    accelerated = operators.principal_value(RIESZ, circle_measure, anchor, ExtrapolationConfig(richardson_order=1))
    assert accelerated.converged
    assert len(accelerated.samples) < len(plain.samples)
    assert np.allclose(accelerated.value, [math.pi, 0.0], atol=1e-5)


def test_pv_rejects_atom_at_point(operators):
    circle = make_circle()
    nu = RadonMeasure(circle, constant_density(1.0), (Atom((1.0, 0.0), 1.0),))
    with pytest.raises(DomainError):
        operators.principal_value(RIESZ, nu, CarrierPoint(0, (0.0,)))


@pytest.mark.parametrize("side, expected", [(Side.PLUS, [0.0, math.pi]), (Side.MINUS, [0.0, -math.pi])])
def test_flat_line_one_sided_limits(operators, flat_line, side, expected):
    result = operators.nontangential_limit(RIESZ, flat_line, CarrierPoint(0, (0.0,)), side, cfg=FLAT_CFG)
    assert result.converged
    assert np.allclose(result.value, expected, atol=1e-5)


def test_circle_one_sided_limits(operators, circle_measure):
    anchor = CarrierPoint(0, (0.0,))
    plus = operators.nontangential_limit(RIESZ, circle_measure, anchor, Side.PLUS)
    minus = operators.nontangential_limit(RIESZ, circle_measure, anchor, "-")
    assert np.allclose(plus.value, [2.0 * math.pi, 0.0], atol=1e-4)
    assert np.allclose(minus.value, [0.0, 0.0], atol=1e-4)


def test_nontangential_rejects_bad_cone(operators, circle_measure):
    with pytest.raises(ConfigurationError):
        operators.nontangential_limit(RIESZ, circle_measure, CarrierPoint(0, (0.0,)), Side.PLUS, a=0.3, b=0.4)


def test_cone_value_rejects_apex(operators, circle_measure):
    with pytest.raises(DomainError):
        operators.cone_value(RIESZ, circle_measure, CarrierPoint(0, (0.0,)), [1.0, 0.0], 0.25)


def test_jump_residuals_flat_line(operators, flat_line):
    result = operators.jump_residuals(RIESZ, flat_line, CarrierPoint(0, (0.3,)), cfg=FLAT_CFG)
    assert result.converged
    assert result.residual_avg < 1e-5
    assert result.residual_jump < 1e-5
    assert np.allclose(result.jump_constant, [0.0, math.pi])
    assert np.allclose(result.half_difference, [0.0, math.pi], atol=1e-5)


def test_jump_residuals_circle(operators, circle_measure):
    result = operators.jump_residuals(RIESZ, circle_measure, CarrierPoint(0, (0.0,)), point_id=3)
    assert result.point_id == 3
    assert result.residual_avg < 1e-3
    assert result.residual_jump < 1e-3
    assert all(r >= 0 for _, ra, rj in result.residual_trace for r in (ra, rj))
    assert len(result.residual_trace) == min(len(result.pv.samples), len(result.t_plus.samples),
                                             len(result.t_minus.samples))


@pytest.mark.parametrize("j", [1, 3])
def test_jump_residuals_cauchy_on_circle(operators, j):
    nu = RadonMeasure(make_circle(), trig_density(c0=1.0, cos=[0.5]))
    result = operators.jump_residuals(make_cauchy_power(j), nu, CarrierPoint(0, (0.9,)))
    assert result.residual_avg < 1e-3
    assert result.residual_jump < 1e-3

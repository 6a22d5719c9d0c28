import math

import numpy as np
import pytest

from app.models.geometry import CarrierPoint, make_circle, make_segment
from app.models.measure import (
    Atom,
    RadonMeasure,
    constant_density,
    gaussian_density,
    make_density,
    polynomial_density,
    trig_density,
)
from app.services.measure_service import MeasureService
from app.utils.exceptions import ConfigurationError, DomainError


@pytest.fixture(scope="module")
def measures():
    return MeasureService()


@pytest.fixture(scope="module")
def line():
    return make_segment([-10.0, 0.0], [10.0, 0.0])


def test_density_constant(measures, line):
    nu = RadonMeasure(line, constant_density(1.0))
    assert measures.density_at(nu, CarrierPoint(0, (3.0,))) == 1.0


def test_density_cos_on_circle(measures):
    nu = RadonMeasure(make_circle(), trig_density(cos=[1.0]))
    assert measures.density_at(nu, CarrierPoint(0, (0.0,))) == pytest.approx(1.0)
    # 环境空间中的点先定位到载体上
    assert measures.density_at(nu, [0.0, 1.0]) == pytest.approx(0.0, abs=1e-8)


def test_density_of_atoms_only(measures):
    nu = RadonMeasure(make_circle(), None, (Atom((1.0, 0.0), 2.0),))
    assert measures.density_at(nu, CarrierPoint(0, (0.0,))) == 0.0


def test_density_off_carrier_raises(measures, line):
    with pytest.raises(DomainError):
        measures.density_at(RadonMeasure(line, constant_density()), [0.0, 1.0])


def test_density_without_carrier_raises(measures):
    nu = RadonMeasure(None, None, (Atom((0.0, 0.0), 1.0),))
    with pytest.raises(DomainError):
        measures.density_at(nu, [0.0, 0.0])


def test_ball_mass_line(measures, line):
    nu = RadonMeasure(line, constant_density(1.0))
    assert measures.ball_mass(nu, [0.0, 0.0], 1.0) == pytest.approx(2.0, abs=1e-9)


def test_ball_mass_with_atom(measures, line):
    nu = RadonMeasure(line, constant_density(1.0), (Atom((0.0, 0.5), 3.0),))
    assert measures.ball_mass(nu, [0.0, 0.0], 1.0) == pytest.approx(5.0, abs=1e-9)
    assert measures.ball_mass(nu, [0.0, 0.0], 0.4) == pytest.approx(0.8, abs=1e-9)


def test_ball_mass_whole_circle(measures):
    nu = RadonMeasure(make_circle(), constant_density(1.0))
    assert measures.ball_mass(nu, [0.0, 0.0], 2.0) == pytest.approx(2.0 * math.pi, abs=1e-9)


def test_ball_mass_monotone(measures):
    nu = RadonMeasure(make_circle(), trig_density(c0=1.0, cos=[0.5]))
    masses = [measures.ball_mass(nu, [1.0, 0.0], r) for r in (0.1, 0.3, 0.9, 1.5, 2.5)]
    assert all(b >= a for a, b in zip(masses, masses[1:]))


def test_ball_mass_rejects_radius(measures, line):
    with pytest.raises(ConfigurationError):
        measures.ball_mass(RadonMeasure(line, constant_density()), [0.0, 0.0], 0.0)


def test_maximal_density_line(measures, line):
    nu = RadonMeasure(line, constant_density(1.0))
    result = measures.maximal_density(nu, [0.0, 0.0], radii=[0.1, 0.5, 1.0, 2.0])
    assert result.value == pytest.approx(2.0, abs=1e-8)
    assert not result.infinite


def test_maximal_density_single_atom(measures):
    nu = RadonMeasure(None, None, (Atom((1.0, 0.0), 1.0),))
    result = measures.maximal_density(nu, [0.0, 0.0], radii=[0.5, 1.0, 2.0, 4.0])
    assert result.value == pytest.approx(1.0)
    assert result.radius == 1.0


def test_maximal_density_atom_at_center(measures):
    nu = RadonMeasure(None, None, (Atom((0.0, 0.0), 1.0),))
    result = measures.maximal_density(nu, [0.0, 0.0])
    assert result.infinite
    assert math.isinf(result.value)


def test_measure_validation(line):
    with pytest.raises(ConfigurationError):
        RadonMeasure(None, constant_density())
    with pytest.raises(ConfigurationError):
        RadonMeasure(line, constant_density(), (Atom((0.0, 1.0), 1.0),), normal_weighted=True)
    with pytest.raises(ConfigurationError):
        RadonMeasure(line, None, (Atom((0.0, 1.0, 2.0), 1.0),))


def test_measure_mixture(line):
    a = RadonMeasure(line, constant_density(2.0), (Atom((0.0, 1.0), 1.0),))
    b = RadonMeasure(line, polynomial_density([0.0, 1.0]))
    mix = a.scaled(0.5) + b.scaled(-2.0)
    t = np.array([[0.0], [1.0], [-3.0]])
    assert np.allclose(mix.density_values(t), [1.0, -1.0, 7.0])
    assert mix.atoms[0].weight == 0.5


def test_sum_requires_same_carrier(line):
    other = make_segment([-10.0, 0.0], [10.0, 0.0])
    with pytest.raises(DomainError):
        RadonMeasure(line, constant_density()) + RadonMeasure(other, constant_density())


def test_make_density_registry():
    assert make_density(None) is None
    g = make_density({"kind": "gaussian", "amplitude": 2.0, "center": [0.0], "width": 1.0})
    assert g(np.array([[0.0]]))[0] == pytest.approx(2.0)
    assert gaussian_density(width=2.0).describe()["kind"] == "gaussian"
    with pytest.raises(ConfigurationError):
        make_density({"kind": "spline"})
    with pytest.raises(ConfigurationError):
        make_density({"kind": "constant", "level": 1.0})

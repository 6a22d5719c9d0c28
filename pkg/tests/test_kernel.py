import math

import numpy as np
import pytest

from app.models.kernel import (
    make_cauchy_power,
    make_double_layer,
    make_kernel,
    make_riesz,
    unit_sphere_area,
)
from app.services.kernel_service import KernelService
from app.utils.exceptions import ConfigurationError, InvalidKernelError, KernelDomainError


@pytest.fixture(scope="module")
def kernel_service():
    return KernelService()


def test_riesz_values():
    k = make_riesz(1)
    assert np.allclose(k.evaluate([1.0, 0.0]), [1.0, 0.0], atol=1e-15)
    assert np.allclose(k.evaluate([0.0, 2.0]), [0.0, 0.5], atol=1e-15)


def test_riesz_unit_sphere_identity():
    k = make_riesz(2)
    x = np.array([0.6, 0.0, 0.8])
    assert np.allclose(k.evaluate(x), x, atol=1e-15)


def test_cauchy_power_at_i():
    k = make_cauchy_power(3)
    assert np.allclose(k.evaluate([0.0, 1.0]), [0.0, -1.0], atol=1e-15)


def test_batch_evaluation_shape():
    k = make_riesz(1)
    values = k.evaluate(np.array([[1.0, 0.0], [0.0, 2.0], [3.0, 4.0]]))
    assert values.shape == (3, 2)
    assert np.allclose(values[2], np.array([3.0, 4.0]) / 25.0)


def test_evaluate_at_origin_raises():
    with pytest.raises(KernelDomainError):
        make_riesz(1).evaluate([0.0, 0.0])


@pytest.mark.parametrize("j", [0, 2, 4, -1])
def test_even_cauchy_power_rejected(j):
    with pytest.raises(InvalidKernelError):
        make_cauchy_power(j)


def test_unknown_kernel_name():
    with pytest.raises(InvalidKernelError):
        make_kernel("laplace")


def test_unit_sphere_area():
    assert unit_sphere_area(1) == pytest.approx(2.0 * math.pi, rel=1e-14)
    assert unit_sphere_area(2) == pytest.approx(4.0 * math.pi, rel=1e-14)


def test_riesz_closed_form_jumps():
    assert np.allclose(make_riesz(1).closed_form_jump([0.0, 1.0]), [0.0, math.pi], atol=1e-14)
    assert np.allclose(make_riesz(2).closed_form_jump([0.0, 0.0, 1.0]), [0.0, 0.0, 2.0 * math.pi], atol=1e-13)


@pytest.mark.parametrize("j, normal, expected", [
    (1, [0.0, 1.0], [0.0, math.pi]),
    (3, [1.0, 0.0], [-math.pi, 0.0]),
    (5, [1.0, 0.0], [math.pi, 0.0]),
    (1, [1.0, 0.0], [math.pi, 0.0]),
])
def test_cauchy_closed_form_jumps(j, normal, expected):
    assert np.allclose(make_cauchy_power(j).closed_form_jump(normal), expected, atol=1e-14)


def test_double_layer_jump_is_half_normal():
    k = make_double_layer(2)
    assert k.contracts_normal
    assert np.allclose(k.closed_form_jump([0.0, 0.0, 1.0]), [0.0, 0.0, 0.5])


def test_make_kernel_registry_defaults():
    assert make_kernel("riesz").n == 1
    assert make_kernel("cauchy-power", j=3).params["j"] == 3
    with pytest.raises(InvalidKernelError):
        make_kernel("cauchy-power", n=2)


@pytest.mark.parametrize("kernel", [make_riesz(1), make_riesz(2), make_cauchy_power(1),
                                    make_cauchy_power(3), make_cauchy_power(5), make_double_layer(1)])
def test_oddness_and_homogeneity(kernel_service, kernel):
    assert kernel_service.check_oddness(kernel, 100_000, seed=1) < 1e-12
    assert kernel_service.check_homogeneity(kernel, 100_000, seed=2) < 1e-12


@pytest.mark.slow
@pytest.mark.parametrize("kernel", [make_riesz(1), make_riesz(2), make_cauchy_power(3)])
def test_oddness_and_homogeneity_million_samples(kernel_service, kernel):
    assert kernel_service.check_oddness(kernel, 1_000_000) < 1e-12
    assert kernel_service.check_homogeneity(kernel, 1_000_000) < 1e-12


def test_cz_bounds(kernel_service):
    assert kernel_service.check_cz_bounds(make_riesz(1), 500, 0) == pytest.approx(1.0, abs=1e-12)
    assert kernel_service.check_cz_bounds(make_cauchy_power(1), 500, 0) == pytest.approx(1.0, abs=1e-12)
    # ∇(x/|x|²) = (I - 2x̂x̂ᵀ)/|x|²，Frobenius 范数为 √2
    assert kernel_service.check_cz_bounds(make_riesz(1), 500, 1) == pytest.approx(math.sqrt(2.0), abs=1e-5)
    assert math.isfinite(kernel_service.check_cz_bounds(make_riesz(1), 200, 2))


def test_cz_bounds_rejects_order(kernel_service):
    with pytest.raises(ConfigurationError):
        kernel_service.check_cz_bounds(make_riesz(1), 10, 3)


def test_check_report_keys(kernel_service):
    report = kernel_service.check_report(make_riesz(1), sample_count=1000)
    assert set(report["cz_constants"]) == {"0", "1", "2"}
    assert report["oddness"] < 1e-12


def test_cauchy_j1_matches_riesz_n1():
    rng = np.random.default_rng(11)
    pts = rng.standard_normal((16, 2))
    cauchy, riesz = make_cauchy_power(1), make_riesz(1)
    assert np.allclose(cauchy.evaluate(pts), riesz.evaluate(pts), atol=1e-14)
    for N in ([0.6, 0.8], [-1.0, 0.0]):
        assert np.allclose(cauchy.closed_form_jump(N), riesz.closed_form_jump(N), atol=1e-14)

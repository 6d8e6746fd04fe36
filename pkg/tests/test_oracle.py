import math

import numpy as np
import pytest
from scipy.special import erf

from dirsim import oracle
from dirsim.bingham import standardize, sample_bingham
from dirsim.errors import InsufficientSamples, NotConverged, UnsupportedDistribution
from dirsim.matrix import sample_uniform_sphere
from dirsim.rng import RngStream


def test_density_examples():
    x = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    np.testing.assert_array_equal(oracle.log_density_unnorm(oracle.uniform(), x), [0, 0])
    np.testing.assert_allclose(oracle.log_density_unnorm(oracle.bingham(np.diag([0, 1, 5.0])), x), [0, -5])
    np.testing.assert_allclose(oracle.log_density_unnorm(oracle.vmf(3.0, [0, 0, 1.0]), x), [0, 3])
    np.testing.assert_allclose(oracle.log_density_unnorm(oracle.acg(np.diag([1, 1, 4.0])), x),
                               [0, -1.5 * math.log(4)])
    np.testing.assert_allclose(oracle.log_density_unnorm(oracle.wrapped_cauchy(0.5), [[1.0, 0.0]]),
                               [math.log(0.75 / 0.25)])


def test_unknown_kind():
    with pytest.raises(UnsupportedDistribution):
        oracle.Dist("kent")
    with pytest.raises(UnsupportedDistribution):
        oracle.log_density_unnorm(oracle.von_mises(1.0), np.ones((2, 3)))


def test_normalizer_uniform():
    assert oracle.quadrature_normalizer(oracle.uniform(), oracle.circle_grid()) == pytest.approx(1, abs=1e-14)
    assert oracle.quadrature_normalizer(oracle.uniform()) == pytest.approx(1, abs=1e-14)


def test_bessel_series():
    assert oracle.bessel_i0_series(1.0) == pytest.approx(1.2660658, abs=1e-7)
    c = oracle.quadrature_normalizer(oracle.von_mises(1.0), oracle.circle_grid())
    assert c == pytest.approx(1 / oracle.bessel_i0_series(1.0), rel=1e-12)


@pytest.mark.parametrize("kappa", [1.0, 10.0, 100.0])
def test_vmf_normalizer_closed_form(kappa):
    c = oracle.quadrature_normalizer(oracle.vmf(kappa, [0, 0, 1.0]))
    assert c == pytest.approx(kappa / math.sinh(kappa), rel=1e-8)


@pytest.mark.parametrize("lam", [1.0, 10.0, 100.0, 1000.0])
def test_bingham_normalizer_refines(lam):
    # mean of exp(-lam t^2) for t ~ Unif(-1, 1)
    exact = math.sqrt(math.pi) * erf(math.sqrt(lam)) / (2 * math.sqrt(lam))
    c = oracle.quadrature_normalizer(oracle.bingham(np.diag([0, 0, lam])))
    assert c == pytest.approx(1 / exact, rel=1e-8)
    seg = oracle.quadrature_normalizer(oracle.bingham(np.diag([0, 0, lam])), oracle.segment_grid())
    assert seg == pytest.approx(1 / exact, rel=1e-8)


def test_refinement_gives_up():
    with pytest.raises(NotConverged):
        oracle.log_quadrature_normalizer(oracle.vmf(1e5, [0, 0, 1.0]), max_doublings=0)


def test_grid_minimum_sizes():
    with pytest.raises(ValueError):
        oracle.circle_grid(100)
    with pytest.raises(ValueError):
        oracle.sphere2_grid(32, 128)
    assert oracle.sphere2_grid().refined().sizes == (128, 256)


def test_mc_matches_quadrature():
    d = oracle.bingham(np.diag([0.0, 2.0, 5.0]))
    cq = oracle.quadrature_normalizer(d)
    cm, se = oracle.mc_normalizer(d, 3, RngStream(1), 10**6)
    assert abs(cm - cq) < 3 * se


def test_gof_uniform_passes():
    x = sample_uniform_sphere(3, RngStream(2), 10**5)
    assert oracle.gof_chisq(x, oracle.uniform()) > 0.001
    x2 = sample_uniform_sphere(2, RngStream(3), 10**5)
    assert oracle.gof_chisq(x2, oracle.uniform()) > 0.001
    assert oracle.gof_chisq(x, oracle.uniform(), oracle.SphereBinning(edges="uniform")) > 0.001


def test_gof_detects_wrong_parameter():
    a = np.diag([0.0, 2.0, 10.0])
    x = sample_bingham(standardize(a), RngStream(4), 10**5).samples
    assert oracle.gof_chisq(x, oracle.bingham(a)) > 0.001
    assert oracle.gof_chisq(x, oracle.bingham(1.2 * a)) < 1e-6


def test_gof_needs_samples():
    x = sample_uniform_sphere(3, RngStream(5), 500)
    with pytest.raises(InsufficientSamples):
        oracle.gof_chisq(x, oracle.uniform())

import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import chisquare, kstest

from so3sparse import sampling
from so3sparse.sampling import (
    MeasureSpec,
    build_cdf_table,
    load_cdf_table,
    preconditioner_weight,
    sample_product,
    sample_tan_measure,
    save_cdf_table,
    theta_density,
)


@pytest.fixture(scope="module")
def tan_spec():
    return sampling.default_tan_spec()


def test_product_determinism():
    a = sample_product(np.random.default_rng(11), 3)
    b = sample_product(np.random.default_rng(11), 3)
    assert a == b


def test_product_theta_statistics():
    pts = sample_product(np.random.default_rng(0), 100_000)
    theta = np.array([p.theta for p in pts])
    assert abs(theta.mean() - math.pi / 2) < 0.02
    stat, _ = kstest(theta, lambda t: t / math.pi)
    assert stat < 0.01


def test_product_rejects_bad_count():
    with pytest.raises(ValueError):
        sample_product(np.random.default_rng(0), 0)


def test_tan_determinism(tan_spec):
    a = sample_tan_measure(np.random.default_rng(5), 3, tan_spec)
    b = sample_tan_measure(np.random.default_rng(5), 3, tan_spec)
    assert a == b


def test_tan_theta_statistics(tan_spec):
    pts = sample_tan_measure(np.random.default_rng(1), 100_000, tan_spec)
    theta = np.array([p.theta for p in pts])
    assert abs(np.mean(theta < math.pi / 2) - 0.5) < 0.01
    # density mass near pi/2 exceeds mass near pi/4 (quadrature oracle)
    w = 0.1
    mass_mid, _ = quad(lambda t: abs(math.tan(t)) ** (1 / 3), math.pi / 2 - w,
                       math.pi / 2 + w, points=[math.pi / 2])
    mass_quarter, _ = quad(lambda t: abs(math.tan(t)) ** (1 / 3),
                           math.pi / 4 - w, math.pi / 4 + w)
    assert mass_mid > mass_quarter
    frac_mid = np.mean(np.abs(theta - math.pi / 2) < w)
    frac_quarter = np.mean(np.abs(theta - math.pi / 4) < w)
    assert frac_mid > frac_quarter


def test_preconditioner_values():
    assert preconditioner_weight(sampling.PRODUCT, math.pi / 2) == pytest.approx(1.0)
    # cos(float64 pi/2) is ~6e-17, not 0, and the 1/6 power lifts that to
    # ~2e-3; compare against the formula at the representable point instead
    assert preconditioner_weight(sampling.TAN13, math.pi / 2) == pytest.approx(
        abs(math.cos(math.pi / 2)) ** (1.0 / 6.0), rel=1e-12
    )
    assert preconditioner_weight(sampling.PRODUCT, math.pi / 6) == pytest.approx(
        math.sqrt(0.5), abs=1e-12
    )


def test_preconditioning_identity():
    # weight^2 * theta-density proportional to sin(theta), rel dev < 1e-12
    theta = np.linspace(1e-6, math.pi - 1e-6, 1001)
    theta = theta[np.abs(theta - math.pi / 2) > 1e-6]
    for measure in (sampling.PRODUCT, sampling.TAN13):
        lhs = preconditioner_weight(measure, theta) ** 2 * theta_density(
            measure, theta, normalized=False
        )
        ratio = lhs / np.sin(theta)
        assert np.max(np.abs(ratio / ratio[0] - 1.0)) < 1e-12


def test_cdf_table_endpoints(tan_spec):
    assert tan_spec.cdf[0] == 0.0
    assert tan_spec.cdf[-1] == 1.0
    mid = tan_spec.cdf_at(math.pi / 2)
    assert mid == pytest.approx(0.5, abs=1e-9)
    # frozen 1e-12-tolerance quadrature oracle
    assert tan_spec.cdf_at(math.pi / 4) == pytest.approx(
        0.15446198264429567, abs=1e-9
    )


def test_cdf_round_trip(tan_spec):
    u = np.random.default_rng(2).uniform(0.005, 0.995, 1000)
    back = tan_spec.cdf_at(tan_spec.inverse_cdf(u))
    # forward and inverse are two independent monotone interpolants over
    # 4096 nodes; their composition is accurate to ~1e-5, not machine level
    np.testing.assert_allclose(back, u, atol=5e-5)


def test_build_rejects_small_resolution():
    with pytest.raises(ValueError):
        build_cdf_table(100)


def test_cdf_binary_cache_round_trip(tmp_path, tan_spec):
    path = tmp_path / "tan13.cdf"
    save_cdf_table(tan_spec, path)
    loaded = load_cdf_table(path)
    assert loaded.kind == sampling.TAN13
    np.testing.assert_array_equal(loaded.thetas, tan_spec.thetas)
    np.testing.assert_array_equal(loaded.cdf, tan_spec.cdf)
    assert path.read_bytes()[:8] == b"WCSCDF01"


def test_cdf_cache_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.cdf"
    path.write_bytes(b"NOTMAGIC" + b"\0" * 24)
    with pytest.raises(ValueError):
        load_cdf_table(path)


def test_spec_rejects_non_monotone():
    with pytest.raises(ValueError):
        MeasureSpec(sampling.TAN13, np.array([0.0, 0.5, 0.4]),
                    np.array([0.0, 0.5, 1.0]))


@pytest.mark.parametrize("measure", [sampling.PRODUCT, sampling.TAN13])
def test_chi_square_goodness_of_fit(measure, tan_spec):
    m, bins = 100_000, 64
    rng = np.random.default_rng(9)
    if measure == sampling.PRODUCT:
        theta = np.array([p.theta for p in sample_product(rng, m)])
        edges = np.linspace(0, math.pi, bins + 1)
        expected = np.full(bins, m / bins)
    else:
        theta = np.array([p.theta for p in sample_tan_measure(rng, m, tan_spec)])
        edges = np.asarray(tan_spec.inverse_cdf(np.linspace(0, 1, bins + 1)))
        edges[0], edges[-1] = 0.0, math.pi
        expected = np.full(bins, m / bins)
    counts, _ = np.histogram(theta, bins=edges)
    _, pvalue = chisquare(counts, expected)
    assert pvalue > 1e-3


def test_measure_mass_values():
    assert sampling.measure_mass(sampling.PRODUCT) == pytest.approx(
        math.pi * 4 * math.pi**2
    )
    assert sampling.measure_mass(sampling.TAN13) == pytest.approx(
        3.627598728468277 * 4 * math.pi**2, rel=1e-12
    )

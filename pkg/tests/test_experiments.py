import itertools
import math

import numpy as np
import pytest

from so3sparse import sampling
from so3sparse.experiments import (
    COMPLEX_GAUSSIAN,
    REAL_GAUSSIAN,
    TrialConfig,
    bound_scan,
    contour_half_success,
    weighted_sup_profile,
    gen_sparse,
    phase_transition,
    run_trial,
    sigma_s,
)
from so3sparse.wigner import basis_count


def test_gen_sparse_dense_when_s_equals_N():
    g = gen_sparse(10, 10, REAL_GAUSSIAN, np.random.default_rng(0))
    assert np.all(g != 0)


def test_gen_sparse_rejects_oversparse():
    with pytest.raises(ValueError):
        gen_sparse(10, 11, REAL_GAUSSIAN, np.random.default_rng(0))


def test_gen_sparse_determinism():
    a = gen_sparse(20, 3, COMPLEX_GAUSSIAN, np.random.default_rng(5))
    b = gen_sparse(20, 3, COMPLEX_GAUSSIAN, np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)


def test_gen_sparse_uniform_support():
    N, draws = 10, 5000
    rng = np.random.default_rng(1)
    counts = np.zeros(N)
    for _ in range(draws):
        counts[np.nonzero(gen_sparse(N, 1, REAL_GAUSSIAN, rng))[0][0]] += 1
    p = 1 / N
    band = 3 * math.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(counts - draws * p) < band + 1e-9)


def test_sigma_s_values():
    g = np.array([3.0, -1.0, 2.0])
    assert sigma_s(g, 1, 1) == pytest.approx(3.0)
    assert sigma_s(g, 3, 2) == 0.0
    # brute-force subset oracle
    rng = np.random.default_rng(2)
    g = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    best = min(
        np.linalg.norm(np.delete(g, list(keep)))
        for keep in itertools.combinations(range(8), 2)
    )
    assert sigma_s(g, 2, 2) == pytest.approx(best, abs=1e-12)


def test_sigma_s_tie_breaking():
    g = np.array([1.0, 1.0, 1.0])
    # keep the lower index on ties: dropping entries 1, 2
    assert sigma_s(g, 1, 1) == pytest.approx(2.0)


def test_run_trial_square_system_succeeds():
    N = basis_count(2)
    cfg = TrialConfig(B=2, m=N, s=3, base_seed=3)
    ok, err = run_trial(cfg, 0)
    assert ok and err < 1e-3


def test_run_trial_deterministic():
    cfg = TrialConfig(B=2, m=20, s=2, base_seed=17)
    assert run_trial(cfg, 4) == run_trial(cfg, 4)


def test_phase_transition_reproducible_and_square_column():
    cfg = TrialConfig(B=2, s=1, trials=5, base_seed=99)
    N = basis_count(2)
    g1 = phase_transition(cfg, [4, N], [1, 2], threads=1)
    g2 = phase_transition(cfg, [4, N], [1, 2], threads=2)
    np.testing.assert_array_equal(g1.success_rate, g2.success_rate)
    np.testing.assert_array_equal(g1.success_rate[-1], 1.0)


def test_contour_interpolation():
    grid = phase_transition(
        TrialConfig(B=2, s=1, trials=4, base_seed=1), [2, 10], [1], threads=1
    )
    grid.success_rate = np.array([[0.0], [1.0]])
    assert contour_half_success(grid) == [6.0]
    grid.success_rate = np.array([[0.0], [0.25]])
    assert math.isnan(contour_half_success(grid)[0])
    grid.success_rate = np.array([[0.75], [1.0]])
    assert contour_half_success(grid) == [2.0]


def test_bound_scan_B1():
    rows, _ = bound_scan([1])
    B, N, sup = rows[0]
    assert (B, N) == (1, 1)
    assert sup == pytest.approx(1 / math.sqrt(8 * math.pi**2), rel=1e-6)


def test_bound_scan_monotone_in_B():
    rows, slope = bound_scan([2, 4, 8], coarse=1024)
    sups = [r[2] for r in rows]
    assert sups[0] <= sups[1] <= sups[2]
    assert 0.0 < slope < 0.2


def test_weighted_sup_profile_small():
    prof = weighted_sup_profile(6, coarse=1024)
    # boundedness across degrees: no growth beyond the low-degree maximum
    assert prof.max() <= 1.2 * prof[:3].max()


def test_trial_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(B=2, s=0)
    with pytest.raises(ValueError):
        TrialConfig(B=2, s=basis_count(2) + 1)
    with pytest.raises(ValueError):
        TrialConfig(B=2, m=0)


def test_tan13_trial_runs():
    cfg = TrialConfig(B=2, m=basis_count(2), s=2, base_seed=5,
                      measure=sampling.TAN13)
    ok, err = run_trial(cfg, 0)
    assert ok

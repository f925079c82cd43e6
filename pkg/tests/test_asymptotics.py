import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from virtiso import asymptotics as asy
from virtiso import builder as bd
from virtiso import spectral as sp
from virtiso.errors import ConvergenceError
from virtiso.measures import replica_rng, sample_ewens_permutation

from conftest import haar_unitary

TWO_PI = 2 * math.pi


def synthetic(rescaled, k=1, gamma=None):
    n = np.arange(1, len(rescaled) + 1)
    g = np.full(n.size, np.nan) if gamma is None else gamma
    return asy.Trajectory(k, n, TWO_PI * np.asarray(rescaled) / n, g)


# trajectories and martingale

def test_trajectory_rejects_gaps():
    with pytest.raises(ValueError, match="gaps"):
        asy.Trajectory(1, [1, 2, 4], [1.0, 1.0, 1.0], [0.5, 0.5, 0.5])


def test_martingale_starts_at_zero():
    t = asy.Trajectory(1, [1], [1.0], [np.nan])
    assert asy.martingale_series(t).tolist() == [0.0]


def test_martingale_vanishes_for_harmonic_weights():
    n = np.arange(1, 201)
    t = asy.Trajectory(1, n, np.full(n.size, 0.1), 1.0 / n)
    assert np.all(asy.martingale_series(t) == 0.0)


def test_martingale_needs_start_at_one():
    t = asy.Trajectory(1, [2, 3], [1.0, 1.0], [0.5, np.nan])
    with pytest.raises(ValueError):
        asy.martingale_series(t)


def test_harmonic():
    assert asy.harmonic([0, 1, 4]).tolist() == [0.0, 1.0, 1 + 1 / 2 + 1 / 3 + 1 / 4]
    assert asy.harmonic(50) == pytest.approx(4.499205338329425, rel=1e-15)


@pytest.mark.slow
def test_martingale_tail_variance_is_order_one_over_n():
    # the weights at a tracked index are independent of the angles, so the
    # increments are drawn through the Haar step sampler directly
    reps, top = 200, 2048
    m = np.zeros((reps, 3))
    for r in range(reps):
        rng = replica_rng(77, r)
        inc = np.array([sp.gamma_at_index(sp.sample_step_haar(p, rng), 1) - 1.0 / p for p in range(1, top)])
        c = np.concatenate(([0.0], np.cumsum(inc)))
        m[r] = c[63], c[255], c[-1]
    ratio = np.var(m[:, 2] - m[:, 0]) / np.var(m[:, 2] - m[:, 1])
    assert 2.5 <= ratio <= 6.0


# rate fitting

def test_planted_exponent_is_recovered():
    n = np.arange(1, 4097)
    est = asy.limit_estimate(synthetic(1.0 + n ** -0.25))
    assert est.eps_hat == pytest.approx(0.25, abs=0.02)
    assert est.x_hat == 1.0 + 4096 ** -0.25


def test_constant_trajectory_is_below_resolution():
    est = asy.limit_estimate(synthetic(np.full(1024, 0.75)))
    assert est.below_resolution and est.x_hat == 0.75


def test_single_difference_above_floor_is_an_error():
    r = np.full(1024, 0.75)
    r[63] = 0.8  # n = 64 enters only the pair (64, 128)
    with pytest.raises(ConvergenceError):
        asy.limit_estimate(synthetic(r))


def test_short_trajectory_is_rejected():
    with pytest.raises(ValueError, match="too short"):
        asy.limit_estimate(synthetic(np.ones(32)))


def test_dyadic_grid():
    assert asy.dyadic_grid(4096).tolist() == [256, 512, 1024, 2048]


def test_cauchy_witness_is_nonincreasing_on_haar_run():
    run = sp.run_haar_spectral(512, [1, 0], replica_rng(3, 0))
    for k in (1, 0):
        cps, w = asy.cauchy_witness(run.trajectory(k))
        assert cps[0] == 1 and cps[-1] == 512
        assert np.all(np.diff(w) <= 0.0) and w[-1] == 0.0


def test_identity_series_on_haar_run():
    run = sp.run_haar_spectral(1024, [1], replica_rng(4, 0))
    t = run.trajectory(1)
    assert np.all(t.rescaled > 0)
    q = asy.identity_series(t)
    assert asy.identity_range(t, 256, 1024) == pytest.approx((q[255:].max() - q[255:].min()) / np.median(q[255:]))
    assert asy.identity_range(t, 256, 1024) < 0.1


# event E

def test_rho_tail_matches_beta_survival():
    n = np.array([2, 10, 100, 1000])
    assert np.allclose(asy.rho_tail(n), stats.beta.sf(n ** -0.8, 1, n), rtol=1e-12)
    assert asy.rho_tail(100) == pytest.approx(0.0785537, abs=1e-7)
    assert asy.rho_tail(1) == 0.0


def test_rho_tail_against_haar_steps():
    rng = replica_rng(8, 0)
    n, reps = 100, 20000
    hits = sum(sp.sample_step_haar(n, rng).rho > n ** -0.4 for _ in range(reps))
    p = float(asy.rho_tail(n))
    assert abs(hits / reps - p) <= 3 * math.sqrt(p * (1 - p) / reps)


def test_gamma_union_bound():
    n = np.array([10, 100, 10 ** 4])
    want = np.minimum(1.0, n * stats.beta.sf(n ** -0.99, 1, n - 1))
    assert np.allclose(asy.gamma_tail_union(n), want, rtol=1e-10)
    rng = replica_rng(9, 0)
    m, reps = 10 ** 4, 200
    freq = np.mean([sp.sample_step_haar(m, rng).gamma.max() > m ** -0.99 for _ in range(reps)])
    assert freq <= float(asy.gamma_tail_union(m)) + 3 * math.sqrt(0.25 / reps)


def test_equal_spacing_gap_bounds():
    for n in (10, 1000):
        angles = TWO_PI * (np.arange(n) + 0.5) / n
        lower, upper = asy.gap_bounds_hold(angles)
        assert lower
        # 2 pi / n <= n^-0.9 needs n >= (2 pi)^10
        assert upper == (TWO_PI / n <= n ** -0.9) and not upper


def test_event_e_diagnostics_on_haar_runs():
    runs = [sp.run_haar_spectral(256, [1], replica_rng(10, r)) for r in range(6)]
    rep = asy.event_e_diagnostics(runs)
    assert set(rep) == {"rho", "gamma", "gap_lower", "gap_upper"}
    for r in rep.values():
        assert r.frequency.min() >= 0 and r.frequency.max() <= 1
        assert r.last_violation.size == 6
        assert r.summary()["replicas"] == 6
    # the rho and gamma rows stop at n_max - 1
    assert rep["rho"].n[-1] == 255 and rep["gap_lower"].n[-1] == 256
    # max gap at n = 1 is 2 pi > 1
    assert np.all(rep["gap_upper"].last_violation >= 1)


def test_event_e_rejects_mixed_grids():
    a = sp.run_haar_spectral(16, [1], replica_rng(1, 0))
    b = sp.run_haar_spectral(32, [1], replica_rng(1, 1))
    with pytest.raises(ValueError):
        asy.event_e_diagnostics([a, b])
    with pytest.raises(ValueError):
        asy.event_e_diagnostics([])


# pair correlation

def test_sine_kernel_r2():
    assert asy.sine_kernel_r2(0.0) == 0.0
    assert asy.sine_kernel_r2(1.0) == pytest.approx(1.0)
    assert asy.sine_kernel_r2(0.5) == pytest.approx(1 - 4 / math.pi ** 2)


def test_rescaled_window_wraps():
    n = 10
    angles = TWO_PI * np.array([0.05, 0.95])
    x = asy.rescaled_window(angles, n, width=1.0)
    assert np.allclose(x, [-0.5, 0.5])


def test_poisson_control_is_flat():
    est = asy.pair_correlation(asy.poisson_windows(4000, replica_rng(5, 0)))
    assert np.all(np.abs(est.density - 1.0) < 0.05)
    assert est.samples == 4000 and np.all(est.density >= 0)


def test_estimator_on_independent_cue_samples():
    # CUE eigenvalues from scipy, not from the flow
    n, reps = 64, 1500
    rng = np.random.default_rng(6)
    samples = []
    for r in range(reps):
        a = np.mod(np.angle(np.linalg.eigvals(haar_unitary(n, int(rng.integers(2**32))))), TWO_PI)
        samples.append(asy.rescaled_window(a, n, center=n * rng.random()))
    est = asy.pair_correlation(samples)
    assert est.density[0] <= 0.1
    assert np.max(est.deviation()[1:]) <= 0.08


def test_pair_correlation_rejects_empty():
    with pytest.raises(ValueError):
        asy.pair_correlation([])


# permutation case

def test_single_cycle_eigenangles():
    n = 7
    s = bd.permutation_from_indices([1] + list(range(1, n)))
    assert asy.cycle_lengths(s).tolist() == [n]
    assert asy.eigenangles_match_cycles(s)
    assert bd.permutation_eigenangles(s)[1:3] == [Fraction(1, n), Fraction(2, n)]


def test_identity_permutation():
    s = bd.identity_permutation(5)
    assert asy.cycle_lengths(s).tolist() == [1] * 5
    assert set(bd.permutation_eigenangles(s)) == {0}
    n, fr = asy.permutation_limits([bd.identity_permutation(m) for m in range(1, 6)], top=3)
    assert n.tolist() == [1, 2, 3, 4, 5]
    assert np.allclose(fr[-1], [0.2, 0.2, 0.2])
    assert np.allclose(fr[0], [1.0, 0.0, 0.0])


def test_eigenangles_match_cycles_on_ewens_chain():
    s = sample_ewens_permutation(300, 1.5, replica_rng(2, 0))
    assert asy.eigenangles_match_cycles(s)


def test_feller_coupling_counts_cycles_like_ewens():
    # E[#cycles] = sum_m theta / (theta + m - 1)
    n, theta = 50, 2.0
    c = asy.ewens_cycle_counts(n, theta, np.random.default_rng(3), 4000)
    assert all(x.sum() == n for x in c)
    k = np.array([x.size for x in c])
    want = sum(theta / (theta + m) for m in range(n))
    assert abs(k.mean() - want) <= 3 * k.std() / math.sqrt(k.size)


def test_longest_cycle_fraction_near_golomb_dickman():
    mean, se = asy.golomb_dickman_oracle(500, 4000, np.random.default_rng(4))
    # finite-n bias is O(1/n)
    assert abs(mean - asy.GOLOMB_DICKMAN) <= 4 * se + 2e-3


def test_crp_longest_cycle_against_frozen_oracle():
    # oracle: Feller coupling, n = 2000, 200000 replicas: 0.6240434 +- 0.00043
    v = [asy.cycle_lengths(sample_ewens_permutation(2000, 1.0, replica_rng(21, r)))[0] / 2000
         for r in range(300)]
    se = np.std(v) / math.sqrt(len(v))
    assert abs(np.mean(v) - 0.6240433625) <= 4 * se

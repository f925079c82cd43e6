import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from virtiso import spectral as sp
from virtiso.builder import _extend_matrix, build, init
from virtiso.errors import (BracketError, ConvergenceError, DimensionError, InvariantError, SingularityError,
                            UnsupportedParameterError)
from virtiso.linalg import basis, charpoly_eval, eigenangles
from virtiso.measures import replica_rng
from virtiso.validate import coupled_path

TWO_PI = 2 * math.pi

# roots of Phi from 40-digit mpmath bisection on Phi itself
ORACLE = [
    (([1.0, 2.5, 4.0], 0.4, 1.1, [0.2, 0.5, 0.3]),
     [0.7059828169633051744, 1.4843698532078388202, 3.1696681930613169622, 4.4601120047538713969]),
    (([0.1, 0.1000001, 3.0, 6.2], 0.9, -2.0, [0.25, 0.25, 0.4, 0.1]),
     [0.096533930900913174996, 0.10000005000069701284, 2.9215314972214474788, 4.2969376134908615392,
      6.2006193316045824429]),
    (([3.0], 0.0, 0.0, [1.0]), [1.5, 4.6415926535897932385]),
]


def state(angles):
    return sp.SpectralState.from_angles(angles)


def random_step(n, seed):
    g = np.random.default_rng(seed)
    th = np.sort(g.uniform(0, TWO_PI, n))
    rho = g.uniform(0, 0.99)
    psi = g.uniform(-math.pi, math.pi)
    gam = g.dirichlet(np.ones(n))
    return state(th), sp.StepParams(rho, psi, gam)


def matrix_of(s, p):
    """u_{n+1} = r(x) (diag(e^{i theta}) ⊕ 1) with mu_k = sqrt(gamma_k (1 - rho^2))."""
    n = s.n
    mu = np.sqrt(p.gamma * (1 - p.rho ** 2)) * np.exp(1j * np.arange(n))
    x = np.concatenate((mu, [p.nu]))
    x /= np.linalg.norm(x)
    return _extend_matrix(np.diag(np.exp(1j * s.angles)), x)


def test_state_validation():
    with pytest.raises(ValueError):
        state([2.0, 1.0])
    with pytest.raises(ValueError):
        state([0.0, 1.0])
    with pytest.raises(ValueError):
        sp.StepParams(1.0, 0.0, [1.0])
    with pytest.raises(ValueError):
        sp.StepParams(0.5, -math.pi, [1.0])
    with pytest.raises(ValueError):
        sp.StepParams(0.5, 0.0, [0.5, 0.6])
    with pytest.raises(DimensionError):
        sp.advance(state([1.0]), sp.StepParams(0.5, 0.0, [0.5, 0.5]))


def test_phi_boundary_values():
    s, p = random_step(5, 1)
    phi0 = 1 + p.rho ** 2 - 2 * p.rho * math.cos(p.psi)
    assert sp.phi_eval(s, p, 0.0) == pytest.approx(phi0, rel=1e-12)
    assert sp.phi_eval(s, p, TWO_PI) == pytest.approx(-phi0, rel=1e-12)
    assert phi0 >= (1 - p.rho) ** 2


def test_phi_worked_example():
    s = state([math.pi])
    p = sp.StepParams(0.0, 0.3, [1.0])
    for eta in (0.4, 1.0, 2.5):
        assert sp.phi_eval(s, p, eta) == pytest.approx(math.cos(eta / 2) - math.sin(eta / 2) * math.tan(eta / 2))
    assert abs(sp.phi_eval(s, p, math.pi / 2)) < 1e-15
    with pytest.raises(SingularityError):
        sp.phi_eval(s, p, math.pi)


@pytest.mark.parametrize("method", ["fast", "exact"])
def test_advance_worked_examples(method):
    out = sp.advance(state([math.pi]), sp.StepParams(0.0, 1.0, [1.0]), method=method)
    assert np.allclose(out.angles, [math.pi / 2, 3 * math.pi / 2], atol=1e-15)
    out = sp.advance(state([math.pi / 2]), sp.StepParams(0.0, 0.0, [1.0]), method=method)
    assert np.allclose(out.angles, [math.pi / 4, 5 * math.pi / 4], atol=1e-15)


@pytest.mark.parametrize("cfg,want", ORACLE)
@pytest.mark.parametrize("method", ["fast", "exact"])
def test_advance_matches_mpmath_oracle(cfg, want, method):
    th, rho, psi, g = cfg
    out = sp.advance(state(th), sp.StepParams(rho, psi, g), method=method)
    assert np.allclose(out.angles, want, rtol=0, atol=4e-16 * TWO_PI)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**31))
def test_advance_matches_matrix_eigenangles(n, seed):
    s, p = random_step(n, seed)
    out = sp.advance(s, p)
    ref = eigenangles(matrix_of(s, p))
    assert np.max(np.abs(out.angles - ref)) < 1e-9
    assert sp.check_interlacing(s.angles, out.angles)
    cert = sp.certify(s, p, out)
    assert cert.ok, cert


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 300), st.integers(0, 2**31))
def test_fast_equals_exact(n, seed):
    s, p = random_step(n, seed)
    a = sp.advance(s, p, method="fast").angles
    b = sp.advance(s, p, method="exact").angles
    assert np.max(np.abs(a - b) / np.spacing(np.maximum(a, 1.0))) <= 16


def test_first_step_determinant_identity():
    g = np.random.default_rng(3)
    for _ in range(200):
        th = g.uniform(0.01, TWO_PI - 0.01)
        p = sp.StepParams(g.uniform(0, 0.999), g.uniform(-math.pi, math.pi), [1.0])
        out = sp.advance(state([th]), p)
        ratio = (p.nu - 1) / (np.conj(p.nu) - 1)
        # P_2(0) = P_1(0) ratio, and P_n(0) = (-1)^n det u_n
        p2 = np.prod(-np.exp(1j * out.angles))
        assert abs(p2 - (-np.exp(1j * th)) * ratio) < 1e-10
        assert abs(np.prod(np.exp(1j * out.angles)) + np.exp(1j * th) * ratio) < 1e-10


def test_recursion_examples():
    s = state([math.pi])
    p = sp.StepParams(0.0, 0.0, [1.0])
    for z in (0.2 + 0.1j, 2.0, -1j * 0.5):
        assert abs(sp.charpoly_recursion_eval(s, p, z) - (z * z + 1)) < 1e-14
        assert abs(charpoly_eval([[0, 1], [-1, 0]], z) - (z * z + 1)) < 1e-14
    s, p = random_step(7, 11)
    assert abs(abs(sp.charpoly_recursion_eval(s, p, 0.0)) - 1) < 1e-12
    with pytest.raises(SingularityError):
        sp.charpoly_recursion_eval(s, p, np.exp(1j * s.angles[2]))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 32), st.integers(0, 2**31))
def test_recursion_matches_matrix(n, seed):
    s, p = random_step(n, seed)
    u = matrix_of(s, p)
    g = np.random.default_rng(seed + 1)
    for z in g.normal(size=5) + 1j * g.normal(size=5):
        a = sp.charpoly_recursion_eval(s, p, z)
        b = charpoly_eval(u, z)
        assert abs(a - b) <= 1e-8 * abs(b)


def test_certify_rejects_wrong_roots():
    s, p = random_step(6, 2)
    out = sp.advance(s, p)
    bad = state(out.angles + np.r_[1e-3, np.zeros(6)])
    assert not sp.certify(s, p, bad).ok


def test_weight_floor_keeps_pole():
    s = state([1.0, 2.0, 4.0])
    p0 = sp.StepParams(0.3, 0.5, [0.5, 0.0, 0.5])
    out = sp.advance(s, p0)
    assert 2.0 in out.angles and out.n == 4
    p1 = sp.StepParams(0.3, 0.5, [0.5 - 5e-13, 1e-12, 0.5 - 5e-13])
    near = sp.advance(s, p1)
    # the root next to the pole of weight 1e-12 converges to it
    assert np.min(np.abs(near.angles - 2.0)) < 1e-10
    assert np.allclose(np.sort(near.angles), np.sort(out.angles), atol=1e-10)


def test_advance_rejects_alpha_zero_and_unit_state():
    with pytest.raises(UnsupportedParameterError):
        sp.advance(sp.SpectralState(2, [1.0], n_unit=1), sp.StepParams(0.5, 0.0, [0.5, 0.5]))
    d = sp.advance_degenerate(state([1.0]))
    assert d.n == 2 and d.n_unit == 1
    assert abs(sp.charpoly_eval_angles(d.angles, 1.0, d.n_unit)) == 0


def test_interlacing_checker():
    assert sp.check_interlacing([1.0, 2.0], [0.5, 1.5, 3.0])
    assert not sp.check_interlacing([1.0, 2.0], [1.0, 1.5, 3.0])
    assert not sp.check_interlacing([1.0, 2.0], [0.5, 2.5, 3.0])
    assert sp.check_interlacing([1.0, 2.0], [1.0, 1.5, 3.0], allow_equal=(0,))


def test_angle_index_convention():
    s = state([0.5, 2.0, 4.0])
    assert sp.angle_at_index(s, 1) == 0.5
    assert sp.angle_at_index(s, 4) == pytest.approx(0.5 + TWO_PI)
    assert sp.angle_at_index(s, 0) == pytest.approx(4.0 - TWO_PI)
    assert sp.angle_at_index(s, -1) == pytest.approx(2.0 - TWO_PI)
    p = sp.StepParams(0.1, 0.1, [0.2, 0.3, 0.5])
    assert sp.gamma_at_index(p, 0) == 0.5 and sp.gamma_at_index(p, 4) == 0.2


def test_sample_step_haar_moments():
    rng = replica_rng(21)
    n = 5
    ps = [sp.sample_step_haar(n, rng) for _ in range(100_000)]
    r2 = np.array([p.rho ** 2 for p in ps])
    g = np.array([p.gamma for p in ps])
    psi = np.array([p.psi for p in ps])
    se = lambda x: 3 * x.std(ddof=1) / math.sqrt(x.size)
    assert abs(r2.mean() - 1 / (n + 1)) <= se(r2)
    for k in range(n):
        assert abs(g[:, k].mean() - 1 / n) <= se(g[:, k])
    assert abs(psi.mean()) <= se(psi)


def test_params_from_matrix_examples():
    p = sp.spectral_params_from_matrix(init([-1]), basis(2, 1), [math.pi])
    assert abs(p.nu) < 1e-15 and np.allclose(p.gamma, [1.0])
    out = sp.advance(state([math.pi]), p)
    assert np.allclose(out.angles, [math.pi / 2, 3 * math.pi / 2])
    u2 = build([basis(1, 1), basis(2, 2)])
    assert sp.spectral_params_from_matrix(np.diag([1j, -1j]), basis(3, 3), [math.pi / 2, 3 * math.pi / 2]) is None
    with pytest.raises(ConvergenceError):
        sp.spectral_params_from_matrix(np.eye(2), basis(3, 1), [1.0, 1.0 + 1e-12])
    with pytest.raises(DimensionError):
        sp.spectral_params_from_matrix(u2, basis(2, 1), [0.1, 0.2])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_coupled_path_n8(seed):
    res, ang = coupled_path(seed, 9)
    assert res < 1e-7 and ang < 1e-7


def test_run_haar_spectral_records():
    run = sp.run_haar_spectral(1, [1], replica_rng(0))
    t = run.trajectory(1)
    assert t.n.tolist() == [1] and 0 < t.rescaled[0] < 1
    a = sp.run_haar_spectral(300, [1, 0, 2], replica_rng(5), snapshot_at=(10, 300))
    b = sp.run_haar_spectral(300, [1, 0, 2], replica_rng(5))
    for k in (1, 0, 2):
        assert np.array_equal(a.theta[k], b.theta[k])
        assert np.array_equal(a.gamma[k][:-1], b.gamma[k][:-1], equal_nan=True)
    assert np.all(a.theta[0] < 0) and np.all(a.theta[1] > 0)
    assert np.array_equal(a.snapshots[300], a.final.angles) and a.snapshots[10].size == 10
    assert np.isnan(a.rho[-1]) and np.all(np.isfinite(a.rho[:-1]))
    assert np.all(a.min_gap > 0) and np.all(a.max_gap <= TWO_PI)


def test_bracket_failure_carries_partial(monkeypatch):
    calls = {"n": 0}
    real = sp.advance

    def flaky(s, p, method="fast", check=True):
        calls["n"] += 1
        if calls["n"] == 5:
            raise BracketError("forced", 3, {"x": 1})
        return real(s, p, method, check)

    monkeypatch.setattr(sp, "advance", flaky)
    with pytest.raises(BracketError) as info:
        sp.run_haar_spectral(20, [1], replica_rng(1))
    assert info.value.step == 5 and info.value.partial.n.size == 5
    assert info.value.interval == 3


def test_interlacing_error_is_named():
    err = InvariantError("interlacing", "detail")
    assert err.name == "interlacing" and "interlacing" in str(err)

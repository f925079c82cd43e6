"""Eigenangle flow of a virtual isometry without matrices.

Write u_{n+1} = r(x) (u_n ⊕ 1) and expand the generating vector in an
eigenbasis (f_k) of u_n, ``x = sum_k mu_k f_k + nu e_{n+1}``.  With
``nu = rho e^{i psi}`` and ``gamma_k = |mu_k|^2 / (1 - rho^2)`` the
eigenangles of u_{n+1} are the zeros in (0, 2 pi) of

    Phi(eta) = (1 + rho^2) cos(eta/2) - 2 rho cos(eta/2 - psi)
               + (1 - rho^2) sin(eta/2) sum_k gamma_k cot((eta - theta_k)/2).

Dividing by (1 - rho^2) sin(eta/2) gives the secular form

    F(eta) = alpha cot(eta/2) + sum_k gamma_k cot((eta - theta_k)/2) - beta,
    alpha = |1 - nu|^2 / (1 - rho^2),  beta = 2 rho sin(psi) / (1 - rho^2),

which is strictly decreasing between consecutive poles 0, theta_1, ...,
theta_n, 2 pi.  Hence one root per interval, and the new angles
interlace the old ones.  The compiled solver lives in ``_flow``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import _flow
from .errors import (BracketError, ConvergenceError, DimensionError, InvariantError,
                     SingularityError, UnsupportedParameterError)
from .linalg import as_square, as_vector, inner

TWO_PI = 2.0 * math.pi
WEIGHT_FLOOR = 1e-14
POLE_TOL = 1e-15
GAMMA_SUM_TOL = 1e-12
WINDOW_K = 8


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Eigenangles 0 < theta_1 < ... < theta_m < 2 pi of u_n.

    ``n_unit`` counts eigenvalues equal to 1, which only arise from the
    degenerate extension u_{n+1} = u_n ⊕ 1; n = m + n_unit.
    """

    n: int
    angles: np.ndarray
    n_unit: int = 0

    def __post_init__(self):
        a = np.array(self.angles, dtype=float).reshape(-1)
        a.setflags(write=False)
        object.__setattr__(self, "angles", a)
        if self.n != a.size + self.n_unit:
            raise DimensionError(f"dimension {self.n} does not match {a.size} angles and {self.n_unit} unit eigenvalues")
        if a.size and not (a[0] > 0.0 and a[-1] < TWO_PI):
            raise ValueError("angles must lie in (0, 2 pi)")
        if a.size > 1 and not np.all(np.diff(a) > 0.0):
            raise ValueError("angles must be strictly increasing")

    @classmethod
    def from_angles(cls, angles):
        a = np.asarray(angles, dtype=float).reshape(-1)
        return cls(a.size, a)


@dataclass(frozen=True, eq=False)
class StepParams:
    """Step parameters (rho, psi, gamma) taking dimension n to n+1.

    rho = 0 is accepted (it is the case nu = 0 of a generating vector
    orthogonal to e_{n+1}).
    """

    rho: float
    psi: float
    gamma: np.ndarray

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float).reshape(-1)
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "psi", float(self.psi))
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if not -math.pi < self.psi <= math.pi:
            raise ValueError(f"psi must lie in (-pi, pi], got {self.psi}")
        if g.size == 0 or np.any(g < 0.0) or not np.all(np.isfinite(g)):
            raise ValueError("gamma must be a nonempty vector of nonnegative weights")
        if abs(float(np.sum(g)) - 1.0) > GAMMA_SUM_TOL:  # pairwise sum, error ~1e-16 log n
            raise ValueError(f"gamma must sum to 1 within {GAMMA_SUM_TOL}")

    @property
    def nu(self):
        return self.rho * complex(math.cos(self.psi), math.sin(self.psi))

    def secular_coefficients(self):
        """(alpha, beta) of the secular form."""
        r2 = 1.0 - self.rho * self.rho
        alpha = abs(1.0 - self.nu) ** 2 / r2
        beta = 2.0 * self.rho * math.sin(self.psi) / r2
        return alpha, beta


def _check_dims(s, p):
    if s.n_unit:
        raise UnsupportedParameterError("secular steps from a state with eigenvalue 1 are not supported")
    if p.gamma.size != s.n:
        raise DimensionError(f"gamma has {p.gamma.size} entries for a state of dimension {s.n}")


def phi_eval(s, p, eta):
    """Phi(eta), with the cotangent sum accumulated by math.fsum."""
    _check_dims(s, p)
    eta = float(eta)
    d = np.abs(np.remainder(eta - s.angles + math.pi, TWO_PI) - math.pi)
    if d.size and d.min() <= POLE_TOL:
        raise SingularityError(f"Phi evaluated within {POLE_TOL} of a pole")
    rho = p.rho
    h = 0.5 * eta
    cot = math.fsum(p.gamma / np.tan(0.5 * (eta - s.angles)))
    return ((1.0 + rho * rho) * math.cos(h) - 2.0 * rho * math.cos(h - p.psi)
            + (1.0 - rho * rho) * math.sin(h) * cot)


def secular_eval(s, p, eta):
    """(F(eta), F'(eta)) of the secular form, direct sum over all poles."""
    _check_dims(s, p)
    alpha, beta = p.secular_coefficients()
    P = np.concatenate(([0.0], s.angles))
    w = np.concatenate(([alpha], p.gamma))
    return _flow.secular_full(float(eta), P, w, beta)


def _dump(s, p, k=-1):
    return {"angles": s.angles.tolist(), "rho": p.rho, "psi": p.psi,
            "gamma": p.gamma.tolist(), "interval": int(k)}


def check_interlacing(old, new, allow_equal=()):
    """True when 0 < new_1 < old_1 < new_2 < ... < old_n < new_{n+1} < 2 pi.

    Indices in `allow_equal` (0-based, into `old`) may coincide with a
    neighbouring new angle; they mark poles dropped under the weight floor.
    """
    old = np.asarray(old, dtype=float)
    new = np.asarray(new, dtype=float)
    if new.size != old.size + 1:
        return False
    if not (new[0] > 0.0 and new[-1] < TWO_PI):
        return False
    lo = new[:-1] < old
    hi = old < new[1:]
    if allow_equal:
        idx = np.asarray(list(allow_equal), dtype=int)
        lo[idx] |= new[:-1][idx] <= old[idx]
        hi[idx] |= old[idx] <= new[1:][idx]
    return bool(np.all(lo) and np.all(hi))


def advance(s, p, method="fast", check=True):
    """Eigenangles of u_{n+1} from those of u_n and the step parameters.

    Parameters
    ----------
    s : SpectralState
    p : StepParams
    method : {"fast", "exact"}
        "exact" sums every pole at every iterate (O(n^2) per step);
        "fast" sums a window of nearby poles exactly and the rest through
        a certified far-field model.  Both agree to a few ulps.
    check : bool
        Assert strict interlacing of the result.

    Returns
    -------
    SpectralState of dimension n + 1.
    """
    _check_dims(s, p)
    if s.n > 1 and not np.all(np.diff(s.angles) > 0.0):
        raise InvariantError("ordering", "input angles are not strictly increasing")
    alpha, beta = p.secular_coefficients()
    if alpha < WEIGHT_FLOOR:
        raise SingularityError("nu is numerically 1: use advance_degenerate")
    keep = p.gamma >= WEIGHT_FLOOR
    dropped = np.flatnonzero(~keep)
    act = s.angles[keep]
    P = np.empty(act.size + 1)
    P[0] = 0.0
    P[1:] = act
    w = np.empty(act.size + 1)
    w[0] = alpha
    w[1:] = p.gamma[keep]
    roots = np.empty(P.size)
    info = np.zeros(7, dtype=np.int64)
    if method == "exact":
        K = P.size
    elif method == "fast":
        K = WINDOW_K
    else:
        raise ValueError(f"unknown method {method!r}")
    st = _flow.sweep(P, w, beta, K, roots, info)
    if st == _flow.UNREPRESENTABLE:
        k = int(info[3])
        raise BracketError(f"poles {k} and {k + 1} are adjacent doubles: the root between them "
                           "is not representable", k, _dump(s, p, k))
    if st != _flow.OK and K < P.size:
        # the far-field model is ill-conditioned on this configuration
        info[:] = 0
        st = _flow.sweep(P, w, beta, P.size, roots, info)
    if st != _flow.OK:
        k = int(info[3])
        raise BracketError(f"secular solve failed on interval {k} (status {st})", k, _dump(s, p, k))
    if dropped.size:
        # a pole of weight below the floor is an eigenangle of u_{n+1}
        roots = np.sort(np.concatenate((roots, s.angles[dropped])))
    if check and not check_interlacing(s.angles, roots, allow_equal=tuple(dropped)):
        bad = _first_violation(s.angles, roots)
        raise InvariantError("interlacing", f"violated at position {bad}; dump={_dump(s, p, bad)}")
    return SpectralState(s.n + 1, roots)


def _first_violation(old, new):
    ok = np.concatenate(([new[0] > 0.0], new[:-1] < old, old < new[1:], [new[-1] < TWO_PI]))
    return int(np.argmin(ok))


def advance_degenerate(s):
    """u_{n+1} = u_n ⊕ 1: the angles persist and eigenvalue 1 is added."""
    return SpectralState(s.n + 1, s.angles, s.n_unit + 1)


def charpoly_eval_angles(angles, z, n_unit=0):
    """prod_k (z - e^{i theta_k}) (z - 1)^n_unit."""
    lam = np.exp(1j * np.asarray(angles, dtype=float))
    return complex(np.prod(z - lam)) * (z - 1.0) ** n_unit


def charpoly_recursion_eval(s, p, z):
    """P_{n+1}(z) from P_n and the step parameters.

    P_{n+1}(z) = P_n(z)/(conj(nu) - 1) [(z - nu)(conj(nu) - 1)
                 - (z - 1) sum_k |mu_k|^2 lambda_k / (z - lambda_k)],
    with lambda_k = e^{i theta_k} and |mu_k|^2 = gamma_k (1 - rho^2).
    """
    _check_dims(s, p)
    z = complex(z)
    nu = p.nu
    if abs(nu - 1.0) == 0.0:
        raise SingularityError("nu = 1")
    lam = np.exp(1j * s.angles)
    d = z - lam
    if np.min(np.abs(d)) < POLE_TOL:
        raise SingularityError("z too close to an eigenvalue of u_n")
    mu2 = p.gamma * (1.0 - p.rho * p.rho)
    pn = complex(np.prod(d))
    nb = nu.conjugate() - 1.0
    tail = complex(np.sum(mu2 * lam / d))
    return pn / nb * ((z - nu) * nb - (z - 1.0) * tail)


@dataclass(frozen=True)
class Certificate:
    """Outcome of certify: sign test and characteristic-polynomial residuals."""

    signs_ok: bool
    max_residual: float
    residual_ok: bool
    h: np.ndarray = field(repr=False)

    @property
    def ok(self):
        return self.signs_ok and self.residual_ok


def certify(s, p, new, rel_h=1e-10, res_tol=1e-7):
    """Check the roots in `new` against Phi and the recursion.

    The sign test requires Phi(eta - h) > 0 > Phi(eta + h) with h equal to
    `rel_h` times the distance to the nearer neighbouring pole, and at
    least four ulps of eta.  The
    residual test (n <= 64 only, else skipped and reported ok) requires
    |P_{n+1}(e^{i eta})| <= res_tol * prod_k max(1, |e^{i eta} - lambda_k|).
    """
    _check_dims(s, p)
    keep = p.gamma >= WEIGHT_FLOOR
    poles = np.concatenate(([0.0], s.angles[keep], [TWO_PI]))
    eta = np.asarray(new.angles, dtype=float)
    if np.any(~keep):
        dropped = set(s.angles[~keep].tolist())
        eta = np.array([e for e in eta if e not in dropped])
    j = np.searchsorted(poles, eta)
    gap = np.minimum(eta - poles[j - 1], poles[j] - eta)
    h = np.maximum(rel_h * gap, 4.0 * np.spacing(eta))
    signs = True
    for e, hh in zip(eta, h):
        if not (phi_eval(s, p, e - hh) > 0.0 > phi_eval(s, p, e + hh)):
            signs = False
            break
    worst = 0.0
    res_ok = True
    if s.n <= 64:
        lam = np.exp(1j * s.angles)
        for e in new.angles:
            z = complex(math.cos(e), math.sin(e))
            scale = float(np.prod(np.maximum(1.0, np.abs(z - lam))))
            if np.min(np.abs(z - lam)) < POLE_TOL:
                continue  # collapsed root sitting on a dropped pole
            r = abs(charpoly_recursion_eval(s, p, z)) / scale
            worst = max(worst, r)
        res_ok = worst <= res_tol
    return Certificate(signs, worst, res_ok, h)


def angle_at_index(s, k):
    """theta_k for any integer k, with theta_{k+n} = theta_k + 2 pi."""
    m = s.angles.size
    if m == 0:
        raise ValueError("state has no eigenangles off 1")
    q, r = divmod(int(k) - 1, m)
    return float(s.angles[r]) + TWO_PI * q


def gamma_at_index(p, k):
    """gamma_k with the same periodic convention as angle_at_index."""
    return float(p.gamma[(int(k) - 1) % p.gamma.size])


def sample_step_haar(n, rng):
    """Step parameters of a Haar step n -> n+1.

    rho^2 ~ Beta(1, n) drawn as 1 - U^{1/n}, psi uniform on (-pi, pi],
    gamma flat Dirichlet (squared moduli of a uniform point of the
    complex sphere), all independent.
    """
    if n < 1:
        raise ValueError("n must be positive")
    while True:
        b = 1.0 - rng.random() ** (1.0 / n)
        if b < 1.0:
            break
    psi = math.pi - TWO_PI * rng.random()
    e = rng.standard_exponential(n)
    return StepParams(math.sqrt(b), psi, e / e.sum())


def sample_initial_haar(rng):
    """State of dimension 1 with theta uniform on (0, 2 pi)."""
    while True:
        t = TWO_PI * rng.random()
        if t > 0.0:
            return SpectralState(1, np.array([t]))


def _normalize(v):
    return v / np.linalg.norm(v)


def spectral_params_from_matrix(s_matrix, x_next, known_angles, shift=1e-8, max_iter=5,
                                res_tol=1e-8, cluster_tol=1e-10):
    """Step parameters of the extension of `s_matrix` by `x_next`.

    Eigenvectors f_k of u_n come from inverse iteration with shift
    e^{i theta_k}(1 + shift); then mu_k = <f_k, x>, nu = x[-1] and
    gamma_k = |mu_k|^2 / (1 - |nu|^2), renormalized to sum to 1.

    Returns None when x_next = e_{n+1} (the degenerate extension).
    """
    u = as_square(s_matrix.matrix() if hasattr(s_matrix, "matrix") else s_matrix)
    n = u.shape[0]
    x = as_vector(x_next)
    if x.size != n + 1:
        raise DimensionError(f"x_next must have dimension {n + 1}")
    th = np.sort(np.asarray(known_angles, dtype=float).reshape(-1))
    if th.size != n:
        raise DimensionError(f"expected {n} angles, got {th.size}")
    if n > 1:
        gaps = np.diff(np.concatenate((th, [th[0] + TWO_PI])))
        if gaps.min() < cluster_tol:
            raise ConvergenceError(f"eigenangles closer than {cluster_tol}")
    nu = complex(x[-1])
    d = x.copy()
    d[-1] -= 1.0
    if np.linalg.norm(d) <= 1e-12:
        return None
    r2 = 1.0 - abs(nu) ** 2
    if r2 <= 1e-14:
        raise SingularityError("|nu| = 1 with nu != 1 is outside the secular parametrization")
    eye = np.eye(n)
    start = np.exp(1j * np.arange(1, n + 1)) / math.sqrt(n)
    mu2 = np.empty(n)
    for k, t in enumerate(th):
        lam = complex(math.cos(t), math.sin(t))
        a = u - lam * (1.0 + shift) * eye
        f = start.copy()
        res = np.inf
        for _ in range(max_iter):
            f = _normalize(np.linalg.solve(a, f))
            f = _normalize(np.linalg.solve(a, f))
            res = np.linalg.norm(u @ f - lam * f)
            if res <= res_tol:
                break
        if res > res_tol:
            raise ConvergenceError(f"inverse iteration for angle {t} stalled at residual {res:.3g}")
        mu2[k] = abs(inner(f, x[:-1])) ** 2
    gamma = mu2 / r2
    tot = gamma.sum()
    if not tot > 0.0:
        raise SingularityError("all spectral weights vanish")
    gamma = gamma / tot
    psi = math.atan2(nu.imag, nu.real)
    if psi <= -math.pi:
        psi = math.pi
    return StepParams(abs(nu), psi, gamma)


@dataclass
class HaarRun:
    """Per-step records of one Haar spectral trajectory.

    Row n - 1 refers to dimension n.  rho, psi and gamma_max belong to
    the step n -> n+1 and are NaN on the last row.  min_gap and max_gap
    are the extreme gaps of the angles at dimension n, wraparound gap
    theta_1 + 2 pi - theta_n included.
    """

    n: np.ndarray
    rho: np.ndarray
    psi: np.ndarray
    gamma_max: np.ndarray
    min_gap: np.ndarray
    max_gap: np.ndarray
    indices: tuple
    theta: dict
    gamma: dict
    final: SpectralState = None
    snapshots: dict = field(default_factory=dict)

    def trajectory(self, k):
        from .asymptotics import Trajectory
        return Trajectory(k, self.n, self.theta[k], self.gamma[k])


def _gaps(a):
    if a.size == 1:
        return TWO_PI, TWO_PI
    g = np.diff(a)
    wrap = a[0] + TWO_PI - a[-1]
    return min(g.min(), wrap), max(g.max(), wrap)


def run_haar_spectral(n_max, tracked_indices, rng, snapshot_at=(), method="fast"):
    """Haar spectral trajectory from dimension 1 to n_max.

    Parameters
    ----------
    n_max : int
    tracked_indices : sequence of int
        Angle indices to record (periodic convention: k <= 0 allowed).
    rng : numpy.random.Generator
    snapshot_at : sequence of int
        Dimensions at which the full angle vector is kept.

    Returns
    -------
    HaarRun

    Raises
    ------
    BracketError, InvariantError
        With attributes ``step`` (the failing dimension) and ``partial``
        (a HaarRun holding the records up to that dimension).
    """
    if n_max < 1:
        raise ValueError("n_max must be positive")
    idx = tuple(int(k) for k in tracked_indices)
    nn = np.arange(1, n_max + 1)
    rho = np.full(n_max, np.nan)
    psi = np.full(n_max, np.nan)
    gmax = np.full(n_max, np.nan)
    gmin_gap = np.empty(n_max)
    gmax_gap = np.empty(n_max)
    theta = {k: np.empty(n_max) for k in idx}
    gam = {k: np.full(n_max, np.nan) for k in idx}
    snaps = {}
    want = set(int(m) for m in snapshot_at)
    s = sample_initial_haar(rng)
    for n in range(1, n_max + 1):
        i = n - 1
        gmin_gap[i], gmax_gap[i] = _gaps(s.angles)
        for k in idx:
            theta[k][i] = angle_at_index(s, k)
        if n in want:
            snaps[n] = s.angles.copy()
        if n == n_max:
            break
        p = sample_step_haar(n, rng)
        rho[i] = p.rho
        psi[i] = p.psi
        gmax[i] = p.gamma.max()
        for k in idx:
            gam[k][i] = gamma_at_index(p, k)
        try:
            s = advance(s, p, method=method)
        except (BracketError, InvariantError) as exc:
            m = n
            exc.step = n
            exc.partial = HaarRun(nn[:m], rho[:m], psi[:m], gmax[:m], gmin_gap[:m], gmax_gap[:m], idx,
                                  {k: v[:m] for k, v in theta.items()}, {k: v[:m] for k, v in gam.items()},
                                  s, snaps)
            raise
    return HaarRun(nn, rho, psi, gmax, gmin_gap, gmax_gap, idx, theta, gam, s, snaps)

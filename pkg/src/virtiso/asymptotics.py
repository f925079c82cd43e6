"""Statistics over eigenangle trajectories and ensembles.

Rescaling and martingale series for tracked angles, rate fitting,
diagnostics for the regularity event E, sine-kernel pair correlation,
and cycle statistics of Ewens permutations.
"""
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .builder import cycles, permutation_eigenangles
from .errors import ConvergenceError

TWO_PI = 2.0 * math.pi
WINDOW = 8.0
GOLOMB_DICKMAN = 0.6243299885435508


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time series of one tracked angle index.

    Parameters
    ----------
    k : int
        Tracked index (periodic convention, k <= 0 allowed).
    n : ndarray of int
        Dimensions, consecutive.
    theta : ndarray
        theta_k at each dimension, radians.
    gamma : ndarray
        Weight gamma_k consumed by the step n -> n+1; NaN on the last row.
    """

    k: int
    n: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.n, dtype=np.int64)
        th = np.asarray(self.theta, dtype=float)
        g = np.asarray(self.gamma, dtype=float)
        if not n.shape == th.shape == g.shape or n.ndim != 1 or n.size == 0:
            raise ValueError("n, theta and gamma must be 1-d arrays of one length")
        if n.size > 1 and not np.all(np.diff(n) == 1):
            raise ValueError("trajectory has gaps in n")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "gamma", g)

    @property
    def rescaled(self):
        return self.n * self.theta / TWO_PI

    def __len__(self):
        return self.n.size

    def at(self, n):
        """Row index of dimension n."""
        i = int(n) - int(self.n[0])
        if not 0 <= i < self.n.size:
            raise IndexError(f"dimension {n} not in trajectory")
        return i


def martingale_series(t):
    """M_n = sum_{p=1}^{n-1} (gamma_k(p) - 1/p) for every n of `t`."""
    if t.n[0] != 1:
        raise ValueError("martingale needs a trajectory starting at n = 1")
    inc = t.gamma[:-1] - 1.0 / t.n[:-1]
    if not np.all(np.isfinite(inc)):
        raise ValueError("trajectory has missing weights")
    out = np.zeros(t.n.size)
    out[1:] = np.cumsum(inc)
    return out


def harmonic(m):
    """H_m = sum_{p=1}^m 1/p for an integer array m (H_0 = 0)."""
    m = np.asarray(m, dtype=np.int64)
    top = int(m.max()) if m.size else 0
    h = np.zeros(top + 1)
    h[1:] = np.cumsum(1.0 / np.arange(1, top + 1))
    return h[m]


def identity_series(t):
    """rescaled(n) exp(M_n + H_{n-1} - log n), asymptotically constant.

    The sum H_{n-1} - log n tends to Euler's constant, so the series tends
    to x_k e^{gamma + M_infinity}, i.e. to L / 2 pi.
    """
    m = martingale_series(t)
    return t.rescaled * np.exp(m + harmonic(t.n - 1) - np.log(t.n))


class LimitEstimate(NamedTuple):
    """Final rescaled value and fitted rate exponent.

    ``eps_hat`` is +inf when the trajectory is converged below resolution.
    """

    x_hat: float
    eps_hat: float

    @property
    def below_resolution(self):
        return math.isinf(self.eps_hat)


def dyadic_grid(n_max, lo=16, hi=2):
    """n_max/lo, ..., n_max/hi, halving steps (integer division)."""
    out = []
    d = hi
    while d <= lo:
        out.append(n_max // d)
        d *= 2
    return np.array(out[::-1], dtype=np.int64)


def limit_estimate(t, min_length=64, floor=None):
    """Estimate x_k and the convergence exponent epsilon.

    x_hat is the rescaled value at the final n.  The exponent comes from a
    least-squares fit of log|r(2m) - r(m)| against log m over the dyadic
    grid m in {n_max/16, ..., n_max/2}: if r(m) = x + c m^{-eps}, the
    dyadic difference is c (1 - 2^{-eps}) m^{-eps} exactly, whereas the
    distance to the final value bends the log-log curve.

    Parameters
    ----------
    t : Trajectory
    min_length : int
    floor : float, optional
        Differences at or below this are roundoff; defaults to
        64 ulp of |x_hat|.  If every difference is at the floor, eps_hat
        is +inf ("converged below resolution").
    """
    if len(t) < min_length:
        raise ValueError(f"trajectory too short for a rate fit ({len(t)} < {min_length})")
    r = t.rescaled
    n_max = int(t.n[-1])
    x_hat = float(r[-1])
    if floor is None:
        floor = 64.0 * np.spacing(max(abs(x_hat), 1.0))
    m = dyadic_grid(n_max)
    d = np.abs(r[[t.at(2 * v) for v in m]] - r[[t.at(v) for v in m]])
    ok = d > floor
    if not np.any(ok):
        return LimitEstimate(x_hat, math.inf)
    if ok.sum() < 2:
        raise ConvergenceError("fewer than two dyadic differences above the floor")
    slope = np.polyfit(np.log(m[ok]), np.log(d[ok]), 1)[0]
    return LimitEstimate(x_hat, float(-slope))


def cauchy_witness(t, checkpoints=None):
    """sup_{m >= n} |r(m) - r(n_max)| at dyadic checkpoints n.

    Nonincreasing in n by construction; its decay is the witness of
    convergence of the rescaled angle.
    """
    r = t.rescaled
    dev = np.abs(r - r[-1])
    tail = np.maximum.accumulate(dev[::-1])[::-1]
    if checkpoints is None:
        checkpoints = 2 ** np.arange(int(math.log2(max(int(t.n[0]), 1))), int(math.log2(int(t.n[-1]))) + 1)
        checkpoints = checkpoints[checkpoints >= t.n[0]]
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    return checkpoints, tail[[t.at(v) for v in checkpoints]]


def identity_range(t, lo, hi):
    """(max - min) / median of identity_series over lo <= n <= hi."""
    q = identity_series(t)[t.at(lo):t.at(hi) + 1]
    return float((q.max() - q.min()) / np.median(q))


# event E

def rho_tail(n):
    """P[rho_n > n^-0.4] = P[Beta(1, n) > n^-0.8] = (1 - n^-0.8)^n."""
    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(n > 1, np.exp(n * np.log1p(-np.minimum(n ** -0.8, 1.0))), 0.0)


def gamma_tail_union(n):
    """Union bound n (1 - n^-0.99)^(n-1) on P[max_k gamma_k > n^-0.99].

    Each gamma_k is Beta(1, n - 1).
    """
    n = np.asarray(n, dtype=float)
    m = np.maximum(n, 2.0)
    return np.where(n > 1, np.minimum(1.0, m * np.exp((m - 1.0) * np.log1p(-(m ** -0.99)))), 0.0)


@dataclass(frozen=True)
class ConditionReport:
    """Violations of one event-E condition across replicas.

    last_violation[r] is the largest n violating the condition in replica r
    (0 if none); frequency[i] is the fraction of replicas violating at n[i].
    """

    name: str
    n: np.ndarray
    frequency: np.ndarray
    last_violation: np.ndarray

    def summary(self):
        return {
            "name": self.name,
            "replicas": int(self.last_violation.size),
            "max_last_violation": int(self.last_violation.max(initial=0)),
            "median_last_violation": float(np.median(self.last_violation)) if self.last_violation.size else 0.0,
            "mean_frequency": float(self.frequency.mean()) if self.frequency.size else 0.0,
        }


def _report(name, n, viol):
    viol = np.atleast_2d(viol)
    freq = viol.mean(axis=0)
    last = np.array([int(n[np.flatnonzero(v)[-1]]) if v.any() else 0 for v in viol], dtype=np.int64)
    return ConditionReport(name, n, freq, last)


def event_e_diagnostics(runs):
    """Check the conditions of event E on per-step records.

    Parameters
    ----------
    runs : sequence of records with arrays n, rho, gamma_max, min_gap,
        max_gap over one common grid (as HaarRun).  rho and gamma_max at
        row n are the parameters of step n -> n+1; NaN rows are skipped.

    Returns
    -------
    dict of ConditionReport: "rho" (rho_n <= n^-0.4), "gamma"
    (max_k gamma_k <= n^-0.99), "gap_lower" (gaps >= n^-1.7) and
    "gap_upper" (gaps <= n^-0.9).  Gaps include the wraparound gap.
    """
    runs = list(runs)
    if not runs:
        raise ValueError("no runs")
    n = np.asarray(runs[0].n, dtype=np.int64)
    for r in runs:
        if not np.array_equal(r.n, n):
            raise ValueError("runs must share one n-grid")
    nf = n.astype(float)
    rho = np.array([r.rho for r in runs])
    gmax = np.array([r.gamma_max for r in runs])
    step = np.all(np.isfinite(rho), axis=0)
    ns = nf[step]
    out = {
        "rho": _report("rho", n[step], rho[:, step] > ns ** -0.4),
        "gamma": _report("gamma", n[step], gmax[:, step] > ns ** -0.99),
        "gap_lower": _report("gap_lower", n, np.array([r.min_gap for r in runs]) < nf ** -1.7),
        "gap_upper": _report("gap_upper", n, np.array([r.max_gap for r in runs]) > nf ** -0.9),
    }
    return out


def gap_bounds_hold(angles, n=None):
    """(lower_ok, upper_ok) for the E_3 bounds on a single angle set."""
    a = np.sort(np.asarray(angles, dtype=float))
    n = a.size if n is None else n
    g = np.diff(np.concatenate((a, [a[0] + TWO_PI])))
    return bool(g.min() >= n ** -1.7), bool(g.max() <= n ** -0.9)


# pair correlation

def sine_kernel_r2(x):
    """R_2(x) = 1 - (sin(pi x) / (pi x))^2."""
    return 1.0 - np.sinc(np.asarray(x, dtype=float)) ** 2


def rescaled_window(angles, n, width=WINDOW, center=0.0):
    """Points n theta / 2 pi - center, wrapped to (-n/2, n/2], within [-W, W]."""
    x = n * np.asarray(angles, dtype=float) / TWO_PI - center
    x = x - n * np.round(x / n)
    return np.sort(x[np.abs(x) <= width])


@dataclass(frozen=True)
class PairCorrelationEstimate:
    """Binned estimate of the pair correlation (point density 1).

    density[i] estimates the bin average of R_2; theory[i] is the bin
    average of 1 - sinc^2 with the same edge weighting.
    """

    edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    theory: np.ndarray
    samples: int
    window: float

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def deviation(self):
        return np.abs(self.density - self.theory)


def _edge_weight(edges, length):
    # integral over each bin of (L - x), the window overlap of a pair at distance x
    a = np.clip(edges[:-1], 0.0, length)
    b = np.clip(edges[1:], 0.0, length)
    return length * (b - a) - 0.5 * (b * b - a * a)


def _theory(edges, length, sub=64):
    out = np.empty(edges.size - 1)
    for i in range(edges.size - 1):
        x = np.linspace(edges[i], edges[i + 1], sub + 1)
        x = 0.5 * (x[1:] + x[:-1])
        w = np.clip(length - x, 0.0, None)
        out[i] = np.sum(sine_kernel_r2(x) * w) / max(np.sum(w), 1e-300)
    return out


def pair_correlation(samples, bins=np.arange(0.0, 4.0 + 1e-12, 0.25), window=WINDOW):
    """Pair-correlation histogram from windows of rescaled points.

    Parameters
    ----------
    samples : iterable of 1-d arrays
        Each array holds the points of one sample inside [-window, window],
        at point density 1.
    bins : array of bin edges in [0, 2 window]
    window : float

    Notes
    -----
    For a stationary process of density 1 observed on an interval of
    length L, the expected number of unordered pairs at distance in
    [a, b] is the integral of R_2(x) (L - x) over [a, b]; the estimate
    divides the counts by that weight, which removes the edge bias.
    """
    edges = np.asarray(bins, dtype=float)
    length = 2.0 * window
    counts = np.zeros(edges.size - 1, dtype=np.int64)
    m = 0
    for x in samples:
        x = np.sort(np.asarray(x, dtype=float))
        m += 1
        if x.size < 2:
            continue
        d = (x[None, :] - x[:, None])[np.triu_indices(x.size, 1)]
        counts += np.histogram(d, bins=edges)[0]
    if m == 0:
        raise ValueError("empty ensemble")
    dens = counts / (m * _edge_weight(edges, length))
    return PairCorrelationEstimate(edges, counts, dens, _theory(edges, length), m, window)


def poisson_windows(count, rng, window=WINDOW):
    """Windows of a density-1 Poisson process (independence baseline)."""
    out = []
    for _ in range(count):
        k = rng.poisson(2.0 * window)
        out.append(np.sort(rng.uniform(-window, window, k)))
    return out


# permutations

def cycle_lengths(s):
    """Cycle lengths of a permutation state, longest first."""
    return np.array([len(c) for c in cycles(s)], dtype=np.int64)


def permutation_limits(chain, top=3):
    """Cycle fractions l_p(sigma_n)/n, p = 1..top, along a chain.

    Parameters
    ----------
    chain : sequence of VirtualPermutationState of increasing n
    top : int

    Returns
    -------
    n : ndarray, fractions : ndarray of shape (len(chain), top), zero-padded.
    """
    chain = list(chain)
    n = np.array([s.n for s in chain], dtype=np.int64)
    fr = np.zeros((len(chain), top))
    for i, s in enumerate(chain):
        ln = cycle_lengths(s)[:top]
        fr[i, :ln.size] = ln / s.n
    return n, fr


def eigenangles_match_cycles(s):
    """True iff the eigenangles of the permutation matrix are exactly j/l (turns).

    Compares the rational eigenangle list with the cycle-root multiples
    built independently from the cycle lengths.
    """
    from fractions import Fraction
    want = sorted(Fraction(j, int(l)) for l in cycle_lengths(s) for j in range(int(l)))
    return permutation_eigenangles(s) == want


def ewens_cycle_counts(n, theta, rng, size):
    """Cycle-length multisets of `size` Ewens(theta) permutations of n.

    Feller coupling: element m (from n down to 1) closes its cycle with
    probability theta / (theta + m - 1); cycle lengths are the spacings
    between closures.  Independent of the restaurant construction.
    """
    m = np.arange(n, 0, -1, dtype=float)
    close = rng.random((size, n)) < theta / (theta + m - 1.0)
    close[:, -1] = True
    out = []
    for row in close:
        pos = np.flatnonzero(row)
        out.append(np.diff(np.concatenate(([-1], pos))))
    return out


def golomb_dickman_oracle(n, replicas, rng, theta=1.0):
    """Monte Carlo E[l_1 / n] and its standard error by the Feller coupling."""
    v = np.array([c.max() / n for c in ewens_cycle_counts(n, theta, rng, replicas)])
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))

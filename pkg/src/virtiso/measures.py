"""Samplers for the coherent measures on virtual isometries, and capacity.

Haar: x_k uniform on the unit sphere of C^k.  Hua-Pickrell(delta): x_k is
the uniform law tilted by ``h(x) = (1 - z)^conj(delta) (1 - conj z)^delta``
with ``z = x[-1]``, sampled by rejection.  Ewens(theta): x_k = e_n with
probability theta/(theta + k - 1) and e_j (j < k) with probability
1/(theta + k - 1).

Random streams follow one rule: replica r of a run with master seed s
draws from ``Philox(SeedSequence(s, spawn_key=(r,)))``, so results never
depend on scheduling.
"""
import math
from dataclasses import dataclass

import numpy as np

from .builder import build, permutation_from_indices
from .errors import UnsupportedParameterError
from .linalg import basis

KINDS = ("haar", "hua_pickrell", "ewens")


@dataclass(frozen=True)
class MeasureSpec:
    """Which coherent measure to sample.

    Parameters
    ----------
    kind : {"haar", "hua_pickrell", "ewens"}
    delta : complex
        Hua-Pickrell parameter; Re delta >= 0 is required.
    theta : float
        Ewens parameter, > 0.
    seed : int
        Master seed (64-bit).
    """

    kind: str = "haar"
    delta: complex = 0j
    theta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        kind = self.kind.replace("-", "_")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "delta", complex(self.delta))
        if kind not in KINDS:
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if kind == "hua_pickrell" and self.delta.real < 0:
            raise UnsupportedParameterError("unsupported parameter domain: Hua-Pickrell needs Re(delta) >= 0")
        if kind == "ewens" and not self.theta > 0:
            raise ValueError("Ewens parameter theta must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def rng(self, replica=0):
        return replica_rng(self.seed, replica)


def replica_rng(seed, replica=0):
    """Counter-based generator for replica `replica` of master seed `seed`."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replica),))
    return np.random.Generator(np.random.Philox(ss))


def sample_sphere(n, rng):
    """Uniform unit vector of C^n (normalized standard complex Gaussian)."""
    if n < 1:
        raise ValueError("n must be positive")
    while True:
        g = rng.standard_normal(2 * n)
        z = g[:n] + 1j * g[n:]
        nz = np.linalg.norm(z)
        if nz > 0:
            return z / nz


def sample_sphere_batch(n, size, rng):
    """`size` independent uniform unit vectors of C^n, as rows."""
    g = rng.standard_normal((size, 2 * n))
    z = g[:, :n] + 1j * g[:, n:]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def hua_pickrell_weight(z, delta):
    """h as a function of the last coordinate z (|z| <= 1, z != 1).

    ``|1 - z|^{2 Re delta} exp(2 Im delta arg(1 - z))`` with the principal
    argument, which lies in (-pi/2, pi/2) on the unit disk.
    """
    delta = complex(delta)
    w = 1.0 - np.asarray(z, dtype=np.complex128)
    with np.errstate(divide="ignore"):
        return np.exp(2 * delta.real * np.log(np.abs(w)) + 2 * delta.imag * np.angle(w))


def hua_pickrell_envelope(delta):
    """Bound M >= h used by the rejection sampler."""
    delta = complex(delta)
    return 2.0 ** (2 * delta.real) * math.exp(math.pi * abs(delta.imag))


def sample_hua_pickrell_vector(n, delta, rng, return_tries=False):
    """Unit vector of C^n from the h-tilted uniform law, by rejection.

    With ``return_tries`` the number of proposals used is also returned;
    for delta = 0 it is always 1.
    """
    delta = complex(delta)
    if delta.real < 0:
        raise UnsupportedParameterError("unsupported parameter domain: Hua-Pickrell needs Re(delta) >= 0")
    if delta == 0:
        x = sample_sphere(n, rng)
        return (x, 1) if return_tries else x
    m = hua_pickrell_envelope(delta)
    tries = 0
    while True:
        tries += 1
        x = sample_sphere(n, rng)
        if rng.random() * m < hua_pickrell_weight(x[-1], delta):
            return (x, tries) if return_tries else x


def sample_hua_pickrell_batch(n, size, delta, rng):
    """`size` Hua-Pickrell vectors of C^n as rows (vectorized rejection)."""
    delta = complex(delta)
    if delta.real < 0:
        raise UnsupportedParameterError("unsupported parameter domain: Hua-Pickrell needs Re(delta) >= 0")
    if delta == 0:
        return sample_sphere_batch(n, size, rng)
    m = hua_pickrell_envelope(delta)
    out = np.empty((size, n), dtype=np.complex128)
    filled = 0
    while filled < size:
        need = size - filled
        prop = sample_sphere_batch(n, max(16, int(need * m * 1.2)), rng)
        acc = rng.random(prop.shape[0]) * m < hua_pickrell_weight(prop[:, -1], delta)
        take = prop[acc][:need]
        out[filled:filled + take.shape[0]] = take
        filled += take.shape[0]
    return out


def sample_ewens_index(n, theta, rng):
    """Index in 1..n: n w.p. theta/(theta+n-1), each j < n w.p. 1/(theta+n-1)."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    if n == 1:
        return 1
    u = rng.random() * (theta + n - 1)
    if u < theta:
        return n
    return min(1 + int(u - theta), n - 1)


def sample_vector(spec, n, rng):
    """One generating vector of dimension n under `spec`."""
    if spec.kind == "haar":
        return sample_sphere(n, rng)
    if spec.kind == "hua_pickrell":
        return sample_hua_pickrell_vector(n, spec.delta, rng)
    return basis(n, sample_ewens_index(n, spec.theta, rng))


def sample_vectors(spec, n_max, rng):
    """Generating vectors x_1..x_{n_max}."""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    return [sample_vector(spec, k, rng) for k in range(1, n_max + 1)]


def sample_virtual_isometry(spec, n_max, rng, store_matrix=True):
    """Virtual isometry truncated at n_max, built from independent x_k."""
    return build(sample_vectors(spec, n_max, rng), store_matrix=store_matrix)


def sample_ewens_indices(n_max, theta, rng):
    return [sample_ewens_index(k, theta, rng) for k in range(1, n_max + 1)]


def sample_ewens_permutation(n_max, theta, rng):
    """Ewens permutation of {1..n_max} via the Chinese restaurant process."""
    return permutation_from_indices(sample_ewens_indices(n_max, theta, rng))


@dataclass(frozen=True)
class CapacityEstimate:
    """Monte Carlo mean of log det(Id - u), with per-component standard errors."""

    mean: complex
    stderr_re: float
    stderr_im: float
    samples: int
    resampled: int = 0

    def within(self, value, nsigma=3.0):
        value = complex(value)
        ok_re = abs(self.mean.real - value.real) <= nsigma * self.stderr_re + 1e-15
        ok_im = abs(self.mean.imag - value.imag) <= nsigma * self.stderr_im + 1e-15
        return ok_re and ok_im


def log_det_identity_minus(xs):
    """Branch-consistent log det(Id - u_n) = sum_k log(1 - <e_k, x_k>)."""
    return complex(np.sum(np.log(np.array([1.0 - complex(x[-1]) for x in xs]))))


def _last_coords(spec, k, size, rng):
    if spec.kind == "haar":
        return sample_sphere_batch(k, size, rng)[:, -1]
    return sample_hua_pickrell_batch(k, size, spec.delta, rng)[:, -1]


def capacity_estimate(spec, n, samples, rng, floor=1e-14):
    """Estimate E[log det(Id - u_n)] from `samples` independent paths.

    Only the last coordinates of the generating vectors enter.  Paths with
    a factor of modulus below `floor` are redrawn.  Ewens paths contain
    the factor 0 with positive probability, so that measure is rejected.
    """
    if samples < 2:
        raise ValueError("samples must be at least 2")
    if spec.kind == "ewens":
        raise UnsupportedParameterError("capacity is undefined for Ewens: det(Id - u) vanishes with positive probability")
    total = np.zeros(samples, dtype=np.complex128)
    bad = np.zeros(samples, dtype=bool)
    for k in range(1, n + 1):
        w = 1.0 - _last_coords(spec, k, samples, rng)
        bad |= np.abs(w) < floor
        total += np.log(np.where(np.abs(w) < floor, 1.0, w))
    resampled = 0
    for i in np.flatnonzero(bad):
        while True:
            resampled += 1
            w = np.array([1.0 - _last_coords(spec, k, 1, rng)[0] for k in range(1, n + 1)])
            if np.all(np.abs(w) >= floor):
                total[i] = np.sum(np.log(w))
                break
    return CapacityEstimate(
        mean=complex(total.mean()),
        stderr_re=float(total.real.std(ddof=1) / math.sqrt(samples)),
        stderr_im=float(total.imag.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
        resampled=resampled,
    )

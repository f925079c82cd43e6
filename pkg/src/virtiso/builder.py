"""Incremental construction of virtual isometries and virtual permutations.

A virtual isometry is grown one dimension at a time: given u_n and a unit
vector x of C^{n+1}, ``u_{n+1} = r(x) (u_n ⊕ 1)`` where r(x) is the
reflection sending e_{n+1} to x.  Equivalently ``u_n = r_n ... r_1``
with each r_j acting on the first j coordinates.  Building from basis
vectors x_k = e_{i_k} gives permutation matrices, which is the
Chinese-restaurant construction of permutations.
"""
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DimensionError
from .linalg import FIXED_POINT_TOL, Reflection, as_square, check_unit, pad_identity
from .projections import one_step_project


@dataclass(frozen=True, eq=False)
class VirtualIsometryState:
    """Dimension n, matrix u_n (or None in vectors-only mode) and x_1..x_n."""

    n: int
    xs: tuple
    u: np.ndarray = None

    def matrix(self):
        """u_n, rebuilt from the generating vectors when not stored."""
        if self.u is not None:
            return self.u
        return reconstruct(self.xs)

    @property
    def lazy(self):
        return self.u is None


def _is_last_basis(x):
    d = x.copy()
    d[-1] -= 1.0
    return np.linalg.norm(d) <= FIXED_POINT_TOL


def init(x1, store_matrix=True):
    """State of dimension 1 with u_1 = (x1)."""
    x1 = check_unit(x1)
    if x1.size != 1:
        raise DimensionError("init expects a vector of dimension 1")
    u = x1.reshape(1, 1).copy() if store_matrix else None
    return VirtualIsometryState(1, (x1.copy(),), u)


def _extend_matrix(u, x):
    n = u.shape[0]
    padded = pad_identity(u, n + 1)
    if _is_last_basis(x):
        return padded
    return Reflection(x).apply(padded)


def extend(s, x):
    """Return the state of dimension n+1 generated by the unit vector `x`."""
    x = check_unit(x)
    if x.size != s.n + 1:
        raise DimensionError(f"extend expects dimension {s.n + 1}, got {x.size}")
    u = None if s.u is None else _extend_matrix(s.u, x)
    return VirtualIsometryState(s.n + 1, s.xs + (x.copy(),), u)


def build(xs, store_matrix=True):
    """State generated by the sequence x_1, ..., x_n (x_k of dimension k)."""
    xs = list(xs)
    if not xs:
        raise DimensionError("need at least one generating vector")
    x1 = check_unit(xs[0])
    if x1.size != 1:
        raise DimensionError("x_1 must have dimension 1")
    u = x1.reshape(1, 1).copy()
    checked = [x1.copy()]
    for k, x in enumerate(xs[1:], start=2):
        x = check_unit(x)
        if x.size != k:
            raise DimensionError(f"x_{k} must have dimension {k}, got {x.size}")
        if store_matrix:
            u = _extend_matrix(u, x)
        checked.append(x.copy())
    return VirtualIsometryState(len(checked), tuple(checked), u if store_matrix else None)


def reconstruct(xs):
    """u_n from the generating vectors."""
    return build(xs).u


def product_form(xs):
    """Explicit product r_n (r_{n-1} ⊕ 1) ... (r_1 ⊕ Id_{n-1})."""
    xs = [check_unit(x) for x in xs]
    n = len(xs)
    out = np.eye(n, dtype=np.complex128)
    for x in xs:
        out = pad_identity(Reflection(x).matrix(), n) @ out
    return out


def decompose(u):
    """Generating vectors of u: x_k is the last column of pi_{n,k}(u)."""
    u = as_square(u)
    xs = []
    while True:
        xs.append(u[:, -1].copy())
        if u.shape[0] == 1:
            break
        u = one_step_project(u)
    return xs[::-1]


def det_identity_factors(xs):
    """Factors 1 - <e_k, x_k> whose product is det(Id - u_n)."""
    return np.array([1.0 - complex(x[-1]) for x in xs], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class VirtualPermutationState:
    """Permutation of {1..n} stored as images: ``sigma[j-1] = sigma(j)``."""

    n: int
    sigma: tuple
    _inverse: tuple = field(default=None, repr=False)

    def __post_init__(self):
        if sorted(self.sigma) != list(range(1, self.n + 1)):
            raise ValueError("sigma is not a bijection of 1..n")
        if self._inverse is None:
            inv = [0] * self.n
            for j, s in enumerate(self.sigma, start=1):
                inv[s - 1] = j
            object.__setattr__(self, "_inverse", tuple(inv))

    def __eq__(self, other):
        return isinstance(other, VirtualPermutationState) and self.sigma == other.sigma

    def __hash__(self):
        return hash(self.sigma)

    def __call__(self, j):
        return self.sigma[j - 1]

    @property
    def cycles(self):
        return cycles(self)


def identity_permutation(n):
    return VirtualPermutationState(n, tuple(range(1, n + 1)))


def crp_extend(s, i):
    """Insert n+1 into sigma: a fixed point if i = n+1, else just before i.

    This is ``tau_{n+1,i} (sigma ⊕ fixed point)``: the new sigma sends
    n+1 to i and sends sigma^{-1}(i) to n+1.
    """
    n = s.n
    if not 1 <= i <= n + 1:
        raise ValueError(f"index {i} outside 1..{n + 1}")
    sigma = list(s.sigma) + [n + 1]
    inv = list(s._inverse) + [n + 1]
    if i <= n:
        j = inv[i - 1]
        sigma[j - 1] = n + 1
        sigma[n] = i
        inv[n] = j
        inv[i - 1] = n + 1
    return VirtualPermutationState(n + 1, tuple(sigma), tuple(inv))


def permutation_from_indices(indices):
    """Permutation generated by the index sequence i_1, ..., i_n (i_k <= k)."""
    sigma = []
    inv = []
    for k, i in enumerate(indices, start=1):
        if not 1 <= i <= k:
            raise ValueError(f"index {i} at step {k} outside 1..{k}")
        sigma.append(k)
        inv.append(k)
        if i < k:
            j = inv[i - 1]
            sigma[j - 1] = k
            sigma[k - 1] = i
            inv[k - 1] = j
            inv[i - 1] = k
    return VirtualPermutationState(len(sigma), tuple(sigma), tuple(inv))


def cycles(s):
    """Cycles of sigma, longest first (ties by smallest element).

    Each cycle starts at its smallest element and follows sigma.
    """
    seen = [False] * s.n
    out = []
    for start in range(1, s.n + 1):
        if seen[start - 1]:
            continue
        cyc = []
        j = start
        while not seen[j - 1]:
            seen[j - 1] = True
            cyc.append(j)
            j = s.sigma[j - 1]
        out.append(cyc)
    out.sort(key=lambda c: (-len(c), c[0]))
    return out


def permutation_matrix(s):
    """Matrix sending e_j to e_{sigma(j)}."""
    m = np.zeros((s.n, s.n), dtype=np.complex128)
    m[np.array(s.sigma) - 1, np.arange(s.n)] = 1.0
    return m


def permutation_eigenangles(s):
    """Eigenangles as exact fractions of 2 pi: j/l for each cycle length l."""
    out = []
    for c in cycles(s):
        l = len(c)
        out.extend(Fraction(j, l) for j in range(l))
    return sorted(out)

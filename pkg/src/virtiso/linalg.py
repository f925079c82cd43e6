"""Dense complex linear algebra: vectors, reflections, determinants, rank, Cayley.

The inner product is antilinear in the *first* argument,
``inner(a, b) = sum(conj(a) * b)``.  This is the convention used by the
one-step projection formula and by the spectral step parameters.
"""
import numpy as np

from .errors import DimensionError, NotUnitError, NotUnitaryError, SingularityError

UNIT_TOL = 1e-12
FIXED_POINT_TOL = 1e-12


def as_vector(x):
    """Return `x` as a 1-D complex128 array."""
    v = np.asarray(x, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"expected a non-empty vector, got shape {v.shape}")
    return v


def as_square(m):
    """Return `m` as a square complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise DimensionError(f"expected a non-empty square matrix, got shape {a.shape}")
    return a


def basis(n, k):
    """Standard basis vector e_k of C^n, with 1-based k."""
    if not 1 <= k <= n:
        raise DimensionError(f"basis index {k} outside 1..{n}")
    e = np.zeros(n, dtype=np.complex128)
    e[k - 1] = 1.0
    return e


def inner(a, b):
    """Hermitian inner product, conjugate-linear in `a`.

    >>> inner([1j, 0], [1, 0])
    -1j
    """
    a = as_vector(a)
    b = as_vector(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch {a.size} vs {b.size}")
    return complex(np.vdot(a, b))


def is_unit(x, tol=UNIT_TOL):
    return abs(np.linalg.norm(as_vector(x)) - 1.0) <= tol


def check_unit(x, tol=UNIT_TOL):
    x = as_vector(x)
    err = abs(np.linalg.norm(x) - 1.0)
    if err > tol:
        raise NotUnitError(f"vector norm deviates from 1 by {err:.3e}")
    return x


def unitarity_defect(u):
    """max-norm of u^H u - Id."""
    u = as_square(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def unitary_tol(n):
    """Tolerance attached to the unitary tag in dimension n."""
    return n * 1e-12


def is_unitary(u, tol=None):
    u = as_square(u)
    if tol is None:
        tol = unitary_tol(u.shape[0])
    return unitarity_defect(u) <= tol


def check_unitary(u, tol=None):
    """Raise NotUnitaryError unless `u` is unitary within `tol`."""
    u = as_square(u)
    if tol is None:
        tol = unitary_tol(u.shape[0])
    d = unitarity_defect(u)
    if d > tol:
        raise NotUnitaryError(f"unitarity defect {d:.3e} exceeds {tol:.1e}")
    return u


class Reflection:
    """Reflection of C^n sending e_n to a unit vector `target`.

    The matrix is ``Id + v v^H / (conj(nu) - 1)`` with ``v = x - e_n`` and
    ``nu = x[-1]``; it is the identity when ``x = e_n``.
    """

    def __init__(self, target):
        self.target = check_unit(target)
        self.dim = self.target.size

    @property
    def is_identity(self):
        e = np.zeros(self.dim, dtype=np.complex128)
        e[-1] = 1.0
        return bool(np.linalg.norm(self.target - e) <= FIXED_POINT_TOL)

    def _v_coef(self):
        v = self.target.copy()
        v[-1] -= 1.0
        return v, 1.0 / (np.conj(self.target[-1]) - 1.0)

    def matrix(self):
        if self.is_identity:
            return np.eye(self.dim, dtype=np.complex128)
        v, coef = self._v_coef()
        r = coef * np.outer(v, v.conj())
        r[np.diag_indices(self.dim)] += 1.0
        return r

    def apply(self, m):
        """r @ m without materializing r (m may be a vector or a matrix)."""
        m = np.asarray(m, dtype=np.complex128)
        if self.is_identity:
            return m.copy()
        v, coef = self._v_coef()
        if m.ndim == 1:
            return m + coef * v * np.vdot(v, m)
        return m + coef * np.outer(v, v.conj() @ m)


def make_reflection(x):
    """Matrix of the reflection mapping e_n to the unit vector `x`."""
    return Reflection(x).matrix()


def det(m):
    """Determinant by LU factorization with partial pivoting."""
    m = as_square(m)
    if m.shape[0] == 1:
        return complex(m[0, 0])
    return complex(np.linalg.det(m))


def rank(m, tol=1e-9):
    """Number of pivots above ``tol * max(1, max|m_ij|)`` in row reduction.

    Gaussian elimination with partial (column) pivoting; a column whose
    best remaining pivot is below threshold is skipped.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    a = np.array(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError("rank expects a matrix")
    rows, cols = a.shape
    if a.size == 0:
        return 0
    thresh = tol * max(1.0, float(np.max(np.abs(a))))
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[p, c]) <= thresh:
            continue
        if p != r:
            a[[r, p]] = a[[p, r]]
        a[r + 1:, c:] -= np.outer(a[r + 1:, c] / a[r, c], a[r, c:])
        r += 1
    return r


def charpoly_eval(u, z):
    """det(z Id - u)."""
    u = as_square(u)
    return det(z * np.eye(u.shape[0]) - u)


def eigenangles(u):
    """Sorted eigenangles of a unitary matrix, in [0, 2 pi)."""
    lam = np.linalg.eigvals(as_square(u))
    return np.sort(np.mod(np.angle(lam), 2 * np.pi))


def cayley(m, herm_tol=1e-10):
    """(M - i)(M + i)^{-1} for Hermitian M; the result has no eigenvalue 1."""
    m = as_square(m)
    if np.max(np.abs(m - m.conj().T)) > herm_tol:
        raise ValueError("cayley expects a Hermitian matrix")
    n = m.shape[0]
    eye = np.eye(n)
    # (M+i)^{-1} commutes with M-i, so a left solve is fine
    return np.linalg.solve(m + 1j * eye, m - 1j * eye)


def inverse_cayley(u, sing_tol=1e-10):
    """i(1 + u)(1 - u)^{-1}; raises SingularityError near eigenvalue 1."""
    u = as_square(u)
    eye = np.eye(u.shape[0])
    if abs(det(eye - u)) < sing_tol:
        raise SingularityError("Id - u is numerically singular (eigenvalue near 1)")
    return 1j * np.linalg.solve(eye - u, eye + u)


def direct_sum(a, b):
    """Block-diagonal a ⊕ b."""
    a = as_square(a)
    b = as_square(b)
    n, m = a.shape[0], b.shape[0]
    out = np.zeros((n + m, n + m), dtype=np.complex128)
    out[:n, :n] = a
    out[n:, n:] = b
    return out


def pad_identity(a, n):
    """a ⊕ Id_{n - dim a}."""
    a = as_square(a)
    k = a.shape[0]
    if n < k:
        raise DimensionError(f"cannot pad dimension {k} down to {n}")
    out = np.eye(n, dtype=np.complex128)
    out[:k, :k] = a
    return out

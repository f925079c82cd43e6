"""Rank-minimizing projections between nested unitary groups, and rank distance.

``one_step_project`` maps U(n) to U(n-1): it is the unique unitary on
Span(e_1..e_{n-1}) whose difference with ``u`` has minimal rank.  On
matrices without the eigenvalue-1 obstruction in the corner it
coincides with the block formula ``A + B (Id - D)^{-1} C``.
"""
import warnings

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, SingularityError
from .linalg import FIXED_POINT_TOL, as_square, check_unitary, rank

UNITARY_CHECK = 1e-8


def _maybe_check(u, check):
    if check:
        check_unitary(u, tol=max(UNITARY_CHECK, u.shape[0] * 1e-12))


def one_step_project(u, check=True):
    """Project a unitary of dimension n >= 2 onto U(n-1).

    With e = e_n, every column is mapped to
    ``u x + <e - u e, u x> / <e - u e, u e> (e - u e)``
    and the leading (n-1) block is returned.  When ``u e = e`` up to
    1e-12 the leading block of ``u`` is returned directly.
    """
    u = as_square(u)
    n = u.shape[0]
    if n < 2:
        raise DimensionError("one_step_project needs dimension at least 2")
    _maybe_check(u, check)
    ue = u[:, -1]
    w = -ue.copy()
    w[-1] += 1.0
    if np.linalg.norm(w) <= FIXED_POINT_TOL:
        return u[:-1, :-1].copy()
    denom = np.vdot(w, ue)
    v = u[:-1, :-1] + np.outer(w[:-1], w.conj() @ u[:, :-1]) / denom
    return v


def project(u, m, check=True):
    """pi_{n,m}(u): (n-m)-fold composition of one_step_project."""
    u = as_square(u)
    n = u.shape[0]
    if not 1 <= m <= n:
        raise DimensionError(f"target dimension {m} outside 1..{n}")
    _maybe_check(u, check)
    for _ in range(n - m):
        u = one_step_project(u, check=False)
    return u.copy() if m == n else u


def project_neretin(u, m, pivot_tol=1e-10):
    """Block form A + B (Id - D)^{-1} C of the projection onto U(m)."""
    u = as_square(u)
    n = u.shape[0]
    if not 1 <= m < n:
        raise DimensionError(f"target dimension {m} outside 1..{n - 1}")
    a, b = u[:m, :m], u[:m, m:]
    c, d = u[m:, :m], u[m:, m:]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)  # singularity is reported below
        lu, piv = sla.lu_factor(np.eye(n - m) - d, check_finite=False)
    if np.min(np.abs(np.diag(lu))) <= pivot_tol:
        raise SingularityError("Id - D is singular: eigenvalue-1 obstruction in the corner")
    return a + b @ sla.lu_solve((lu, piv), c, check_finite=False)


def rank_distance(u, v, tol=1e-9):
    """rank(u - v)."""
    u = as_square(u)
    v = as_square(v)
    if u.shape != v.shape:
        raise DimensionError(f"dimension mismatch {u.shape[0]} vs {v.shape[0]}")
    return rank(u - v, tol)

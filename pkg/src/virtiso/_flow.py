"""Compiled kernels for the interlacing secular equation.

The equation solved on each interval between consecutive poles is

    F(y) = sum_j w_j cot((y - P_j) / 2) - beta = 0,

with P_0 = 0 and increasing poles P_1 < ... < P_{N-1} < 2 pi, all weights
positive.  F decreases strictly between poles, so there is exactly one
root per interval.

For interval k the 2K+2 poles nearest to it are summed exactly at every
iterate.  The remaining (far) poles contribute a smooth background; it is
evaluated exactly, with three derivatives, at one point near the root,
and its Taylor cubic is used inside the local solve.  For small N that
evaluation is a direct O(N) sum; above FMM_MIN poles it comes from a fast
multipole expansion built once per sweep, accurate to about 1e-13
absolute (per unit weight), which makes a sweep O(N) overall; roots so
close to 0 that this error would exceed two ulps use the direct sum.
The Taylor remainder is bounded using the distance to the nearest far
pole.  If the bound could move the root by more than about two ulps, the background is evaluated
again at the new iterate; an interval whose background cannot be
certified within a few re-evaluations (a dense cluster just outside the
window) is solved with the exact sum instead.  The model for interval k
also predicts the root of interval k+1, so a sweep costs about one
background evaluation per root.

Sums use the addition formula
cot((y - p)/2) = (C c + S s) / (S c - C s), with (S, C) the half-angle sine
and cosine of y and (s, c) those of p, as precomputed tables.  The two
poles bounding the interval are handled with direct differences so that
roots hugging a pole stay accurate relative to their distance from it.
"""
import math

import numba as nb
import numpy as np

_FAST = dict(cache=True, fastmath=True, error_model="numpy", nogil=True)
_SAFE = dict(cache=True, error_model="numpy", nogil=True)

TWO_PI = 2.0 * math.pi
TWO_PI_LO = 2.4492935982947064e-16  # 2 pi - TWO_PI
EPS = 2.220446049250313e-16

# status codes
OK = 0
NONFINITE = 1
NO_CONVERGENCE = 2
UNREPRESENTABLE = 3  # no double lies strictly between two poles


@nb.njit(**_FAST)
def _far_seg(Si, Ci, s, c, w):
    # four streams share one reciprocal; the division is the bottleneck
    f0 = 0.0
    f1 = 0.0
    f2 = 0.0
    f3 = 0.0
    n = s.shape[0]
    q4 = n // 4
    sb = s[q4:]
    cb = c[q4:]
    wb_ = w[q4:]
    sc = s[2 * q4:]
    cc = c[2 * q4:]
    wc_ = w[2 * q4:]
    sd = s[3 * q4:]
    cd = c[3 * q4:]
    wd_ = w[3 * q4:]
    for j in range(q4):
        da = Si * c[j] - Ci * s[j]
        db = Si * cb[j] - Ci * sb[j]
        dc = Si * cc[j] - Ci * sc[j]
        dd = Si * cd[j] - Ci * sd[j]
        pab = da * db
        pcd = dc * dd
        r = 1.0 / (pab * pcd)
        rab = pcd * r
        rcd = pab * r
        ta = (Ci * c[j] + Si * s[j]) * (db * rab)
        tb = (Ci * cb[j] + Si * sb[j]) * (da * rab)
        tc = (Ci * cc[j] + Si * sc[j]) * (dd * rcd)
        td = (Ci * cd[j] + Si * sd[j]) * (dc * rcd)
        qa = ta * ta
        qb = tb * tb
        qc = tc * tc
        qd = td * td
        wa = w[j]
        wb = wb_[j]
        wc = wc_[j]
        wd = wd_[j]
        ua = wa + wa * qa
        ub = wb + wb * qb
        uc = wc + wc * qc
        ud = wd + wd * qd
        f0 += (wa * ta + wb * tb) + (wc * tc + wd * td)
        f1 += (ua + ub) + (uc + ud)
        f2 += (ua * ta + ub * tb) + (uc * tc + ud * td)
        f3 += (ua * qa + ub * qb) + (uc * qc + ud * qd)
    for j in range(4 * q4, n):
        t = (Ci * c[j] + Si * s[j]) / (Si * c[j] - Ci * s[j])
        q = t * t
        ww = w[j]
        u = ww + ww * q
        f0 += ww * t
        f1 += u
        f2 += u * t
        f3 += u * q
    return f0, f1, f2, f3


@nb.njit(**_SAFE)
def _far(y, s, c, w, lo, wl):
    """Background sums at y over poles outside the cyclic window [lo, lo+wl).

    Returns the background B and its first three derivatives.
    """
    n = s.shape[0]
    Si = math.sin(0.5 * y)
    Ci = math.cos(0.5 * y)
    h = lo + wl
    if h <= n:
        a0, a1, a2, a3 = _far_seg(Si, Ci, s[:lo], c[:lo], w[:lo])
        b0, b1, b2, b3 = _far_seg(Si, Ci, s[h:], c[h:], w[h:])
        f0 = a0 + b0
        f1 = a1 + b1
        f2 = a2 + b2
        f3 = a3 + b3
    else:
        f0, f1, f2, f3 = _far_seg(Si, Ci, s[h - n:lo], c[h - n:lo], w[h - n:lo])
    return f0, -0.5 * f1, 0.5 * f2, -0.25 * (f1 + 3.0 * f3)


# Far-field summation by an interpolative fast multipole method.
#
# The circle is split into 2**L equal leaves.  Each box carries source
# weights at FMM_P Chebyshev nodes (anterpolation of its poles), and a
# local field sampled at the same nodes.  cot((y - p)/2) depends only on
# y - p, so the source-to-local matrices depend only on the level and on
# the box offset, and are built once.  Interpolation error decays like
# (3 + sqrt 8)**(-FMM_P) for well-separated boxes.

FMM_P = 20
FMM_LMAX = 16
FMM_LEAF = 16


def _cheb_ops(p=FMM_P, lmax=FMM_LMAX):
    m = np.arange(p)
    x = np.cos((2 * m + 1) * np.pi / (2 * p))
    lam = (-1.0) ** m * np.sin((2 * m + 1) * np.pi / (2 * p))

    def basis(t):
        d = t[:, None] - x[None, :]
        r = lam[None, :] / d
        return r / r.sum(axis=1, keepdims=True)

    # transfer[0]: parent node m from left child node q, [1]: right child
    tr = np.empty((2, p, p))
    tr[0] = basis(0.5 * (x - 1.0)).T
    tr[1] = basis(0.5 * (x + 1.0)).T
    offs = np.array([-3.0, -2.0, 2.0, 3.0])
    m2l = np.zeros((lmax + 1, 4, p, p))
    for lev in range(2, lmax + 1):
        h = 2 * np.pi / 2 ** lev
        for io, o in enumerate(offs):
            z = -o * h + 0.5 * h * (x[:, None] - x[None, :])
            m2l[lev, io] = 1.0 / np.tan(0.5 * z)
    k = np.arange(p)
    dct = (2.0 / p) * np.cos(np.outer(k, (2 * m + 1) * np.pi / (2 * p)))
    dct[0] *= 0.5
    return x, lam, tr, m2l, dct


FMM_X, FMM_LAM, FMM_TR, FMM_M2L, FMM_DCT = _cheb_ops()


@nb.njit(**_SAFE)
def _cheb_deriv(cf, out):
    # coefficients of the x-derivative of a Chebyshev series
    p = cf.shape[0]
    out[p - 1] = 0.0
    if p > 1:
        out[p - 2] = 2.0 * (p - 1) * cf[p - 1]
    for k in range(p - 3, -1, -1):
        out[k] = out[k + 2] + 2.0 * (k + 1) * cf[k + 1]
    out[0] *= 0.5


@nb.njit(**_SAFE)
def _clenshaw(cf, x):
    b1 = 0.0
    b2 = 0.0
    for k in range(cf.shape[0] - 1, 0, -1):
        b1, b2 = 2.0 * x * b1 - b2 + cf[k], b1
    return x * b1 - b2 + cf[0]


@nb.njit(**_SAFE)
def fmm_level(N):
    lev = 2
    while lev < FMM_LMAX and (N >> lev) > FMM_LEAF:
        lev += 1
    return lev


@nb.njit(**_SAFE)
def fmm_build(P, w, lev, X, LAM, TR, M2L, DCT):
    """Local Chebyshev expansions of the far field on every leaf.

    Returns (leaf of each pole, first pole of each leaf, leaf
    coefficients with their first three x-derivatives).
    """
    N = P.shape[0]
    p = X.shape[0]
    nleaf = 1 << lev
    h = TWO_PI / nleaf
    leaf = np.empty(N, np.int64)
    start = np.zeros(nleaf + 1, np.int64)
    # box b at level l lives in row (1 << l) + b
    W = np.zeros((2 * nleaf, p))
    V = np.zeros((2 * nleaf, p))
    r = np.empty(p)
    for j in range(N):
        t = int(P[j] / h)
        if t >= nleaf:
            t = nleaf - 1
        leaf[j] = t
        start[t + 1] += 1
        xj = (P[j] - (t + 0.5) * h) / (0.5 * h)
        hit = -1
        tot = 0.0
        for q in range(p):
            d = xj - X[q]
            if d == 0.0:
                hit = q
                break
            r[q] = LAM[q] / d
            tot += r[q]
        row = nleaf + t
        if hit >= 0:
            W[row, hit] += w[j]
        else:
            sc = w[j] / tot
            for q in range(p):
                W[row, q] += r[q] * sc
    for t in range(nleaf):
        start[t + 1] += start[t]
    # upward pass
    for l in range(lev - 1, 1, -1):
        nb_ = 1 << l
        for i in range(nb_):
            row = nb_ + i
            c0 = 2 * nb_ + 2 * i
            for m in range(p):
                acc = 0.0
                for q in range(p):
                    acc += TR[0, m, q] * W[c0, q] + TR[1, m, q] * W[c0 + 1, q]
                W[row, m] = acc
    # interactions, then downward pass
    for l in range(2, lev + 1):
        nb_ = 1 << l
        for i in range(nb_):
            row = nb_ + i
            ip = i >> 1
            seen0 = -1
            seen1 = -1
            seen2 = -1
            for dp in range(-1, 2):
                pp = (ip + dp) % (nb_ >> 1)
                for ch in range(2):
                    j = 2 * pp + ch
                    o = (j - i) % nb_
                    if o == 0 or o == 1 or o == nb_ - 1:
                        continue
                    if j == seen0 or j == seen1 or j == seen2:
                        continue
                    if seen0 < 0:
                        seen0 = j
                    elif seen1 < 0:
                        seen1 = j
                    else:
                        seen2 = j
                    if o > nb_ // 2:
                        o -= nb_
                    if o == -3:
                        io = 0
                    elif o == -2:
                        io = 1
                    elif o == 2:
                        io = 2
                    else:
                        io = 3
                    src = nb_ + j
                    for m in range(p):
                        acc = 0.0
                        for q in range(p):
                            acc += M2L[l, io, m, q] * W[src, q]
                        V[row, m] += acc
        if l < lev:
            for i in range(nb_):
                row = nb_ + i
                c0 = 2 * nb_ + 2 * i
                for q in range(p):
                    a0 = 0.0
                    a1 = 0.0
                    for m in range(p):
                        a0 += TR[0, m, q] * V[row, m]
                        a1 += TR[1, m, q] * V[row, m]
                    V[c0, q] += a0
                    V[c0 + 1, q] += a1
    cf = np.empty((nleaf, 4, p))
    for t in range(nleaf):
        row = nleaf + t
        for k in range(p):
            acc = 0.0
            for m in range(p):
                acc += DCT[k, m] * V[row, m]
            cf[t, 0, k] = acc
        _cheb_deriv(cf[t, 0], cf[t, 1])
        _cheb_deriv(cf[t, 1], cf[t, 2])
        _cheb_deriv(cf[t, 2], cf[t, 3])
    return leaf, start, cf


@nb.njit(**_SAFE)
def _clenshaw4(cf, x):
    # the four series evaluated in one pass
    a1 = a2 = b1 = b2 = c1 = c2 = d1 = d2 = 0.0
    x2 = 2.0 * x
    for k in range(cf.shape[1] - 1, 0, -1):
        a1, a2 = x2 * a1 - a2 + cf[0, k], a1
        b1, b2 = x2 * b1 - b2 + cf[1, k], b1
        c1, c2 = x2 * c1 - c2 + cf[2, k], c1
        d1, d2 = x2 * d1 - d2 + cf[3, k], d1
    return (x * a1 - a2 + cf[0, 0], x * b1 - b2 + cf[1, 0],
            x * c1 - c2 + cf[2, 0], x * d1 - d2 + cf[3, 0])


@nb.njit(**_FAST)
def _seg4(Si, Ci, s, c, w, j0, j1):
    # plain loop over a contiguous range; vectorizes
    f0 = 0.0
    f1 = 0.0
    f2 = 0.0
    f3 = 0.0
    for j in range(j0, j1):
        t = (Ci * c[j] + Si * s[j]) / (Si * c[j] - Ci * s[j])
        q = t * t
        u = w[j] + w[j] * q
        f0 += w[j] * t
        f1 += u
        f2 += u * t
        f3 += u * q
    return f0, f1, f2, f3


@nb.njit(**_SAFE)
def _cyc4(Si, Ci, s, c, w, j0, L):
    # cyclic range [j0, j0 + L)
    N = s.shape[0]
    if j0 >= N:
        j0 -= N
    if j0 + L <= N:
        return _seg4(Si, Ci, s, c, w, j0, j0 + L)
    a0, a1, a2, a3 = _seg4(Si, Ci, s, c, w, j0, N)
    b0, b1, b2, b3 = _seg4(Si, Ci, s, c, w, 0, j0 + L - N)
    return a0 + b0, a1 + b1, a2 + b2, a3 + b3


@nb.njit(**_SAFE)
def _far_fmm(y, s, c, w, lo, wl, lev, leaf, start, cf):
    """Same as _far, with the leaf expansion replacing the distant poles."""
    N = s.shape[0]
    nleaf = 1 << lev
    h = TWO_PI / nleaf
    t = int(y / h)
    if t >= nleaf:
        t = nleaf - 1
    elif t < 0:
        t = 0
    x = (y - (t + 0.5) * h) / (0.5 * h)
    sc = 2.0 / h
    e0, e1, e2, e3 = _clenshaw4(cf[t], x)
    Si = math.sin(0.5 * y)
    Ci = math.cos(0.5 * y)
    # near leaves t-1..t+1 are one cyclic index range [A, A + LA)
    tl = t - 1 if t > 0 else nleaf - 1
    tr = t + 1 if t + 1 < nleaf else 0
    A = start[tl]
    LA = start[tl + 1] - A + start[t + 1] - start[t] + start[tr + 1] - start[tr]
    # near poles outside the window are added; window poles in distant
    # leaves are already inside the expansion and are removed
    f0 = f1 = f2 = f3 = 0.0
    g0 = g1 = g2 = g3 = 0.0
    d = lo - A
    if d < 0:
        d += N
    if LA + wl > N:
        f0, f1, f2, f3, g0, g1, g2, g3 = _near_slow(Si, Ci, s, c, w, lo, wl, t, nleaf, leaf, start)
    elif d + wl <= LA:
        # window inside the near range
        f0, f1, f2, f3 = _cyc4(Si, Ci, s, c, w, A, d)
        a0, a1, a2, a3 = _cyc4(Si, Ci, s, c, w, A + d + wl, LA - d - wl)
        f0 += a0
        f1 += a1
        f2 += a2
        f3 += a3
    elif d < LA:
        # window sticks out past the end of the near range
        f0, f1, f2, f3 = _cyc4(Si, Ci, s, c, w, A, d)
        g0, g1, g2, g3 = _cyc4(Si, Ci, s, c, w, A + LA, d + wl - LA)
    elif d + wl > N:
        # window starts before the near range
        e = d + wl - N
        if e > LA:
            e = LA
        f0, f1, f2, f3 = _cyc4(Si, Ci, s, c, w, A + e, LA - e)
        g0, g1, g2, g3 = _cyc4(Si, Ci, s, c, w, lo, N - d)
        if d + wl - N > LA:
            b0, b1, b2, b3 = _cyc4(Si, Ci, s, c, w, A + LA, d + wl - N - LA)
            g0 += b0
            g1 += b1
            g2 += b2
            g3 += b3
    else:
        # disjoint
        f0, f1, f2, f3 = _cyc4(Si, Ci, s, c, w, A, LA)
        g0, g1, g2, g3 = _cyc4(Si, Ci, s, c, w, lo, wl)
    f0 -= g0
    f1 -= g1
    f2 -= g2
    f3 -= g3
    return (e0 + f0, e1 * sc - 0.5 * f1, e2 * sc * sc + 0.5 * f2,
            e3 * sc * sc * sc - 0.25 * (f1 + 3.0 * f3))


@nb.njit(**_SAFE)
def _near_slow(Si, Ci, s, c, w, lo, wl, t, nleaf, leaf, start):
    # membership tests pole by pole, for ranges that overlap twice
    N = s.shape[0]
    f = np.zeros(8)
    for dt in range(-1, 2):
        u = (t + dt) % nleaf
        for j in range(start[u], start[u + 1]):
            if (j - lo) % N >= wl:
                tt = (Ci * c[j] + Si * s[j]) / (Si * c[j] - Ci * s[j])
                qq = tt * tt
                uu = w[j] + w[j] * qq
                f[0] += w[j] * tt
                f[1] += uu
                f[2] += uu * tt
                f[3] += uu * qq
    for q in range(wl):
        j = (lo + q) % N
        dl = (leaf[j] - t) % nleaf
        if dl > 1 and dl < nleaf - 1:
            tt = (Ci * c[j] + Si * s[j]) / (Si * c[j] - Ci * s[j])
            qq = tt * tt
            uu = w[j] + w[j] * qq
            f[4] += w[j] * tt
            f[5] += uu
            f[6] += uu * tt
            f[7] += uu * qq
    return f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7]


@nb.njit(**_SAFE)
def _cycdist(x, p):
    d = abs(x - p) % TWO_PI
    return min(d, TWO_PI - d)


@nb.njit(**_FAST)
def _window_sum(S, C, ls, lc, lw, j0, j1):
    r = 0.0
    rp = 0.0
    for j in range(j0, j1):
        t = (C * lc[j] + S * ls[j]) / (S * lc[j] - C * ls[j])
        r += lw[j] * t
        rp += lw[j] * (1.0 + t * t)
    return r, -0.5 * rp


@nb.njit(**_SAFE)
def _wrapdiff(y, p):
    """y - p reduced to [-pi, pi], accurate relative to the result.

    Across the seam the rounded 2 pi would cost 4e-16 absolute; the
    larger operand is at least pi there, so it minus TWO_PI is exact
    and the low part of 2 pi is added separately.
    """
    d = y - p
    if d > math.pi:
        d = ((y - TWO_PI) - TWO_PI_LO) - p
    elif d < -math.pi:
        d = ((TWO_PI - p) + TWO_PI_LO) + y
    return d


@nb.njit(**_SAFE)
def _close_sum(y, lp, lw, j0, j1):
    # poles within CLOSE of the interval: the addition formula would lose
    # ulp/|y - p| here, so use the difference directly
    r = 0.0
    rp = 0.0
    for j in range(j0, j1):
        t = 1.0 / math.tan(0.5 * _wrapdiff(y, lp[j]))
        r += lw[j] * t
        rp += lw[j] * (1.0 + t * t)
    return r, -0.5 * rp


CLOSE = 1e-5


@nb.njit(**_SAFE)
def _gather(lo, wl, ia, ib, P, s, c, w, ls, lc, lp, lw):
    """Copy the window poles other than ia, ib into contiguous buffers.

    Poles preceding ia in cyclic window order come first.  Returns the
    count, the number of those left-hand poles, and how many poles at
    the inner end of each side lie within CLOSE of the interval.
    """
    n = s.shape[0]
    m = 0
    ml = -1
    for q in range(wl):
        j = lo + q
        if j >= n:
            j -= n
        if j == ia:
            ml = m
            continue
        if j == ib:
            continue
        ls[m] = s[j]
        lc[m] = c[j]
        lw[m] = w[j]
        lp[m] = P[j]
        m += 1
    if ml < 0:
        ml = m
    a = P[ia]
    b = P[ib] if ib > ia else TWO_PI
    cl = 0
    while cl < ml and _cycdist(lp[ml - 1 - cl], a) < CLOSE:
        cl += 1
    cr = 0
    while ml + cr < m and _cycdist(lp[ml + cr], b) < CLOSE:
        cr += 1
    return m, ml, cl, cr


@nb.njit(**_SAFE)
def _two_pole_root(g, wa, wb, r, near_b):
    """Root in (a, b) of wa cot((z-a)/2) + wb cot((z-b)/2) + r = 0.

    With k = cot((b-a)/2) and u = cot((z-a)/2) this is the quadratic
    wa u^2 - (k (wa+wb) - r) u - (wb + r k) = 0, whose root with u > k
    is wanted.  Near b that form loses the distance to b, so there the
    mirrored quadratic in v = cot((z-b)/2),
    wb v^2 + (k (wa+wb) + r) v + (r k - wa) = 0 with root v < -k, is used.
    """
    k = g[9] / g[8]
    if near_b:
        bq = k * (wa + wb) + r
        cq = r * k - wa
        sq = math.sqrt(max(bq * bq - 4.0 * wb * cq, 0.0))
        if bq >= 0.0:
            v = -(bq + sq) / (2.0 * wb)
        else:
            v = 2.0 * cq / (sq - bq)
        return g[1] + 2.0 * math.atan2(-1.0, -v)
    bq = k * (wa + wb) - r
    cq = wb + r * k
    sq = math.sqrt(max(bq * bq + 4.0 * wa * cq, 0.0))
    if bq >= 0.0:
        u = (bq + sq) / (2.0 * wa)
    else:
        u = -2.0 * cq / (bq - sq)
    return g[0] + 2.0 * math.atan2(1.0, u)


@nb.njit(**_SAFE)
def _ulp(y):
    return EPS * max(abs(y), 1e-300)


@nb.njit(**_SAFE)
def _solve(y0, g, ls, lc, lp, lw, m, ml, cl, cr, beta, xc, B0, B1, B2, B3, rtol):
    """Root of the local model inside (a, b).

    The model is the exact sum over the gathered window poles plus the
    background cubic about xc.  Each step replaces everything except the
    two bounding poles by a two-pole surrogate: the left-hand rest is
    absorbed into an extra weight on the pole at a, the right-hand rest
    into one on b (each matching value and slope at the iterate), and
    the surrogate root is found in closed form.  This is a Newton-class
    step that also models the singularities.  g holds the interval
    geometry: a, b, wa, wb, the half-angle sine/cosine of a and of b,
    and of the half-width.

    Returns (root, model slope at root, evaluations, status).
    """
    a = g[0]
    b = g[1]
    wa = g[2]
    wb = g[3]
    sL = g[8]
    cL = g[9]
    lo_y = a
    hi_y = b
    y = y0
    if not (a < y < b):
        y = 0.5 * (a + b)
    status = NO_CONVERGENCE
    Mp = -1.0
    it = 0
    for it in range(1, 100):
        if y - a <= b - y:
            ha = 0.5 * (y - a)
            sa = math.sin(ha)
            ca = math.cos(ha)
            sb = sL * ca - cL * sa
            cb = cL * ca + sL * sa
            S = g[4] * ca + g[5] * sa
            C = g[5] * ca - g[4] * sa
        else:
            hb = 0.5 * (b - y)
            sb = math.sin(hb)
            cb = math.cos(hb)
            sa = sL * cb - cL * sb
            ca = cL * cb + sL * sb
            S = g[6] * cb - g[7] * sb
            C = g[7] * cb + g[6] * sb
        rl, rpl = _window_sum(S, C, ls, lc, lw, 0, ml - cl)
        rr, rpr = _window_sum(S, C, ls, lc, lw, ml + cr, m)
        if cl + cr > 0:
            ql, qpl = _close_sum(y, lp, lw, ml - cl, ml)
            qr, qpr = _close_sum(y, lp, lw, ml, ml + cr)
            rl += ql
            rpl += qpl
            rr += qr
            rpr += qpr
        d = y - xc
        tb = B0 + d * (B1 + d * (0.5 * B2 + d * B3 / 6.0)) - beta
        tbp = B1 + d * (B2 + 0.5 * d * B3)
        cota = ca / sa
        cotb = -cb / sb
        csa = 1.0 / (sa * sa)
        csb = 1.0 / (sb * sb)
        r = rl + rr + tb
        f = wa * cota + wb * cotb + r
        Mp = rpl + rpr + tbp - 0.5 * (wa * csa + wb * csb)
        if not (math.isfinite(f) and math.isfinite(Mp)):
            status = NONFINITE
            break
        if f > 0.0:
            lo_y = y
        elif f < 0.0:
            hi_y = y
        else:
            status = OK
            break
        # split the smooth rest between the two poles by slope
        da = -2.0 * (rpl + 0.5 * tbp) * sa * sa
        db = -2.0 * (rpr + 0.5 * tbp) * sb * sb
        if da < 0.0:
            db += da * csa * sb * sb
            da = 0.0
        if db < 0.0:
            da += db * csb * sa * sa
            db = 0.0
        if da < 0.0:
            da = 0.0
        e = r - da * cota - db * cotb
        yn = _two_pole_root(g, wa + da, wb + db, e, y - a > b - y)
        tol = max(rtol * (b - a), 2.0 * _ulp(y))
        if abs(yn - y) <= max(tol, 8.0 * _ulp(y)):
            # steps at the rounding level of the surrogate: converged
            if lo_y <= yn <= hi_y:
                y = yn
            status = OK
            break
        newton = lo_y < yn < hi_y
        if not newton:
            yn = 0.5 * (lo_y + hi_y)
        step = abs(yn - y)
        y = yn
        if hi_y - lo_y <= 4.0 * _ulp(y):
            status = OK
            break
        if newton:
            # quadratic convergence: the next correction is about step^2 / dist
            kappa = 10.0 / min(y - a, b - y)
            if step <= tol or kappa * step * step <= tol:
                status = OK
                break
    if y <= a:
        y = np.nextafter(a, b)
    elif y >= b:
        y = np.nextafter(b, a)
    return y, Mp, it, status


@nb.njit(**_SAFE)
def _geometry(k, P, s, c, w, g):
    N = P.shape[0]
    a = P[k]
    if k + 1 < N:
        ib = k + 1
        b = P[k + 1]
        sb2 = s[ib]
        cb2 = c[ib]
    else:
        ib = 0
        b = TWO_PI
        sb2 = 0.0
        cb2 = -1.0
    hw = 0.5 * (b - a)
    g[0] = a
    g[1] = b
    g[2] = w[k]
    g[3] = w[ib]
    g[4] = s[k]
    g[5] = c[k]
    g[6] = sb2
    g[7] = cb2
    g[8] = math.sin(hw)
    g[9] = math.cos(hw)
    return ib


FMM_MIN = 640
FMM_ABS = 2e-13  # bound on the expansion error of the background, per unit weight


def sweep(P, w, beta, K, roots, info, fmm_min=FMM_MIN):
    """Solve F = 0 on every interval; roots[k] lies in (P_k, P_{k+1}).

    info (7 slots) receives [far evaluations, model evaluations, status,
    failing interval, predictor evaluations, background re-evaluations,
    intervals solved with the exact sum].  Above
    fmm_min poles the background comes from the fast multipole
    expansion.  Returns the status (0 on success).
    """
    return _sweep(P, w, beta, K, roots, info, P.shape[0] > fmm_min,
                  FMM_X, FMM_LAM, FMM_TR, FMM_M2L, FMM_DCT)


@nb.njit(**_SAFE)
def _sweep(P, w, beta, K, roots, info, use_fmm, X, LAM, TR, M2L, DCT):
    N = P.shape[0]
    s = np.sin(0.5 * P)
    c = np.cos(0.5 * P)
    wtot = 0.0
    for j in range(N):
        wtot += w[j]
    full = N <= 2 * K + 2
    wl = N if full else 2 * K + 2
    g = np.empty(10)
    ls = np.empty(wl)
    lc = np.empty(wl)
    lw = np.empty(wl)
    lp = np.empty(wl)
    # buffers for intervals that need the exact sum
    fs = np.empty(N)
    fc = np.empty(N)
    fw = np.empty(N)
    fp = np.empty(N)
    nfar = 0
    nit = 0
    have = False
    plo = 0
    pxc = 0.0
    pB0 = 0.0
    pB1 = 0.0
    pB2 = 0.0
    pB3 = 0.0
    B0 = 0.0
    B1 = 0.0
    B2 = 0.0
    B3 = 0.0
    lev = fmm_level(N)
    if use_fmm and not full:
        leaf, start, cf = fmm_build(P, w, lev, X, LAM, TR, M2L, DCT)
    else:
        use_fmm = False
        leaf = np.zeros(1, np.int64)
        start = np.zeros(1, np.int64)
        cf = np.zeros((1, 4, 1))
    for k in range(N):
        ib = _geometry(k, P, s, c, w, g)
        if not (g[0] < 0.5 * (g[0] + g[1]) < g[1]):
            info[2] = UNREPRESENTABLE
            info[3] = k
            return UNREPRESENTABLE
        guess = g[0] + (g[1] - g[0]) * g[2] / (g[2] + g[3])
        if full:
            m, ml, cl, cr = _gather(0, N, k, ib, P, s, c, w, ls, lc, lp, lw)
            y, Mp, it, st = _solve(guess, g, ls, lc, lp, lw, m, ml, cl, cr, beta, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
            nit += it
            if st != OK:
                info[2] = st
                info[3] = k
                return st
            roots[k] = y
            continue
        lo = k - K
        if lo < 0:
            lo += N
        y1 = guess
        if have:
            m, ml, cl, cr = _gather(plo, wl, k, ib, P, s, c, w, ls, lc, lp, lw)
            yp, Mp, it, st = _solve(guess, g, ls, lc, lp, lw, m, ml, cl, cr, beta, pxc, pB0, pB1, pB2, pB3, 1e-3)
            nit += it
            info[4] += it
            if st == OK:
                y1 = yp
        m, ml, cl, cr = _gather(lo, wl, k, ib, P, s, c, w, ls, lc, lp, lw)
        wwin = g[2] + g[3]
        for j in range(m):
            wwin += lw[j]
        wbg = max(wtot - wwin, 0.0)
        jl = lo - 1
        if jl < 0:
            jl += N
        jr = lo + wl
        if jr >= N:
            jr -= N
        xc = y1
        y = y1
        st = NO_CONVERGENCE
        certified = False
        dl = 1.0
        direct = not use_fmm
        for attempt in range(8):
            if direct:
                B0, B1, B2, B3 = _far(xc, s, c, w, lo, wl)
            else:
                B0, B1, B2, B3 = _far_fmm(xc, s, c, w, lo, wl, lev, leaf, start, cf)
            nfar += 1
            y, Mp, it, st = _solve(y, g, ls, lc, lp, lw, m, ml, cl, cr, beta, xc, B0, B1, B2, B3, 0.0)
            nit += it
            if st != OK:
                break
            if not direct and FMM_ABS * wtot > 2.0 * _ulp(y) * abs(Mp):
                # the expansion error could move this root by more than two
                # ulps (roots very close to 0): sum the background directly
                direct = True
                xc = y
                continue
            dl = abs(y - xc)
            if dl == 0.0:
                break
            dmin = min(_cycdist(xc, P[jl]), _cycdist(xc, P[jr])) - dl
            if dmin > 0.0:
                cs = 1.0 / math.sin(min(0.5 * dmin, 0.5 * math.pi))
                cs2 = cs * cs
                rem = 1.5 * wbg * cs2 * cs2 * cs * dl ** 4 / 24.0
                if rem <= 2.0 * _ulp(y) * abs(Mp):
                    certified = True
                    break
            xc = y
        if st == OK and dl == 0.0:
            certified = True
        if not certified:
            # far poles too close for the Taylor model: sum every pole
            m, ml, cl, cr = _gather(0, N, k, ib, P, s, c, w, fs, fc, fp, fw)
            y, Mp, it, st = _solve(y, g, fs, fc, fp, fw, m, ml, cl, cr, beta, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
            nit += it
            info[6] += 1
        if st != OK:
            info[2] = st
            info[3] = k
            return st
        roots[k] = y
        have = True
        plo = lo
        pxc = xc
        pB0 = B0
        pB1 = B1
        pB2 = B2
        pB3 = B3
    info[0] = nfar
    info[1] = nit
    info[5] = nfar - (N if not full else 0)
    info[2] = OK
    info[3] = -1
    return OK


@nb.njit(**_SAFE)
def secular_full(y, P, w, beta):
    """F(y) and F'(y) summed directly over all poles (reference path)."""
    f = -beta
    fp = 0.0
    for j in range(P.shape[0]):
        t = 1.0 / math.tan(0.5 * _wrapdiff(y, P[j]))
        f += w[j] * t
        fp -= 0.5 * w[j] * (1.0 + t * t)
    return f, fp

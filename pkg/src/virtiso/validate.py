"""Cross-module invariant suites.

Each suite returns a SuiteResult; `run_suites` runs them in order.  The
suites are shared by ``virtiso validate`` and the test suite.
"""
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .builder import _extend_matrix, build, det_identity_factors, product_form
from .errors import InvariantError
from .linalg import charpoly_eval, det, eigenangles, pad_identity, unitarity_defect, unitary_tol
from .measures import MeasureSpec, replica_rng, sample_vectors
from .projections import one_step_project, project, rank_distance

LEVELS = {
    "quick": dict(chains=5, chain_n=24, triples=10, rank_samples=20, det_n=32, det_seeds=5,
                  coupled_seeds=10, coupled_n=16, runs=4, run_n=512),
    "full": dict(chains=20, chain_n=40, triples=50, rank_samples=50, det_n=64, det_seeds=20,
                 coupled_seeds=50, coupled_n=16, runs=20, run_n=2048),
}
SUITES = ("unitarity", "projection", "product_form", "determinant", "coupled_path", "interlacing")


@dataclass
class SuiteResult:
    name: str
    ok: bool
    worst: float = 0.0
    detail: str = ""
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    def line(self):
        flag = "PASS" if self.ok else "FAIL"
        return f"{flag} {self.name:<13} worst={self.worst:.3g} {self.detail} ({self.seconds:.1f} s)"


def _haar_chain(seed, n, fault=None):
    xs = sample_vectors(MeasureSpec("haar"), n, replica_rng(seed, 0))
    us = []
    st = build(xs[:1])
    us.append(st.u)
    u = st.u
    for x in xs[1:]:
        u = _extend_matrix(u, x)
        us.append(u)
    if fault == "unitarity":
        us[-1] = us[-1].copy()
        us[-1][:, 0] *= 1.0 + 1e-6
    return xs, us


def suite_unitarity(cfg, seed, fault=None):
    worst = 0.0
    for c in range(cfg["chains"]):
        _, us = _haar_chain(seed + c, cfg["chain_n"], fault)
        for u in us:
            worst = max(worst, unitarity_defect(u) / unitary_tol(u.shape[0]))
    return SuiteResult("unitarity", worst <= 1.0, worst, "defect / (n 1e-12)")


def suite_projection(cfg, seed, fault=None):
    worst = 0.0
    for c in range(cfg["chains"]):
        _, us = _haar_chain(seed + c, cfg["chain_n"], fault)
        for a, b in zip(us[:-1], us[1:]):
            worst = max(worst, float(np.max(np.abs(one_step_project(b, check=False) - a))))
    rng = replica_rng(seed, 1)
    for _ in range(cfg["triples"]):
        n = int(rng.integers(3, 11))
        m = int(rng.integers(2, n))
        p = int(rng.integers(1, m))
        u = _haar_chain(int(rng.integers(2**32)), n)[1][-1]
        worst = max(worst, float(np.max(np.abs(project(project(u, m), p) - project(u, p)))))
    ok = worst <= 1e-9
    bad_rank = 0
    for _ in range(cfg["rank_samples"]):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(1, n))
        u = _haar_chain(int(rng.integers(2**32)), n)[1][-1]
        if rank_distance(u, pad_identity(project(u, m), n)) != n - m:
            bad_rank += 1
    return SuiteResult("projection", ok and bad_rank == 0, worst, f"rank mismatches={bad_rank}")


def suite_product_form(cfg, seed, fault=None):
    worst = 0.0
    for c in range(cfg["chains"]):
        xs, us = _haar_chain(seed + 100 + c, cfg["chain_n"], fault)
        n = len(xs)
        worst = max(worst, float(np.max(np.abs(product_form(xs) - us[-1]))) / (n * 1e-11))
    return SuiteResult("product_form", worst <= 1.0, worst, "error / (n 1e-11)")


def determinant_errors(kind, n, seed, **kw):
    """Relative error of det(Id - u_n) against the product of 1 - x_k[-1].

    A vanishing product (Ewens paths with a new cycle) is compared in
    absolute terms.
    """
    spec = MeasureSpec(kind, seed=seed, **kw)
    st = build(sample_vectors(spec, n, spec.rng(0)))
    d = det(np.eye(n) - st.u)
    f = complex(np.prod(det_identity_factors(st.xs)))
    return abs(d - f) / (abs(f) if f != 0 else 1.0)


def suite_determinant(cfg, seed, fault=None):
    worst = 0.0
    for kind, kw in (("haar", {}), ("hua_pickrell", {"delta": 0.7 + 0.3j}), ("ewens", {"theta": 1.5})):
        for s in range(cfg["det_seeds"]):
            for n in (1, cfg["det_n"] // 4, cfg["det_n"]):
                spec_seed = seed * 1000 + s
                worst = max(worst, determinant_errors(kind, n, spec_seed, **kw))
    return SuiteResult("determinant", worst <= 1e-8, worst, "relative")


def coupled_path(seed, n_max=16):
    """Spectral flow driven by matrix-derived step parameters vs the matrix path.

    Returns (max charpoly residual at the spectral roots, max angle
    difference to the eigenangles of the built matrix).
    """
    xs = sample_vectors(MeasureSpec("haar"), n_max, replica_rng(seed, 0))
    st = build(xs[:1])
    spec = sp.SpectralState(1, eigenangles(st.u))
    worst_res = 0.0
    worst_ang = 0.0
    for x in xs[1:]:
        p = sp.spectral_params_from_matrix(st, x, spec.angles)
        st_next = build(list(st.xs) + [x])
        spec = sp.advance(spec, p)
        u = st_next.u
        for e in spec.angles:
            z = complex(math.cos(e), math.sin(e))
            worst_res = max(worst_res, abs(charpoly_eval(u, z)))
        ref = eigenangles(u)
        worst_ang = max(worst_ang, float(np.max(np.abs(ref - spec.angles))))
        st = st_next
    return worst_res, worst_ang


def suite_coupled_path(cfg, seed, fault=None):
    res = ang = 0.0
    for s in range(cfg["coupled_seeds"]):
        r, a = coupled_path(seed * 1000 + s, cfg["coupled_n"])
        res, ang = max(res, r), max(ang, a)
    return SuiteResult("coupled_path", res < 1e-7 and ang < 1e-7, res, f"max angle diff={ang:.3g}")


def suite_interlacing(cfg, seed, fault=None):
    bad = 0
    for r in range(cfg["runs"]):
        try:
            sp.run_haar_spectral(cfg["run_n"], [1], replica_rng(seed, 10 + r))
        except InvariantError:
            bad += 1
    return SuiteResult("interlacing", bad == 0, float(bad), f"failed runs={bad}/{cfg['runs']}")


_SUITE_FUNCS = {
    "unitarity": suite_unitarity,
    "projection": suite_projection,
    "product_form": suite_product_form,
    "determinant": suite_determinant,
    "coupled_path": suite_coupled_path,
    "interlacing": suite_interlacing,
}


def run_suites(level="quick", seed=0, fault=None, names=SUITES, log=None):
    """Run the named suites; `fault` = "unitarity" corrupts the built chains."""
    cfg = LEVELS[level]
    out = []
    for name in names:
        t0 = time.perf_counter()
        try:
            r = _SUITE_FUNCS[name](cfg, int(seed), fault)
        except Exception as exc:  # a crash is a failure of that suite
            r = SuiteResult(name, False, math.inf, f"{type(exc).__name__}: {exc}")
        r.seconds = time.perf_counter() - t0
        out.append(r)
        if log is not None:
            log(r.line())
    return out

"""Command-line front end: ``virtiso {sample,track,stats,validate,bench,replay}``.

Every command writes its outputs plus a ``manifest.json`` into ``--out``;
``virtiso replay manifest.json`` reruns it with identical bytes.  Replicas
run in a process pool (``--threads``, default ``$VIRTISO_THREADS`` or the
available cores) and are merged by replica index.

Exit codes: 0 success, 2 invalid arguments, 3 numerical failure (an
error record with the reproduction manifest is written), 4 validation
failure.
"""
import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import asymptotics as asy
from . import spectral as sp
from .builder import build, permutation_from_indices
from .errors import BracketError, InvariantError, UnsupportedParameterError
from .linalg import eigenangles
from .measures import MeasureSpec, capacity_estimate, replica_rng, sample_ewens_indices, sample_vectors

SCHEMA_VERSION = 1
THREADS_ENV = "VIRTISO_THREADS"
EXIT_OK, EXIT_ARGS, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4
TRACK_COLUMNS = ("n", "k", "theta", "rescaled", "gamma", "rho", "psi", "min_gap", "max_gap", "gamma_max")


class CliError(Exception):
    """Bad arguments or inputs (exit code 2)."""


class NumericalFailure(Exception):
    """A run failed numerically (exit code 3)."""

    def __init__(self, message, record):
        super().__init__(message)
        self.record = record


@dataclass
class RunManifest:
    command: str
    params: dict
    seed: int
    version: str = __version__
    schema_version: int = SCHEMA_VERSION
    outputs: list = field(default_factory=list)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        if d.get("schema_version") != SCHEMA_VERSION:
            raise CliError(f"manifest schema {d.get('schema_version')} is not {SCHEMA_VERSION}")
        return cls(d["command"], d["params"], int(d["seed"]), d.get("version", ""), d["schema_version"],
                   d.get("outputs", []))


# serialization

def fmt(v):
    """17 significant digits, round-trip exact for doubles."""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def csv_text(header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def read_csv(path, required):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        missing = [c for c in required if c not in header]
        if missing:
            raise CliError(f"{path}: schema mismatch, missing columns {missing}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2) if os.path.getsize(path) > 0 else np.empty((0, len(header)))
    if data.size == 0:
        data = data.reshape(0, len(header))
    return {c: data[:, i] for i, c in enumerate(header)}


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o))


def json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default, allow_nan=True) + "\n"


# parallel map

def default_threads():
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"{THREADS_ENV} must be an integer, got {env!r}")
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def pmap(fn, items, threads):
    """Ordered map; results are returned by input index."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))


# sample

def _sample_replica(args):
    spec_d, n_max, r = args
    spec = MeasureSpec(**spec_d)
    rng = spec.rng(r)
    if spec.kind == "ewens":
        idx = sample_ewens_indices(n_max, spec.theta, rng)
        xs = None
        perm = permutation_from_indices(idx)
        lengths = [len(c) for c in perm.cycles]
        st = None
    else:
        idx = None
        xs = sample_vectors(spec, n_max, rng)
        st = build(xs)
        lengths = None
    if st is None:
        from .builder import permutation_matrix
        u = permutation_matrix(perm)
        factors = np.array([0.0 if i == k else 1.0 for k, i in enumerate(idx, start=1)], dtype=complex)
    else:
        u = st.u
        factors = np.array([1.0 - complex(x[-1]) for x in xs])
    summ = {"replica": r, "n": n_max}
    for p in (1, 2, 3):
        t = complex(np.trace(np.linalg.matrix_power(u, p)))
        summ[f"tr{p}_re"], summ[f"tr{p}_im"] = t.real, t.imag
    with np.errstate(divide="ignore"):
        ld = complex(np.sum(np.log(factors))) if np.all(factors != 0) else complex(-math.inf, 0.0)
    summ["logdet_re"], summ["logdet_im"] = ld.real, ld.imag
    return {"replica": r, "xs": xs, "indices": idx, "factors": factors, "summary": summ, "cycles": lengths}


def cmd_sample(p, out):
    spec = _measure(p)
    if p["n_max"] < 1 or p["replicas"] < 1:
        raise CliError("--n-max and --replicas must be positive")
    sd = {"kind": spec.kind, "delta": [spec.delta.real, spec.delta.imag], "theta": spec.theta, "seed": spec.seed}
    jobs = [({"kind": spec.kind, "delta": spec.delta, "theta": spec.theta, "seed": spec.seed}, p["n_max"], r)
            for r in range(p["replicas"])]
    res = pmap(_sample_replica, jobs, p["threads"])
    files = []
    if p["format"] == "json":
        doc = {"measure": sd, "replicas": []}
        for r in res:
            item = {"replica": r["replica"], "summary": r["summary"], "det_factors": r["factors"]}
            if r["xs"] is not None:
                item["vectors"] = [[[z.real, z.imag] for z in x] for x in r["xs"]]
            else:
                item["indices"] = r["indices"]
                item["cycle_lengths"] = r["cycles"]
            doc["replicas"].append(item)
        write_text(os.path.join(out, "sample.json"), json_text(doc))
        return ["sample.json"], EXIT_OK
    if spec.kind == "ewens":
        rows = [(r["replica"], k, i) for r in res for k, i in enumerate(r["indices"], start=1)]
        write_text(os.path.join(out, "indices.csv"), csv_text(("replica", "k", "index"), rows))
        files.append("indices.csv")
    else:
        rows = [(r["replica"], k, j, z.real, z.imag)
                for r in res for k, x in enumerate(r["xs"], start=1) for j, z in enumerate(x, start=1)]
        write_text(os.path.join(out, "vectors.csv"), csv_text(("replica", "k", "j", "re", "im"), rows))
        files.append("vectors.csv")
    rows = [(r["replica"], k, f.real, f.imag) for r in res for k, f in enumerate(r["factors"], start=1)]
    write_text(os.path.join(out, "det_factors.csv"), csv_text(("replica", "k", "re", "im"), rows))
    keys = list(res[0]["summary"])
    write_text(os.path.join(out, "summary.csv"), csv_text(keys, [[r["summary"][c] for c in keys] for r in res]))
    return files + ["det_factors.csv", "summary.csv"], EXIT_OK


# track

def track_rows(run):
    rows = []
    for i, n in enumerate(run.n):
        for k in run.indices:
            th = run.theta[k][i]
            rows.append((int(n), k, th, n * th / sp.TWO_PI, run.gamma[k][i], run.rho[i], run.psi[i],
                         run.min_gap[i], run.max_gap[i], run.gamma_max[i]))
    return rows


def _track_replica(args):
    seed, n_max, indices, r = args
    try:
        run = sp.run_haar_spectral(n_max, indices, replica_rng(seed, r))
        return {"replica": r, "rows": track_rows(run), "error": None,
                "audit": {"interlacing": "pass"}}
    except (BracketError, InvariantError) as exc:
        err = {"replica": r, "seed": seed, "step": getattr(exc, "step", None), "type": type(exc).__name__,
               "message": str(exc)}
        if isinstance(exc, BracketError):
            err["interval"] = exc.interval
            err["dump"] = exc.dump
        part = getattr(exc, "partial", None)
        rows = track_rows(part) if part is not None else []
        return {"replica": r, "rows": rows, "error": err, "audit": {"interlacing": "fail"}}


def parse_indices(text):
    try:
        vals = [int(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError:
        raise CliError(f"--indices must be a comma list of integers, got {text!r}")
    if not vals:
        raise CliError("--indices is empty")
    return vals


def cmd_track(p, out):
    if p["n_max"] < 1 or p["replicas"] < 1:
        raise CliError("--n-max and --replicas must be positive")
    idx = parse_indices(p["indices"])
    jobs = [(p["seed"], p["n_max"], idx, r) for r in range(p["replicas"])]
    res = pmap(_track_replica, jobs, p["threads"])
    files = []
    errors = []
    audit = []
    for r in res:
        name = f"track_{r['replica']:04d}.csv"
        write_text(os.path.join(out, name), csv_text(TRACK_COLUMNS, r["rows"]))
        files.append(name)
        audit.append({"replica": r["replica"], **r["audit"]})
        if r["error"] is not None:
            errors.append(r["error"])
    write_text(os.path.join(out, "audit.json"), json_text({"replicas": audit}))
    files.append("audit.json")
    if errors:
        write_text(os.path.join(out, "errors.json"), json_text({"errors": errors}))
        files.append("errors.json")
        return files, EXIT_NUMERIC
    return files, EXIT_OK


# stats

def _track_inputs(paths):
    if not paths:
        raise CliError("this statistic needs --inputs (track CSV files or directories)")
    files = []
    for path in paths:
        if os.path.isdir(path):
            files.extend(sorted(os.path.join(path, f) for f in os.listdir(path)
                                if f.startswith("track_") and f.endswith(".csv")))
        elif os.path.exists(path):
            files.append(path)
        else:
            raise CliError(f"input {path} does not exist")
    if not files:
        raise CliError("no track CSV files found in --inputs")
    return [read_csv(f, TRACK_COLUMNS) for f in files]


def _trajectories(tables):
    out = []
    for rep, tab in enumerate(tables):
        for k in np.unique(tab["k"]).astype(int):
            m = tab["k"] == k
            out.append((rep, int(k), asy.Trajectory(k, tab["n"][m].astype(int), tab["theta"][m], tab["gamma"][m])))
    return out


def _stats_rate(p):
    if p["synthetic"] == "planted":
        n = np.arange(1, p["n_max"] + 1)
        r = 1.0 + n ** (-p["exponent"])
        trajs = [(0, 1, asy.Trajectory(1, n, sp.TWO_PI * r / n, np.full(n.size, np.nan)))]
    elif p["synthetic"]:
        raise CliError("rate supports --synthetic planted")
    else:
        trajs = _trajectories(_track_inputs(p["inputs"]))
    items = []
    for rep, k, t in trajs:
        est = asy.limit_estimate(t)
        item = {"input": rep, "k": k, "x_hat": est.x_hat,
                "eps_hat": None if est.below_resolution else est.eps_hat,
                "below_resolution": est.below_resolution}
        if np.all(np.isfinite(t.gamma[:-1])) and t.n[0] == 1 and len(t) >= 4:
            lo = max(1, int(t.n[-1]) // 4)
            item["identity_range"] = asy.identity_range(t, lo, int(t.n[-1]))
        items.append(item)
    eps = [i["eps_hat"] for i in items if i["eps_hat"] is not None]
    rep = {"trajectories": items, "median_eps_hat": float(np.median(eps)) if eps else None}
    if p["synthetic"] == "planted":
        rep["planted_exponent"] = p["exponent"]
    return rep


def _stats_event_e(p):
    tables = _track_inputs(p["inputs"])
    runs = []
    for tab in tables:
        k0 = tab["k"][0]
        m = tab["k"] == k0
        runs.append(_Records(tab["n"][m].astype(int), tab["rho"][m], tab["gamma_max"][m], tab["min_gap"][m],
                             tab["max_gap"][m]))
    lens = {r.n.size for r in runs}
    if len(lens) != 1:
        raise CliError("event-e inputs must share one n-grid")
    rep = asy.event_e_diagnostics(runs)
    out = {name: {**r.summary(), "n": r.n, "frequency": r.frequency} for name, r in rep.items()}
    out["rho"]["theory_tail"] = asy.rho_tail(rep["rho"].n)
    out["gamma"]["theory_union_bound"] = asy.gamma_tail_union(rep["gamma"].n)
    return out


@dataclass
class _Records:
    n: np.ndarray
    rho: np.ndarray
    gamma_max: np.ndarray
    min_gap: np.ndarray
    max_gap: np.ndarray


def _points_inputs(paths):
    samples = {}
    for path in paths:
        tab = read_csv(path, ("sample", "x"))
        for s, x in zip(tab["sample"].astype(int), tab["x"]):
            samples.setdefault(s, []).append(x)
    return [np.array(samples[s]) for s in sorted(samples)]


def _pc_replica(args):
    seed, n, width, r = args
    run = sp.run_haar_spectral(n, [], replica_rng(seed, r))
    return asy.rescaled_window(run.final.angles, n, width)


def _stats_pair_correlation(p):
    width = p["window"]
    edges = np.linspace(0.0, p["xmax"], p["bins"] + 1)
    if p["synthetic"] == "poisson":
        samples = asy.poisson_windows(p["replicas"], replica_rng(p["seed"], 0), width)
        source = "poisson"
    elif p["synthetic"]:
        raise CliError("pair-correlation supports --synthetic poisson")
    elif p["inputs"]:
        samples = _points_inputs(p["inputs"])
        source = "inputs"
    else:
        jobs = [(p["seed"], p["n_max"], width, r) for r in range(p["replicas"])]
        samples = pmap(_pc_replica, jobs, p["threads"])
        source = "haar-spectral"
    est = asy.pair_correlation(samples, edges, width)
    return {"source": source, "edges": est.edges, "counts": est.counts, "density": est.density,
            "theory_sine_kernel": est.theory, "samples": est.samples, "window": width,
            "max_deviation_beyond_first": float(est.deviation()[1:].max()) if est.edges.size > 2 else None}


def _stats_capacity(p):
    spec = _measure(p)
    est = capacity_estimate(spec, p["n_max"], p["samples"], spec.rng(0))
    rep = {"measure": spec.kind, "n": p["n_max"], "samples": est.samples, "mean": [est.mean.real, est.mean.imag],
           "stderr": [est.stderr_re, est.stderr_im], "resampled": est.resampled}
    if spec.kind == "haar" or (spec.kind == "hua_pickrell" and spec.delta == 0):
        rep["theory"] = [0.0, 0.0]
        rep["within_3_sigma"] = est.within(0.0)
    return rep


def _perm_replica(args):
    seed, n, theta, r = args
    perm = permutation_from_indices(sample_ewens_indices(n, theta, replica_rng(seed, r)))
    ln = asy.cycle_lengths(perm)
    exact = asy.eigenangles_match_cycles(perm) if n <= 256 else None
    return int(ln.size), float(ln[0] / n), exact


def _stats_permutation(p):
    n, theta = p["n_max"], p["theta"]
    jobs = [(p["seed"], n, theta, r) for r in range(p["replicas"])]
    res = pmap(_perm_replica, jobs, p["threads"])
    cyc = np.array([r[0] for r in res], dtype=float)
    l1 = np.array([r[1] for r in res])
    k = np.arange(1, n + 1)
    expected = float(np.sum(theta / (theta + k - 1.0)))
    o_mean, o_se = asy.golomb_dickman_oracle(n, max(2000, p["replicas"]), replica_rng(p["seed"], 10**6), theta)
    m = len(res)
    return {"n": n, "theta": theta, "replicas": m,
            "mean_cycles": float(cyc.mean()), "stderr_cycles": float(cyc.std(ddof=1) / math.sqrt(m)) if m > 1 else None,
            "expected_cycles": expected,
            "mean_l1_fraction": float(l1.mean()), "stderr_l1_fraction": float(l1.std(ddof=1) / math.sqrt(m)) if m > 1 else None,
            "oracle_l1_fraction": o_mean, "oracle_stderr": o_se,
            "eigenangles_exact": all(r[2] for r in res if r[2] is not None)}


STATS = {"pair-correlation": _stats_pair_correlation, "rate": _stats_rate, "event-e": _stats_event_e,
         "capacity": _stats_capacity, "permutation": _stats_permutation}


def cmd_stats(p, out):
    if p["kind"] not in STATS:
        raise CliError(f"unknown statistic {p['kind']!r}")
    rep = STATS[p["kind"]](p)
    name = f"stats_{p['kind']}.json"
    write_text(os.path.join(out, name), json_text({"kind": p["kind"], "report": rep}))
    return [name], EXIT_OK


# validate

def cmd_validate(p, out):
    from .validate import run_suites
    lines = []

    def log(line):
        lines.append(line)
        print(line, flush=True)

    res = run_suites(p["level"], p["seed"], fault=p.get("inject_fault"), log=log)
    report = {"level": p["level"], "suites": [{"name": r.name, "ok": r.ok, "worst": r.worst, "detail": r.detail}
                                              for r in res]}
    report["ok"] = all(r.ok for r in res)
    write_text(os.path.join(out, "validate.json"), json_text(report))
    if not report["ok"]:
        failed = [r.name for r in res if not r.ok]
        print("validation failed: " + ", ".join(failed), file=sys.stderr)
        return ["validate.json"], EXIT_VALIDATION
    return ["validate.json"], EXIT_OK


# bench

MATRIX_CAP = 256


def bench_spectral(n_max, rng):
    """Cumulative wall time of the spectral path up to each dimension."""
    cum = np.zeros(n_max)
    s = sp.sample_initial_haar(rng)
    t = 0.0
    for n in range(1, n_max):
        p = sp.sample_step_haar(n, rng)
        t0 = time.perf_counter()
        s = sp.advance(s, p)
        t += time.perf_counter() - t0
        cum[n] = t
    return cum


def bench_matrix(n_max, rng):
    """Cumulative time of rebuilding u_n from its vectors and diagonalizing it."""
    cum = np.zeros(n_max)
    xs = sample_vectors(MeasureSpec("haar"), n_max, rng)
    t = 0.0
    for n in range(1, n_max + 1):
        t0 = time.perf_counter()
        eigenangles(build(xs[:n]).u)
        t += time.perf_counter() - t0
        cum[n - 1] = t
    return cum


def loglog_slope(n, t, lo, hi):
    m = (n >= lo) & (n <= hi) & (t > 0)
    if m.sum() < 2:
        return None
    return float(np.polyfit(np.log(n[m]), np.log(t[m]), 1)[0])


def cmd_bench(p, out):
    n_max = p["n_max"]
    if n_max < 1:
        raise CliError("--n-max must be positive")
    sp.advance(sp.SpectralState(1, np.array([1.0])), sp.StepParams(0.5, 0.1, np.array([1.0])))  # warm the JIT
    spec = bench_spectral(n_max, replica_rng(p["seed"], 0))
    mcap = min(n_max, MATRIX_CAP)
    mat = bench_matrix(mcap, replica_rng(p["seed"], 1))
    n = np.arange(1, n_max + 1)
    rows = [(int(k), spec[k - 1], mat[k - 1] if k <= mcap else math.nan) for k in n]
    write_text(os.path.join(out, "bench.csv"), csv_text(("n", "spectral_s", "matrix_s"), rows))
    summary = {"n_max": n_max, "spectral_total_s": float(spec[-1]), "matrix_total_s": float(mat[-1]),
               "spectral_slope_256_4096": loglog_slope(n, spec, 256, 4096),
               "matrix_slope_32_256": loglog_slope(n[:mcap], mat, 32, 256),
               "spectral_slope_32_256": loglog_slope(n, spec, 32, 256)}
    write_text(os.path.join(out, "bench.json"), json_text(summary))
    for k, v in summary.items():
        print(f"{k}: {v}")
    return ["bench.csv", "bench.json"], EXIT_OK


# argument handling

def _measure(p):
    try:
        return MeasureSpec(p["measure"], complex(p["delta_re"], p["delta_im"]), p["theta"], p["seed"])
    except UnsupportedParameterError:
        raise
    except ValueError as exc:
        raise CliError(str(exc))


COMMANDS = {"sample": cmd_sample, "track": cmd_track, "stats": cmd_stats, "validate": cmd_validate,
            "bench": cmd_bench}
# keys kept in the manifest; threads is excluded since output never depends on it
_NOT_IN_MANIFEST = ("command", "out", "threads", "manifest")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ARGS)


def build_parser():
    ap = _Parser(prog="virtiso", description="Virtual isometries: sampling, spectral flow and statistics.")
    ap.add_argument("--version", action="version", version=f"virtiso {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(q, seed=True):
        q.add_argument("--out", default=".", help="output directory (created if needed)")
        q.add_argument("--threads", type=int, default=None, help=f"worker processes (default ${THREADS_ENV} or cores)")
        if seed:
            q.add_argument("--seed", type=int, default=0, help="64-bit master seed")

    def measure(q):
        q.add_argument("--measure", default="haar", choices=("haar", "hua-pickrell", "ewens"))
        q.add_argument("--delta-re", type=float, default=0.0)
        q.add_argument("--delta-im", type=float, default=0.0)
        q.add_argument("--theta", type=float, default=1.0)

    q = sub.add_parser("sample", help="sample generating vectors and summaries")
    measure(q)
    q.add_argument("--n-max", type=int, required=True)
    q.add_argument("--replicas", type=int, default=1)
    q.add_argument("--format", choices=("csv", "json"), default="csv")
    common(q)

    q = sub.add_parser("track", help="track eigenangles along the Haar spectral flow")
    q.add_argument("--n-max", type=int, required=True)
    q.add_argument("--indices", default="1", help="comma list, periodic convention (k <= 0 allowed)")
    q.add_argument("--replicas", type=int, default=1)
    common(q)

    q = sub.add_parser("stats", help="statistics reports (JSON)")
    q.add_argument("--kind", required=True, choices=tuple(STATS))
    q.add_argument("--inputs", nargs="*", default=[])
    q.add_argument("--synthetic", default="", help="poisson (pair-correlation) or planted (rate)")
    q.add_argument("--exponent", type=float, default=0.25)
    q.add_argument("--n-max", type=int, default=64)
    q.add_argument("--replicas", type=int, default=100)
    q.add_argument("--samples", type=int, default=10000)
    q.add_argument("--window", type=float, default=asy.WINDOW)
    q.add_argument("--bins", type=int, default=16)
    q.add_argument("--xmax", type=float, default=4.0)
    measure(q)
    common(q)

    q = sub.add_parser("validate", help="run the invariant suites")
    q.add_argument("--level", choices=("quick", "full"), default="quick")
    q.add_argument("--inject-fault", choices=("unitarity",), default=None, help=argparse.SUPPRESS)
    common(q)

    q = sub.add_parser("bench", help="time the spectral path against the matrix path")
    q.add_argument("--n-max", type=int, default=1024)
    common(q)

    q = sub.add_parser("replay", help="rerun a command from its manifest")
    q.add_argument("manifest")
    common(q, seed=False)
    return ap


def run(p, out):
    os.makedirs(out, exist_ok=True)
    if p["threads"] is None:
        p["threads"] = default_threads()
    if p["threads"] < 1:
        raise CliError("--threads must be positive")
    if not 0 <= p.get("seed", 0) < 2**64:
        raise CliError("--seed must be a 64-bit unsigned integer")
    params = {k: v for k, v in p.items() if k not in _NOT_IN_MANIFEST}
    man = RunManifest(p["command"], params, int(p.get("seed", 0)))
    try:
        files, code = COMMANDS[p["command"]](p, out)
    except (BracketError, InvariantError, ArithmeticError) as exc:
        rec = {"error": type(exc).__name__, "message": str(exc), "manifest": asdict(man)}
        write_text(os.path.join(out, "error.json"), json_text(rec))
        write_text(os.path.join(out, "manifest.json"), man.to_json())
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    man.outputs = files
    write_text(os.path.join(out, "manifest.json"), man.to_json())
    return code


def main(argv=None):
    ap = build_parser()
    ns = ap.parse_args(argv)
    p = vars(ns)
    out = p.pop("out")
    try:
        if p["command"] == "replay":
            man = RunManifest.from_file(p["manifest"])
            if man.command not in COMMANDS:
                raise CliError(f"manifest command {man.command!r} is not replayable")
            q = dict(man.params)
            q["command"] = man.command
            q["threads"] = p["threads"]
            return run(q, out)
        return run(p, out)
    except (CliError, UnsupportedParameterError, FileNotFoundError) as exc:
        print(f"virtiso: error: {exc}", file=sys.stderr)
        return EXIT_ARGS


if __name__ == "__main__":
    sys.exit(main())

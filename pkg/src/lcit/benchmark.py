"""Post-nonlinear synthetic data, evaluation metrics and the benchmark harness."""

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .citest import lcit, partial_correlation_test
from .data import Dataset
from .flow import TrainConfig

NOISE_FAMILIES = ("uniform", "normal", "laplace")
FUNCTION_NAMES = ("linear", "square", "cube", "tanh", "inverse", "exp_neg", "sigmoid")
LABELS = ("H0", "H1")
RUN_COLUMNS = ("run_id", "method", "n", "d", "label", "p_value", "decision", "seconds")

# distance of the shifted pole from the origin for the reciprocal entry
INVERSE_OFFSET = 0.5


def _linear(v):
    return v


def _inverse(v):
    return 1.0 / (v + INVERSE_OFFSET * np.where(v >= 0, 1.0, -1.0))


def _sigmoid(v):
    return 0.5 * (1.0 + np.tanh(0.5 * v))


_FUNCTIONS = (_linear, np.square, lambda v: v ** 3, np.tanh, _inverse,
              lambda v: np.exp(-v), _sigmoid)


def _fid(f):
    return FUNCTION_NAMES.index(f) if isinstance(f, str) else int(f)


def function_library(fid):
    """Return the scalar map with index ``fid``; see :data:`FUNCTION_NAMES`."""
    if isinstance(fid, str):
        if fid not in FUNCTION_NAMES:
            raise ValueError(f"unknown function {fid!r}")
        fid = FUNCTION_NAMES.index(fid)
    if not 0 <= fid < len(_FUNCTIONS):
        raise ValueError(f"function id {fid} out of range")
    return _FUNCTIONS[fid]


def _standardize_cols(v):
    mu = v.mean(axis=0)
    sd = v.std(axis=0)
    return (v - mu) / np.where(sd > 0, sd, 1.0)


@dataclass
class SimConfig:
    n: int
    d: int
    label: str
    noise: str
    f_id: int
    g_id: int
    a: list
    b: list
    c: float = None
    seed: int = 0

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}")
        if self.noise not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.noise!r}")
        if (self.c is not None) != (self.label == "H1"):
            raise ValueError("c must be given exactly for H1 instances")
        for fid in (self.f_id, self.g_id):
            function_library(fid)
        self.f_id, self.g_id = _fid(self.f_id), _fid(self.g_id)

    @classmethod
    def random(cls, n, d, label, seed, functions=None, noise=None):
        """Draw function ids, noise family and coefficients from ``seed``.

        ``functions`` (a pair of ids or names) and ``noise`` pin the
        corresponding choices instead of drawing them.
        """
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])
        drawn_noise = NOISE_FAMILIES[rng.integers(len(NOISE_FAMILIES))]
        f_id, g_id = (int(i) for i in rng.integers(len(FUNCTION_NAMES), size=2))
        noise = noise or drawn_noise
        if functions is not None:
            f_id, g_id = (_fid(f) for f in functions)
        a = rng.uniform(-1, 1, size=d).tolist()
        b = rng.uniform(-1, 1, size=d).tolist()
        c = float(rng.uniform(1, 2)) if label == "H1" else None
        return cls(n, d, label, noise, f_id, g_id, a, b, c, seed)

    def to_dict(self):
        out = asdict(self)
        out["f_name"] = FUNCTION_NAMES[self.f_id]
        out["g_name"] = FUNCTION_NAMES[self.g_id]
        if out["c"] is None:
            del out["c"]
        return out


def _noise(rng, family, size):
    if family == "uniform":
        return rng.uniform(-1.0, 1.0, size)
    if family == "normal":
        return rng.standard_normal(size)
    return rng.laplace(0.0, 1.0, size)


def generate_instance(config):
    """Simulate one dataset.

    ``X = 2 E_X``, ``Z = f(X a^T + E_f)`` and ``Y = g(<Z, b> [+ c X] + E_g)``,
    with every function argument standardized column-wise before ``f`` or
    ``g`` is applied.
    """
    if config.n < 1 or config.d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(2)[1])
    n, d = config.n, config.d
    f = function_library(config.f_id)
    g = function_library(config.g_id)
    x = 2.0 * _noise(rng, config.noise, n)
    e_f = _noise(rng, config.noise, (n, d))
    e_g = _noise(rng, config.noise, n)
    z = f(_standardize_cols(np.outer(x, config.a) + e_f))
    inner = z @ np.asarray(config.b) + e_g
    if config.label == "H1":
        inner = inner + config.c * x
    y = g(_standardize_cols(inner))
    return Dataset(x, y, z, meta={"label": config.label, "config": config})


# -- metrics -------------------------------------------------------------------


def _as_h1(labels):
    out = []
    for lab in labels:
        if lab in ("H1", 1, True):
            out.append(True)
        elif lab in ("H0", 0, False):
            out.append(False)
        else:
            raise ValueError(f"unknown label {lab!r}")
    return np.array(out, dtype=bool)


def auc(scores, labels):
    """Probability that an H1 score exceeds an H0 score, ties counting one half."""
    s = np.asarray(scores, dtype=float)
    pos = _as_h1(labels)
    n1, n0 = int(pos.sum()), int((~pos).sum())
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both H0 and H1 samples")
    ranks = stats.rankdata(s)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def classification_metrics(decisions, labels):
    """F1 (positive class = dependent), Type I and Type II error rates.

    A rate whose class is absent is returned as ``None``.
    """
    if len(decisions) != len(labels):
        raise ValueError("decisions and labels differ in length")
    rej = np.array([dec == "dependent" for dec in decisions], dtype=bool)
    pos = _as_h1(labels)
    tp = int(np.sum(rej & pos))
    fp = int(np.sum(rej & ~pos))
    fn = int(np.sum(~rej & pos))
    denom = 2 * tp + fp + fn
    f1 = 2 * tp / denom if denom else None
    type1 = fp / int((~pos).sum()) if (~pos).any() else None
    type2 = fn / int(pos.sum()) if pos.any() else None
    return f1, type1, type2


@dataclass
class RunRecord:
    run_id: int
    method: str
    n: int
    d: int
    label: str
    p_value: float
    decision: str
    seconds: float = None

    def row(self, timing=True):
        p = "" if self.p_value is None else repr(float(self.p_value))
        sec = "" if self.seconds is None or not timing else f"{self.seconds:.6f}"
        return [str(self.run_id), self.method, str(self.n), str(self.d), self.label, p,
                self.decision, sec]


@dataclass
class MetricsReport:
    method: str
    n: int
    d: int
    f1: float
    auc: float
    type1: float
    type2: float
    n_runs: int
    n_errors: int
    records: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {"method": self.method, "n": self.n, "d": self.d, "f1": self.f1, "auc": self.auc,
                "type1": self.type1, "type2": self.type2, "runs": self.n_runs,
                "errors": self.n_errors}

    def summary_row(self):
        def fmt(v):
            return "" if v is None else repr(float(v))
        return [self.method, str(self.n), str(self.d), fmt(self.f1), fmt(self.auc),
                fmt(self.type1), fmt(self.type2), str(self.n_runs), str(self.n_errors)]


SUMMARY_COLUMNS = ("method", "n", "d", "f1", "auc", "type1", "type2", "runs", "errors")


def metrics_from_records(records):
    """Aggregate per-run records of one (method, n, d) cell."""
    ok = [r for r in records if r.decision != "error"]
    first = records[0]
    f1 = type1 = type2 = area = None
    if ok:
        f1, type1, type2 = classification_metrics([r.decision for r in ok], [r.label for r in ok])
        labs = {r.label for r in ok}
        if labs == set(LABELS):
            area = auc([1.0 - r.p_value for r in ok], [r.label for r in ok])
    return MetricsReport(first.method, first.n, first.d, f1, area, type1, type2,
                         len(ok), len(records) - len(ok), list(records))


def group_records(records):
    cells = {}
    for r in records:
        cells.setdefault((r.method, r.n, r.d), []).append(r)
    return [metrics_from_records(v) for v in cells.values()]


def read_run_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        out = []
        for row in csv.DictReader(fh):
            out.append(RunRecord(
                int(row["run_id"]), row["method"], int(row["n"]), int(row["d"]), row["label"],
                float(row["p_value"]) if row["p_value"] else None, row["decision"],
                float(row["seconds"]) if row["seconds"] else None))
        return out


# -- methods -------------------------------------------------------------------


def lcit_method(x, y, z, alpha, seed):
    return lcit(x, y, z, alpha, TrainConfig(seed=seed))


def pcorr_method(x, y, z, alpha, seed):
    return partial_correlation_test(x, y, z, alpha)


METHODS = {"lcit": lcit_method, "pcorr": pcorr_method}


def _resolve(methods):
    if isinstance(methods, dict):
        return methods
    return {m: METHODS[m] for m in methods}


def _run_one(task):
    run_id, n, d, label, seed, methods, alpha, sim = task
    data_seed, method_seed = np.random.SeedSequence(seed).generate_state(2)
    ds = generate_instance(SimConfig.random(n, d, label, int(data_seed), **sim))
    out = []
    for name, fn in methods.items():
        t0 = time.perf_counter()
        try:
            res = fn(ds.x, ds.y, ds.z, alpha, int(method_seed))
            rec = RunRecord(run_id, name, n, d, label, res.p_value, res.decision)
        except Exception:  # a failing method must not abort the benchmark
            rec = RunRecord(run_id, name, n, d, label, None, "error")
        rec.seconds = time.perf_counter() - t0
        out.append(rec)
    return out


def run_benchmark(cells, runs, methods=("lcit", "pcorr"), alpha=0.05, seed=0,
                  csv_file=None, n_jobs=1, timing=True, progress=None, functions=None,
                  noise=None):
    """Evaluate methods on balanced H0/H1 simulations for every ``(n, d)`` cell.

    Parameters
    ----------
    cells : iterable of (int, int)
        Sample size and conditioning dimension per cell.
    runs : int
        Runs per label per cell.
    methods : sequence of str or dict
        Names from :data:`METHODS`, or ``{name: fn(x, y, z, alpha, seed)}``.
    csv_file : file-like, optional
        Receives per-run rows as soon as each run finishes.
    n_jobs : int, default 1
        Worker processes. Results do not depend on it.
    timing : bool, default True
        Write wall-clock seconds to the CSV; disable for byte-reproducible output.
    functions, noise : optional
        Pin the generator's ``(f, g)`` pair or noise family.

    Returns
    -------
    list of MetricsReport
        One per (method, cell), in cell order then method order.
    """
    if runs < 1:
        raise ValueError("need at least one run per label")
    methods = _resolve(methods)
    tasks = []
    run_id = 0
    for ci, (n, d) in enumerate(cells):
        for r in range(runs):
            for li, label in enumerate(LABELS):
                tasks.append((run_id, int(n), int(d), label, [seed, ci, r, li], methods, alpha,
                              {"functions": functions, "noise": noise}))
                run_id += 1
    writer = None
    if csv_file is not None:
        writer = csv.writer(csv_file, lineterminator="\n")
        writer.writerow(RUN_COLUMNS)
    records = []
    if n_jobs > 1:
        pool = ProcessPoolExecutor(n_jobs)
        results = pool.map(_run_one, tasks, chunksize=1)
    else:
        pool = None
        results = map(_run_one, tasks)
    try:
        for i, recs in enumerate(results):
            for rec in recs:
                records.append(rec)
                if writer is not None:
                    writer.writerow(rec.row(timing))
            if writer is not None:
                csv_file.flush()
            if progress is not None:
                progress(i + 1, len(tasks))
    finally:
        if pool is not None:
            pool.shutdown()
    return group_records(records)


def ks_uniform(pvalues):
    return float(stats.kstest(np.asarray(pvalues, dtype=float), "uniform").statistic)


def calibrate(n, d, runs, alpha=0.05, seed=0, method="lcit", bins=10, functions=None):
    """Run H0 simulations through a test and summarize the p-value distribution."""
    fn = METHODS[method] if isinstance(method, str) else method
    pvals = []
    for r in range(runs):
        data_seed, method_seed = np.random.SeedSequence([seed, r]).generate_state(2)
        ds = generate_instance(SimConfig.random(n, d, "H0", int(data_seed), functions))
        pvals.append(float(fn(ds.x, ds.y, ds.z, alpha, int(method_seed)).p_value))
    pvals = np.array(pvals)
    hist, edges = np.histogram(pvals, bins=bins, range=(0.0, 1.0))
    return {
        "n": n,
        "d": d,
        "runs": runs,
        "alpha": alpha,
        "ks_uniform": ks_uniform(pvals),
        "rejection_rate": float(np.mean(pvals <= alpha)),
        "histogram": {"edges": edges.tolist(), "counts": hist.tolist()},
        "p_values": pvals.tolist(),
    }

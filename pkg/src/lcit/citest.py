"""Latent-representation conditional independence test and a partial
correlation baseline, both with closed-form Fisher z p-values."""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .data import DataError, Dataset, preprocess
from .flow import LatentSeries, TrainConfig, train_cnf
from .special import std_normal_sf

R_CLAMP = 1.0 - 1e-12
RIDGE = 1e-8


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class

    correlation: float
    statistic: float
    p_value: float
    n: int
    alpha: float
    decision: str

    @property
    def independent(self):
        return self.decision == "independent"

    def to_dict(self):
        return {
            "p_value": self.p_value,
            "statistic": self.statistic,
            "correlation": self.correlation,
            "n": self.n,
            "alpha": self.alpha,
            "decision": self.decision,
        }


@dataclass
class LcitDiagnostics:
    report_x: object = None
    report_y: object = None
    ks_x: float = math.nan
    ks_y: float = math.nan
    latents_x: LatentSeries = None
    latents_y: LatentSeries = None
    extra: dict = field(default_factory=dict)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")


def _decide(p, alpha):
    # reject iff p <= alpha
    return "independent" if p > alpha else "dependent"


def _series(a):
    return np.asarray(a.epsilon if isinstance(a, LatentSeries) else a, dtype=float).reshape(-1)


def pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    sa = math.sqrt(np.mean(a * a))
    sb = math.sqrt(np.mean(b * b))
    if sa == 0.0 or sb == 0.0:
        raise ValueError("zero-variance series has no correlation")
    return float(np.mean(a * b) / (sa * sb))


def fisher_z(r, n, dof_shift=3, alpha=0.05):
    """Fisher z statistic and two-sided normal p-value for a correlation ``r``."""
    _check_alpha(alpha)
    if n - dof_shift < 1:
        raise ValueError(f"n={n} is too small (need n - {dof_shift} >= 1)")
    r = min(max(r, -R_CLAMP), R_CLAMP)
    t = 0.5 * math.log((1.0 + r) / (1.0 - r))
    p = 2.0 * std_normal_sf(abs(t) * math.sqrt(n - dof_shift))
    p = min(p, 1.0)
    return TestResult(r, t, p, n, alpha, _decide(p, alpha))


def fisher_z_pvalue(eps_x, eps_y, alpha=0.05):
    """Test two latent series for zero correlation.

    Parameters
    ----------
    eps_x, eps_y : LatentSeries or array_like of shape (n,)
    alpha : float, default 0.05

    Returns
    -------
    TestResult
    """
    a, b = _series(eps_x), _series(eps_y)
    if len(a) != len(b):
        raise ValueError("latent series differ in length")
    if len(a) < 4:
        raise ValueError("need at least 4 samples")
    return fisher_z(pearson(a, b), len(a), 3, alpha)


def _residualize(v, design):
    g = design.T @ design
    g[np.diag_indices_from(g)] += RIDGE
    try:
        coef = np.linalg.solve(g, design.T @ v)
    except np.linalg.LinAlgError as exc:
        raise ValueError("conditioning matrix is rank deficient") from exc
    return v - design @ coef


def partial_correlation_test(x, y, z=None, alpha=0.05):
    """Gaussian partial-correlation test of ``x`` and ``y`` given ``z``.

    Residuals of least-squares fits of ``x`` and ``y`` on ``[1, z]`` are
    correlated and the Fisher z statistic is scaled by ``sqrt(n - d - 3)``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = len(x)
    z = np.empty((n, 0)) if z is None or np.size(z) == 0 else np.asarray(z, dtype=float).reshape(n, -1)
    d = z.shape[1]
    if n <= d + 3:
        raise ValueError(f"need n > d + 3, got n={n}, d={d}")
    design = np.column_stack([np.ones(n), z])
    r = pearson(_residualize(x, design), _residualize(y, design))
    return fisher_z(r, n, d + 3, alpha)


def _ks_normal(eps):
    return float(stats.kstest(eps, "norm").statistic)


def lcit(x, y, z=None, alpha=0.05, config=None, *, preprocessing=True, trainer=None,
         return_diagnostics=False):
    """Latent-representation conditional independence test of ``x`` and ``y`` given ``z``.

    Two conditional flows are fitted, one for ``x | z`` and one for ``y | z``,
    with seeds derived from ``config.seed``. Their latents are tested for zero
    correlation.

    Parameters
    ----------
    x, y : array_like of shape (n,)
    z : array_like of shape (n, d), optional
        ``None`` or zero columns gives an unconditional test.
    alpha : float, default 0.05
    config : TrainConfig, optional
    preprocessing : bool, default True
        Standardize and quantile-clip every column first.
    trainer : callable, optional
        ``trainer(target, z, config) -> (flow, report)``; replaces
        :func:`~lcit.flow.train_cnf`.
    return_diagnostics : bool, default False

    Returns
    -------
    TestResult, or ``(TestResult, LcitDiagnostics)``
    """
    _check_alpha(alpha)
    config = config or TrainConfig()
    x = np.asarray(x, dtype=float).reshape(-1)
    n = len(x)
    z = np.empty((n, 0)) if z is None or np.size(z) == 0 else np.asarray(z, dtype=float).reshape(n, -1)
    ds = Dataset(x, y, z)
    if n < 20:
        raise ValueError(f"need at least 20 samples, got {n}")
    for name, col in (("x", ds.x), ("y", ds.y)):
        if np.ptp(col) == 0:
            raise DataError(f"column {name} is constant")
    if preprocessing:
        ds = preprocess(ds)
    trainer = trainer or train_cnf
    seed_x, seed_y = np.random.SeedSequence(config.seed).generate_state(2)
    cfg_x = replace(config, seed=int(seed_x))
    cfg_y = replace(config, seed=int(seed_y))
    flow_x, rep_x = trainer(ds.x, ds.z, cfg_x)
    flow_y, rep_y = trainer(ds.y, ds.z, cfg_y)
    lat_x = flow_x.infer_latents(ds.x, ds.z)
    lat_y = flow_y.infer_latents(ds.y, ds.z)
    result = fisher_z_pvalue(lat_x, lat_y, alpha)
    if not return_diagnostics:
        return result
    diag = LcitDiagnostics(rep_x, rep_y, _ks_normal(lat_x.epsilon), _ks_normal(lat_y.epsilon),
                           lat_x, lat_y)
    return result, diag


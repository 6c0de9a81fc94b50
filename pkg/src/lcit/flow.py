"""Conditional Gaussian-mixture CDF flow.

Three MLP heads map the conditioning vector ``z`` to the means, log-variances
and mixture logits of a ``k``-component Gaussian mixture over scalar ``x``.
The mixture CDF sends ``x`` to ``u`` in ``(0, 1)`` and the standard normal
quantile function sends ``u`` to the latent ``epsilon``.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .data import split_indices
from .nn import Adam, ContractError, MlpHead
from .special import LOG_2PI, log_softmax, softmax, std_normal_cdf, std_normal_icdf

LOGVAR_MIN, LOGVAR_MAX = -7.0, 7.0
U_CLAMP = 1e-6
HEAD_NAMES = ("mu", "logvar", "logits")


class TrainingDivergedError(FloatingPointError):
    pass


@dataclass
class MixtureParams:
    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray
    log_weights: np.ndarray


@dataclass
class LatentSeries:
    """Latents and the unclamped mixture-CDF values they came from."""

    epsilon: np.ndarray
    u: np.ndarray


@dataclass
class TrainConfig:
    learning_rate: float = 5e-3
    weight_decay: float = 5e-5
    batch_size: int = 64
    max_epochs: int = 100
    patience: int = 5
    val_fraction: float = 0.30
    n_components: int = 32
    hidden_dim: int = 4
    seed: int = 0
    restore_best: bool = True

    def __post_init__(self):
        if not 0.0 < self.val_fraction < 1.0:
            raise ContractError("val_fraction must lie in (0, 1)")
        if self.batch_size < 2:
            raise ContractError("batch_size must be at least 2")


@dataclass
class TrainReport:
    train_loglik: list = field(default_factory=list)
    val_loglik: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_loglik: float = -math.inf
    learning_rate: float = 0.0
    retried: bool = False
    train_idx: np.ndarray = field(default=None, repr=False)
    val_idx: np.ndarray = field(default=None, repr=False)

    @property
    def n_train(self):
        return 0 if self.train_idx is None else len(self.train_idx)

    @property
    def n_val(self):
        return 0 if self.val_idx is None else len(self.val_idx)

    @property
    def epochs_run(self):
        return len(self.val_loglik)


class ConditionalFlow:
    """Mixture-CDF flow for scalar ``x`` conditioned on ``z`` of width ``d``.

    With ``d == 0`` the heads read a constant input and the flow is an
    unconditional mixture.
    """

    def __init__(self, d, k=32, hidden_dim=4, rng=None, **head_kw):
        if d < 0 or k < 1:
            raise ContractError("need d >= 0 and k >= 1")
        self.d = int(d)
        self.k = int(k)
        ss = np.random.SeedSequence(rng) if not isinstance(rng, np.random.SeedSequence) else rng
        seeds = ss.spawn(3)
        self.heads = {
            name: MlpHead(max(self.d, 1), self.k, hidden_dim, rng=np.random.default_rng(s), **head_kw)
            for name, s in zip(HEAD_NAMES, seeds)
        }

    @classmethod
    def identity(cls, d):
        """Single standard-normal component for every ``z``: ``epsilon == x``."""
        flow = cls(d, k=1, rng=0)
        for head in flow.heads.values():
            for p in head.params.values():
                p[...] = 0.0
            head.params["gamma"][...] = 1.0
        return flow

    def _inputs(self, z, n=None):
        z = np.asarray(z, dtype=float)
        if self.d == 0:
            rows = n if n is not None else (z.shape[0] if z.ndim else 0)
            return np.ones((rows, 1))
        if z.ndim == 1:
            z = z.reshape(-1, 1) if self.d == 1 else z.reshape(1, -1)
        if z.shape[1] != self.d:
            raise ContractError(f"z has {z.shape[1]} columns, flow expects {self.d}")
        return z

    def _raw(self, inputs, train, update_stats):
        return {name: head.forward(inputs, train=train, update_stats=update_stats)
                for name, head in self.heads.items()}

    def mixture_params(self, z, train=False, n=None, update_stats=False):
        """Per-row means, variances and weights of the conditional mixture."""
        raw = self._raw(self._inputs(z, n), train, update_stats)
        if not all(np.all(np.isfinite(r)) for r in raw.values()):
            raise TrainingDivergedError("non-finite head output")
        logvar = np.clip(raw["logvar"], LOGVAR_MIN, LOGVAR_MAX)
        return MixtureParams(raw["mu"], np.exp(logvar), softmax(raw["logits"]),
                             log_softmax(raw["logits"]))

    def _component_logpdf(self, x, mp):
        return -0.5 * (LOG_2PI + np.log(mp.variances)) - (x[:, None] - mp.means) ** 2 / (2 * mp.variances)

    def log_density(self, x, z, train=False):
        """Per-sample ``log p(x | z)``."""
        x = np.asarray(x, dtype=float).reshape(-1)
        mp = self.mixture_params(z, train=train, n=len(x))
        comp = mp.log_weights + self._component_logpdf(x, mp)
        m = comp.max(axis=1, keepdims=True)
        return (np.log(np.exp(comp - m).sum(axis=1, keepdims=True)) + m)[:, 0]

    def conditional_loglik(self, x, z, train=False):
        """Mean conditional log-likelihood of a batch."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if len(x) == 0:
            raise ContractError("empty batch")
        return float(np.mean(self.log_density(x, z, train=train)))

    def loglik_and_gradients(self, x, z, update_stats=False):
        """Training-mode mean log-likelihood and its gradient for every head parameter.

        Returns ``(loglik, {head_name: {param_name: grad}})``.
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        n = len(x)
        if n == 0:
            raise ContractError("empty batch")
        inputs = self._inputs(z, n)
        fwd = {name: head._forward(inputs, True, update_stats) for name, head in self.heads.items()}
        mu, raw_lv, logits = (fwd[name][0] for name in HEAD_NAMES)
        lv = np.clip(raw_lv, LOGVAR_MIN, LOGVAR_MAX)
        var = np.exp(lv)
        lw = log_softmax(logits)
        diff = x[:, None] - mu
        comp = lw - 0.5 * (LOG_2PI + lv) - diff ** 2 / (2 * var)
        m = comp.max(axis=1, keepdims=True)
        e = np.exp(comp - m)
        s = e.sum(axis=1, keepdims=True)
        loglik = float(np.mean(np.log(s) + m))
        resp = e / s
        # upstream gradients of the mean log-likelihood w.r.t. each head output
        up = {
            "mu": resp * diff / var / n,
            "logvar": resp * (0.5 * diff ** 2 / var - 0.5) * ((raw_lv > LOGVAR_MIN) & (raw_lv < LOGVAR_MAX)) / n,
            "logits": (resp - np.exp(lw)) / n,
        }
        grads = {name: self.heads[name]._backward(fwd[name][1], up[name]) for name in HEAD_NAMES}
        return loglik, grads

    def cdf(self, x, z):
        """Mixture CDF ``u(x, z)`` in evaluation mode, without clamping."""
        x = np.asarray(x, dtype=float).reshape(-1)
        mp = self.mixture_params(z, n=len(x))
        std = (x[:, None] - mp.means) / np.sqrt(mp.variances)
        return np.sum(mp.weights * std_normal_cdf(std), axis=1)

    def sample(self, z, rng=None, n=None):
        """Draw one ``x`` per row of ``z`` from the conditional mixture."""
        rng = np.random.default_rng(rng)
        mp = self.mixture_params(z, n=n)
        cum = np.cumsum(mp.weights, axis=1)
        comp = (rng.random((cum.shape[0], 1)) > cum).sum(axis=1)
        comp = np.minimum(comp, self.k - 1)
        rows = np.arange(cum.shape[0])
        return mp.means[rows, comp] + np.sqrt(mp.variances[rows, comp]) * rng.standard_normal(len(rows))

    def infer_latents(self, x, z):
        """Map every sample to its latent through the clamped mixture CDF."""
        u = self.cdf(x, z)
        if not np.all(np.isfinite(u)):
            raise ContractError("flow produced non-finite CDF values")
        eps = std_normal_icdf(np.clip(u, U_CLAMP, 1.0 - U_CLAMP))
        return LatentSeries(np.atleast_1d(eps), u)

    # -- state --------------------------------------------------------------

    def copy(self):
        new = ConditionalFlow.__new__(ConditionalFlow)
        new.d, new.k = self.d, self.k
        new.heads = {name: h.copy() for name, h in self.heads.items()}
        return new

    def to_record(self):
        return {
            "version": 1,
            "kind": "conditional_flow",
            "d": self.d,
            "k": self.k,
            "heads": {name: h.to_record() for name, h in self.heads.items()},
        }

    @classmethod
    def from_record(cls, record):
        if record.get("kind") != "conditional_flow" or record.get("version") != 1:
            raise ContractError("unsupported flow record")
        flow = cls.__new__(cls)
        flow.d, flow.k = int(record["d"]), int(record["k"])
        flow.heads = {name: MlpHead.from_record(record["heads"][name]) for name in HEAD_NAMES}
        for h in flow.heads.values():
            if h.input_dim != max(flow.d, 1) or h.output_dim != flow.k:
                raise ContractError("head shapes do not match flow metadata")
        return flow

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_record(), fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_record(json.load(fh))


def _batches(idx, batch_size, rng):
    perm = rng.permutation(idx)
    out = [perm[i:i + batch_size] for i in range(0, len(perm), batch_size)]
    if len(out) > 1 and len(out[-1]) < 2:
        out[-2] = np.concatenate([out[-2], out.pop()])
    return out


def _fit(x, z, config, lr, train_idx, val_idx, seeds):
    init_ss, shuffle_ss = seeds
    flow = ConditionalFlow(z.shape[1], config.n_components, config.hidden_dim, rng=init_ss)
    opts = {name: Adam(lr, config.weight_decay) for name in HEAD_NAMES}
    rng = np.random.default_rng(shuffle_ss)
    report = TrainReport(learning_rate=lr, train_idx=train_idx, val_idx=val_idx)
    best = flow.copy()
    since_best = 0
    for epoch in range(config.max_epochs):
        total, count = 0.0, 0
        for b in _batches(train_idx, config.batch_size, rng):
            ll, grads = flow.loglik_and_gradients(x[b], z[b], update_stats=True)
            if not math.isfinite(ll):
                raise TrainingDivergedError(f"non-finite log-likelihood at epoch {epoch}")
            for name in HEAD_NAMES:
                neg = {k: -g for k, g in grads[name].items()}
                opts[name].step(flow.heads[name].params, neg)
            total += ll * len(b)
            count += len(b)
        val_ll = flow.conditional_loglik(x[val_idx], z[val_idx])
        if not math.isfinite(val_ll):
            raise TrainingDivergedError(f"non-finite validation log-likelihood at epoch {epoch}")
        report.train_loglik.append(total / count)
        report.val_loglik.append(val_ll)
        if val_ll > report.best_val_loglik:
            report.best_val_loglik, report.best_epoch = val_ll, epoch
            best = flow.copy()
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                break
    return (best if config.restore_best else flow), report


def train_cnf(x, z, config=None):
    """Fit a conditional flow by minibatch Adam on the negative log-likelihood.

    The data are split into training and validation parts; only the
    training part feeds gradient updates, the validation log-likelihood
    drives early stopping. On divergence the fit is restarted once with half
    the learning rate.

    Parameters
    ----------
    x : array_like of shape (n,)
        Target samples, already preprocessed.
    z : array_like of shape (n, d)
        Conditioning samples; ``d`` may be 0.
    config : TrainConfig, optional

    Returns
    -------
    flow : ConditionalFlow
    report : TrainReport
    """
    config = config or TrainConfig()
    x = np.asarray(x, dtype=float).reshape(-1)
    n = len(x)
    z = np.asarray(z, dtype=float).reshape(n, -1) if np.size(z) else np.empty((n, 0))
    if n < 20:
        raise ContractError(f"need at least 20 samples to train, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
        raise ContractError("training data must be finite")
    split_ss, *seeds = np.random.SeedSequence(config.seed).spawn(3)
    train_idx, val_idx = split_indices(n, config.val_fraction, split_ss)
    assert np.intersect1d(train_idx, val_idx).size == 0
    lr = config.learning_rate
    try:
        return _fit(x, z, config, lr, train_idx, val_idx, seeds)
    except (TrainingDivergedError, FloatingPointError):
        flow, report = _fit(x, z, config, lr / 2, train_idx, val_idx, seeds)
        report.retried = True
        return flow, report

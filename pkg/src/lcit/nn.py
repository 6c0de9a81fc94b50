"""One-hidden-layer MLP heads with batch normalization, hand-written
backpropagation, and an Adam optimizer with decoupled weight decay.
"""

from dataclasses import dataclass, field

import numpy as np

PARAM_NAMES = ("W1", "b1", "gamma", "beta", "W2", "b2")
RECORD_VERSION = 1


class ContractError(ValueError):
    """Raised when an input violates an operation's preconditions."""


class NonFiniteGradientError(FloatingPointError):
    def __init__(self, name):
        super().__init__(f"non-finite gradient for parameter {name!r}")
        self.name = name


class MlpHead:
    """``affine -> batchnorm -> ReLU -> affine``.

    Parameters
    ----------
    input_dim, output_dim : int
        Widths of the input and output layers.
    hidden_dim : int, default 4
        Width of the hidden layer.
    momentum : float, default 0.9
        Weight of the previous running statistic when it is refreshed from a
        training batch.
    var_floor : float, default 1e-5
        Added to the batch variance before normalizing.
    bn_before_relu : bool, default True
        Set to ``False`` for the ``affine -> ReLU -> batchnorm -> affine``
        ordering.
    rng : numpy.random.Generator or int, optional
        Source for the Glorot-uniform weight initialization.
    """

    def __init__(self, input_dim, output_dim, hidden_dim=4, *, momentum=0.9,
                 var_floor=1e-5, bn_before_relu=True, rng=None):
        if min(input_dim, output_dim, hidden_dim) < 1:
            raise ContractError("layer widths must be positive")
        rng = np.random.default_rng(rng)
        self.input_dim = int(input_dim)
        self.hidden_dim = int(hidden_dim)
        self.output_dim = int(output_dim)
        self.momentum = float(momentum)
        self.var_floor = float(var_floor)
        self.bn_before_relu = bool(bn_before_relu)

        def glorot(fan_in, fan_out):
            lim = np.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-lim, lim, size=(fan_in, fan_out))

        self.params = {
            "W1": glorot(self.input_dim, self.hidden_dim),
            "b1": np.zeros(self.hidden_dim),
            "gamma": np.ones(self.hidden_dim),
            "beta": np.zeros(self.hidden_dim),
            "W2": glorot(self.hidden_dim, self.output_dim),
            "b2": np.zeros(self.output_dim),
        }
        self.running_mean = np.zeros(self.hidden_dim)
        self.running_var = np.ones(self.hidden_dim)

    # -- forward / backward -------------------------------------------------

    def forward(self, inputs, train=False, update_stats=None):
        """Evaluate the head.

        In training mode the hidden layer is normalized with the batch
        statistics, and the running statistics are refreshed unless
        ``update_stats`` is false. Evaluation mode uses the running
        statistics only.
        """
        out, _ = self._forward(inputs, train, train if update_stats is None else update_stats)
        return out

    def _forward(self, inputs, train, update_stats):
        x = np.asarray(inputs, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ContractError(
                f"expected inputs of shape (n, {self.input_dim}), got {x.shape}")
        if train and x.shape[0] < 2:
            raise ContractError("batch normalization in training mode needs a batch of at least 2")
        p = self.params
        a = x @ p["W1"] + p["b1"]
        pre_bn = a if self.bn_before_relu else np.maximum(a, 0.0)
        if train:
            mu = pre_bn.mean(axis=0)
            var = pre_bn.var(axis=0)
            if update_stats:
                n = pre_bn.shape[0]
                m = self.momentum
                self.running_mean = m * self.running_mean + (1.0 - m) * mu
                self.running_var = m * self.running_var + (1.0 - m) * var * n / (n - 1)
        else:
            mu, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.var_floor)
        xhat = (pre_bn - mu) * inv_std
        bn = p["gamma"] * xhat + p["beta"]
        h = np.maximum(bn, 0.0) if self.bn_before_relu else bn
        out = h @ p["W2"] + p["b2"]
        cache = (x, a, xhat, inv_std, bn, h, train)
        return out, cache

    def gradients(self, inputs, upstream_grad, update_stats=False):
        """Gradients of ``sum(upstream_grad * forward(inputs, train=True))``.

        Returns the forward output and a dict keyed like :attr:`params`. The
        batch-statistics pathway of batch normalization is differentiated
        through.
        """
        out, cache = self._forward(inputs, True, update_stats)
        g = np.asarray(upstream_grad, dtype=float)
        if g.shape != out.shape:
            raise ContractError(f"upstream gradient shape {g.shape} != output shape {out.shape}")
        return out, self._backward(cache, g)

    def _backward(self, cache, g):
        x, a, xhat, inv_std, bn, h, train = cache
        p = self.params
        grads = {"W2": h.T @ g, "b2": g.sum(axis=0)}
        dh = g @ p["W2"].T
        dbn = dh * (bn > 0) if self.bn_before_relu else dh
        grads["gamma"] = (dbn * xhat).sum(axis=0)
        grads["beta"] = dbn.sum(axis=0)
        dxhat = dbn * p["gamma"]
        if train:
            n = x.shape[0]
            dpre = (inv_std / n) * (
                n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
        else:
            dpre = dxhat * inv_std
        da = dpre if self.bn_before_relu else dpre * (a > 0)
        grads["W1"] = x.T @ da
        grads["b1"] = da.sum(axis=0)
        return grads

    # -- state --------------------------------------------------------------

    def copy(self):
        new = MlpHead.__new__(MlpHead)
        new.__dict__.update(self.__dict__)
        new.params = {k: v.copy() for k, v in self.params.items()}
        new.running_mean = self.running_mean.copy()
        new.running_var = self.running_var.copy()
        return new

    def to_record(self):
        """Flat, versioned, JSON-compatible description of the head."""
        arrays = dict(self.params, running_mean=self.running_mean, running_var=self.running_var)
        return {
            "version": RECORD_VERSION,
            "kind": "mlp_head",
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "output_dim": self.output_dim,
            "momentum": self.momentum,
            "var_floor": self.var_floor,
            "bn_before_relu": self.bn_before_relu,
            "arrays": {
                k: {"shape": list(v.shape), "values": v.ravel().tolist()}
                for k, v in arrays.items()
            },
        }

    @classmethod
    def from_record(cls, record):
        if record.get("version") != RECORD_VERSION or record.get("kind") != "mlp_head":
            raise ContractError("unsupported head record")
        head = cls(record["input_dim"], record["output_dim"], record["hidden_dim"],
                   momentum=record["momentum"], var_floor=record["var_floor"],
                   bn_before_relu=record["bn_before_relu"], rng=0)
        arrays = {
            k: np.asarray(v["values"], dtype=float).reshape(v["shape"])
            for k, v in record["arrays"].items()
        }
        for name in PARAM_NAMES:
            if arrays[name].shape != head.params[name].shape:
                raise ContractError(f"shape mismatch for {name}")
            head.params[name] = arrays[name]
        head.running_mean = arrays["running_mean"]
        head.running_var = arrays["running_var"]
        if np.any(head.running_var < 0):
            raise ContractError("negative running variance")
        return head


@dataclass
class Adam:
    """Adam with bias correction and decoupled weight decay.

    Operates in place on a flat ``{name: ndarray}`` mapping of parameters.
    """

    learning_rate: float = 5e-3
    weight_decay: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params, grads):
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise NonFiniteGradientError(name)
            if params[name].shape != g.shape:
                raise ContractError(f"gradient shape mismatch for {name}")
        self.step_count += 1
        t = self.step_count
        lr, wd = self.learning_rate, self.weight_decay
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, g in grads.items():
            m = self.m.get(name)
            if m is None:
                m = self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p = params[name]
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if wd:
                p -= lr * wd * p
        return params

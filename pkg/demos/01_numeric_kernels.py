"""Normal CDF/quantile roundtrip and a single MLP head trained with Adam.

Run: python3 demos/01_numeric_kernels.py
"""

import numpy as np

from lcit.nn import Adam, MlpHead
from lcit.special import log_sum_exp, std_normal_cdf, std_normal_icdf

xs = np.array([-5.0, -1.96, 0.0, 1.0, 3.0])
print("Phi(x)          ", np.round(std_normal_cdf(xs), 6))
print("Phi^-1(Phi(x))  ", std_normal_icdf(std_normal_cdf(xs)))

# a two-component mixture density at 0, computed stably in log space
print("log mixture density at 0:", log_sum_exp([-0.9189, -5.0], np.log([0.7, 0.3])))

# fit a tiny head to a noisy sine; loss should fall by an order of magnitude
rng = np.random.default_rng(0)
x = rng.uniform(-3, 3, size=(256, 1))
target = np.sin(x) + 0.1 * rng.normal(size=x.shape)
head = MlpHead(1, 1, hidden_dim=16, rng=0)
opt = Adam(learning_rate=2e-2)
for step in range(1501):
    out = head.forward(x, train=True)
    _, grads = head.gradients(x, 2 * (out - target) / len(x))
    opt.step(head.params, grads)
    if step % 500 == 0:
        mse = float(np.mean((head.forward(x) - target) ** 2))
        print(f"step {step:4d}  eval mse {mse:.4f}")

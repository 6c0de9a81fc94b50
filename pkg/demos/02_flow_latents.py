"""Train a conditional flow and look at its latents.

For x = sin(z1) + noise, the latent eps = Phi^-1(F(x | z)) should be standard
normal and carry no information about z.

Run: python3 demos/02_flow_latents.py
"""

import numpy as np
from scipy import stats

from lcit import Dataset, TrainConfig, preprocess, train_cnf

rng = np.random.default_rng(1)
n = 1000
z = rng.normal(size=(n, 3))
x = np.sin(z[:, 0]) + 0.5 * rng.normal(size=n)
ds = preprocess(Dataset(x, x, z))

flow, report = train_cnf(ds.x, ds.z, TrainConfig(seed=0))
print(f"epochs run {report.epochs_run}, best epoch {report.best_epoch}, "
      f"validation log-lik {report.best_val_loglik:.3f}")

lat = flow.infer_latents(ds.x, ds.z)
print(f"KS distance to N(0,1): {stats.kstest(lat.epsilon, 'norm').statistic:.4f}")
print(f"corr(x, z1)   = {np.corrcoef(ds.x, ds.z[:, 0])[0, 1]:+.3f}")
print(f"corr(eps, z1) = {np.corrcoef(lat.epsilon, ds.z[:, 0])[0, 1]:+.3f}")

held = flow.cdf(ds.x[report.val_idx], ds.z[report.val_idx])
print(f"held-out u: mean {held.mean():.3f}, var {held.var():.4f} (uniform: 0.5, {1 / 12:.4f})")

# the mixture at one conditioning point
mp = flow.mixture_params(ds.z[:1])
top = np.argsort(mp.weights[0])[::-1][:3]
for j in top:
    print(f"  component {j:2d}: w={mp.weights[0, j]:.3f} mu={mp.means[0, j]:+.3f} "
          f"var={mp.variances[0, j]:.3f}")

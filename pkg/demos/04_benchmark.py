"""A small synthetic benchmark: F1, AUC and error rates per method.

Runs 20 H0 and 20 H1 instances at n=300, d=5. Raise RUNS for tighter
estimates; the CLI's ``bench --profile desk`` runs 100 per label.

Run: python3 demos/04_benchmark.py
"""

import io
import time

from lcit.benchmark import SimConfig, generate_instance, run_benchmark

RUNS = 20

cfg = SimConfig.random(300, 5, "H1", seed=7)
ds = generate_instance(cfg)
print("one instance:", cfg.to_dict()["f_name"], cfg.to_dict()["g_name"], cfg.noise,
      f"c={cfg.c:.2f}", "shape", ds.columns().shape)

buf = io.StringIO()
t0 = time.perf_counter()
reports = run_benchmark([(300, 5)], RUNS, ("lcit", "pcorr"), seed=0, csv_file=buf)
print(f"{2 * RUNS} instances in {time.perf_counter() - t0:.1f}s")
for r in reports:
    print(f"{r.method:6s} F1={r.f1:.3f} AUC={r.auc:.3f} type I={r.type1:.3f} "
          f"type II={r.type2:.3f} errors={r.n_errors}")
print("first per-run rows:")
print("\n".join(buf.getvalue().splitlines()[:4]))

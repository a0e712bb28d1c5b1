"""Octonion laws, distances in OH2 and curvature pinching, printed as a short table."""

import numpy as np

from rankone import algebra as alg
from rankone import busemann as bm
from rankone import spaces as sp

rng = np.random.default_rng(0)

laws = alg.law_residuals(d=8, trials=1000, seed=1)
print("octonion laws, worst residual over 1000 random unit triples:")
for name, r in laws.items():
    print(f"  {name:30s} {r:.2e}")

oh2 = sp.get_space("OH2")
x, y = sp.random_point(oh2, rng, 2.0), sp.random_point(oh2, rng, 2.0)
print(f"\nOH2 distance: payload form {sp.distance(x, y):.15f}")
print(f"              trace form   {sp.distance_trace(x, y):.15f}")
print(f"              vector model {sp.distance_vector_model(x, y):.15f}")

for name in sp.SUPPORTED:
    space = sp.get_space(name)
    ks = [sp.sectional_curvature_probe(sp.random_point(space, rng, 1.0), *sp.random_unit(space, rng, 2))
          for _ in range(100)]
    print(f"{name}: sectional curvature over 100 random planes in [{min(ks):.3f}, {max(ks):.3f}]")

s = sp.random_unit(oh2, rng)
print(f"\nBusemann function at x: closed form {float(bm.busemann(s, x)):.12f}, "
      f"d(x, ray(30)) - 30 = {bm.busemann_large_t(s, x):.12f}")

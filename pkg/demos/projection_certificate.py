"""Project a perturbed embedded point and certify the compressed projection.

Usage: python demos/projection_certificate.py [SPACE] [SEED]
"""

import sys

import numpy as np

from rankone import operators as op
from rankone import projection as pr
from rankone import quadrature as qd
from rankone import spaces as sp

name = sys.argv[1] if len(sys.argv) > 1 else "HH2"
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 0
space = sp.get_space(name)
samples = qd.generate_samples(space, 16384 if space.field == "O" else 4096, seed=0)
solver = pr.ProjectionSolver(space, samples)
rng = np.random.default_rng(seed)

phi, x = pr.phi_with_height(space, rng, solver, target=0.3)
result = solver.project(phi, start=x)
print(f"{name}: Newton residual {result.residual:.2e} after {result.iterations} iterations")
print(f"  |log x| = {np.linalg.norm(result.x.log0):.4f}, height = {pr.height(phi, result.x, samples):.4f}")

bundle = op.assemble_bundle(phi, result.x, samples)
chain, svd = op.jacobian_AE(bundle)
print(f"  Jacobian of A^-1 E: {chain:.6f} (closed chain), {svd:.6f} (singular values)")
print(f"  eigenvalues of Q in [{bundle.lam[0]:.4f}, {bundle.lam[-1]:.4f}]")

for sigma in (0.1, 0.05, 0.02):
    cert = pr.certified_projection(phi, solver, pr.CompressionConfig(sigma), x=result.x)
    verdict = "holds" if cert.jacobian <= cert.bound + 1e-2 else "violated"
    print(f"  sigma = {sigma:<5}: J = {cert.jacobian:.6f}, bound 1 - c h^2 = {cert.bound:.8f}  {verdict}")

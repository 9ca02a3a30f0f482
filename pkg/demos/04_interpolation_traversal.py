"""Moving around inside a concept subspace.

Once prompts are projected into an edition, the span supports linear
interpolation between any two of them, and each principal axis is a
semantic direction one can walk along. Both stay inside the edition.

Run:  python demos/04_interpolation_traversal.py
"""

import numpy as np

from editioner import build_subspace, interpolate, project, traverse

rng = np.random.default_rng(2)
dim = 30

# An edition built from a synthetic concept cluster.
frame = np.linalg.qr(rng.normal(size=(dim, 6)))[0].T
data = rng.normal(size=(600, 6)) * [8, 5, 3, 2, 1.5, 1] @ frame
edition = build_subspace(data, None, threshold=0.95)
print(f"edition: k={edition.k}, per-axis rms "
      f"{np.round(np.sqrt(edition.spectrum_values), 3)}")

# Two arbitrary prompts, projected then blended in seven steps.
a, b = rng.normal(size=(2, dim)) * 10
path = interpolate(a, b, edition, steps=7)
pa, pb = project(a, edition).vector, project(b, edition).vector
print("\ninterpolation from a' to b':")
for t, v in zip(np.linspace(0, 1, 7), path):
    to_a = np.linalg.norm(v - pa)
    to_b = np.linalg.norm(v - pb)
    in_span = np.linalg.norm(v - edition.basis.T @ (edition.basis @ v))
    print(f"  t={t:.2f}  |v-a'|={to_a:7.3f}  |v-b'|={to_b:7.3f}  off-span={in_span:.1e}")

# Walking along principal axis 0, in units of that axis's spread.
steps = traverse(a, edition, component_index=0, offsets=[-2, -1, 0, 1, 2],
                 sigma_units=True)
base = steps[2]
print("\ntraversal along axis 0 (offsets in per-component rms units):")
for offset, v in zip([-2, -1, 0, 1, 2], steps):
    print(f"  offset {offset:+d}: moved {np.linalg.norm(v - base):7.3f}, "
          f"norm {np.linalg.norm(v):7.3f}")
print("\n(displacements are symmetric; traversal does not re-compensate norms)")

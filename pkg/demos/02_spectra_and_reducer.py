"""Spectra and the global dimensionality reducer.

Real prompt embeddings are huge (the flattened token tensor has 59,136
coordinates) but concentrate in a far smaller subspace; a one-off PCA of a
large mixed corpus gives an "efficient" working space in which all later
subspace math happens. This demo reproduces that structure synthetically.

Run:  python demos/02_spectra_and_reducer.py
"""

import numpy as np

from editioner import build_reducer, compute_spectrum, evr_curve, lift, reduce

rng = np.random.default_rng(0)

# Synthetic corpus: 2,000 samples in a 120-dim ambient space whose energy
# decays fast over a 25-dim "true" subspace, plus a whiff of noise.
ambient, true_rank = 120, 25
frame = np.linalg.qr(rng.normal(size=(ambient, true_rank)))[0].T
scales = 3.0 * 0.75 ** np.arange(true_rank)
data = (rng.normal(size=(2000, true_rank)) * scales) @ frame
data += rng.normal(scale=1e-3, size=data.shape)

spectrum = compute_spectrum(data)  # uncentered: shells radiate from the origin
print(f"rank {spectrum.rank}, top values: {np.round(spectrum.values[:5], 4)}")

curve = evr_curve(spectrum.values)
for k in (1, 5, 10, 20, 25, 30):
    print(f"  cumulative explained variance at k={k:>2}: {curve[k - 1][1]:.6f}")

# Pick the reduced dimension where the curve saturates.
reducer = build_reducer(data, target_dim=true_rank)
print(f"\nreducer {reducer.ambient_dim} -> {reducer.reduced_dim}, "
      f"captured ratio {reducer.captured_variance_ratio:.9f}")

# Round trips through the reducer are near-lossless for in-span data.
x = data[17]
back = lift(reduce(x, reducer), reducer)
rel = np.linalg.norm(back - x) / np.linalg.norm(x)
print(f"lift(reduce(x)) relative error: {rel:.3e}")

# The reducer is an orthogonal projector onto its span: applying it twice
# changes nothing, and it can only shrink norms.
once = lift(reduce(x, reducer), reducer)
twice = lift(reduce(once, reducer), reducer)
print(f"projector idempotence residual: {np.linalg.norm(twice - once):.3e}")
print(f"norm before {np.linalg.norm(x):.4f} vs after {np.linalg.norm(once):.4f}")

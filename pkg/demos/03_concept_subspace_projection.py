"""The heart of editioning: build a concept subspace and project into it.

Text embeddings of template prompts sit on a thin shell around the origin
(here ~250, like real prompt embeddings). An edition is the span of the
top principal axes of one concept's embeddings; projecting any prompt into
it drags the prompt onto that concept while magnitude compensation keeps
it on the shell, where the downstream generator expects its conditioning.

Run:  python demos/03_concept_subspace_projection.py
"""

import numpy as np

from editioner import ConceptSpec, TemplateSlot, build_subspace, project, shell_report

rng = np.random.default_rng(1)
dim = 40

# Two synthetic concepts, "cat" and "dog": each point is a subject
# direction plus a shared context (verb/preposition/object structure),
# rescaled onto a norm-250 shell with < 2% spread.
axes = np.linalg.qr(rng.normal(size=(dim, 13)))[0].T
subj_cat, subj_dog, ctx_mean, ctx_axes = axes[0], axes[1], axes[2], axes[3:]


def cluster(subject_dir, n):
    points = np.empty((n, dim))
    for i in range(n):
        variation = rng.normal(size=10)
        variation *= 60.0 / np.linalg.norm(variation)
        raw = 150.0 * subject_dir + 180.0 * ctx_mean + variation @ ctx_axes
        points[i] = raw * (250.0 * (1 + rng.uniform(-0.015, 0.015)) / np.linalg.norm(raw))
    return points


cats = cluster(subj_cat, 800)
dogs = cluster(subj_dog, 500)
print("cat cluster shell:", shell_report(cats))

# Build the cat edition at the 95% explained-variance threshold.
cat_edition = build_subspace(cats, ConceptSpec(TemplateSlot.SUBJECT, "cat"), 0.95)
print(f"\ncat edition: k={cat_edition.k} of working dim {cat_edition.working_dim}, "
      f"captures {cat_edition.cumulative_ratio():.4f}")

# Project "dog" prompts into the cat edition.
cat_mean = cats.mean(axis=0)


def cos_dist(a, b):
    return 1 - a @ b / (np.linalg.norm(a) * np.linalg.norm(b))


before, after, etas = [], [], []
for dog in dogs:
    result = project(dog, cat_edition)
    before.append(cos_dist(dog, cat_mean))
    after.append(cos_dist(result.vector, cat_mean))
    etas.append(result.eta)
print(f"\ncosine distance to the cat direction:")
print(f"  before projection: {np.mean(before):.3f} +/- {np.std(before):.3f}")
print(f"  after projection : {np.mean(after):.3f} +/- {np.std(after):.3f}")

# Magnitude compensation: the projected prompts stay on the shell.
sample = dogs[0]
compensated = project(sample, cat_edition)
naive = project(sample, cat_edition, mode="naive")
print(f"\ninput norm            : {np.linalg.norm(sample):.3f}")
print(f"compensated output    : {np.linalg.norm(compensated.vector):.3f} "
      f"(eta {compensated.eta:.4f})")
print(f"naive output          : {np.linalg.norm(naive.vector):.3f}  <- fell off the shell")
print(f"mean eta over the set : {np.mean(etas):.4f}")

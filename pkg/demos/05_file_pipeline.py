"""The whole pipeline as files, the way the CLI and the encoder bridge
exchange work: float32 NPY matrices with JSON manifest sidecars.

Everything here also exists as `editioner` subcommands; this script uses
the library API against a temp directory and prints what lands on disk.

Run:  python demos/05_file_pipeline.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from editioner import (
    ConceptSpec,
    EmbeddingMatrix,
    TemplateSlot,
    WordList,
    build_subspace,
    filter_concept,
    generate_all,
    project_batch,
    read_matrix,
    read_subspace,
    similarity_table,
    write_matrix,
    write_subspace,
)

workdir = Path(tempfile.mkdtemp(prefix="editioner-demo-"))
print("working in", workdir)

# 1. A corpus file: one prompt per line; line i <-> embedding row i.
words = WordList.default()
corpus = filter_concept(generate_all(words), ConceptSpec(TemplateSlot.SUBJECT, "cat"))
corpus_path = workdir / "cat_corpus.txt"
corpus.write_text(corpus_path)
print(f"\n1. corpus: {len(corpus)} lines -> {corpus_path.name}")

# 2. Embeddings: normally the bridge encodes the corpus with the real text
#    encoder; here a stand-in embedder keeps rows aligned with lines.
rng = np.random.default_rng(3)
mix = np.linalg.qr(rng.normal(size=(48, 16)))[0]  # fake encoder weights
def embed(line):
    h = abs(hash(line)) % (2**32)
    local = np.random.default_rng(h)
    return (mix @ local.normal(size=16)) * 250.0 / 4.0

emb = EmbeddingMatrix(np.vstack([embed(l) for l in corpus.lines()]).astype(np.float32),
                      source_hash=corpus.content_hash())
emb_path = workdir / "cat_embeddings.npy"
write_matrix(emb, emb_path)
print(f"2. embeddings: {emb.count} x {emb.dim} float32 -> {emb_path.name} "
      f"({emb_path.stat().st_size} bytes)")

# 3. The edition artifact: basis + spectrum + manifest sidecar.
edition = build_subspace(read_matrix(emb_path), ConceptSpec(TemplateSlot.SUBJECT, "cat"),
                         threshold=0.95)
sub_path = workdir / "cat_edition.npy"
write_subspace(edition, sub_path)
manifest = json.loads((workdir / "cat_edition.manifest.json").read_text())
print(f"3. edition: k={manifest['k']} dim={manifest['dim']} -> {sub_path.name} "
      f"+ manifest (kind={manifest['kind']})")

# 4. Round-trip is exact; orthonormality is re-validated on read.
loaded = read_subspace(sub_path)
print("4. round-trip bitwise equal:", loaded.basis.tobytes() == edition.basis.tobytes())

# 5. Batch-project some other embeddings into the edition and measure.
other = EmbeddingMatrix((rng.normal(size=(50, 48)) * 20).astype(np.float32))
projected, report = project_batch(other, loaded)
proj_path = workdir / "projected.npy"
write_matrix(projected, proj_path)
print(f"5. projected 50 rows (eta mean {report.summary()['eta_mean']:.3f}) "
      f"-> {proj_path.name}")

_, summary = similarity_table(other, projected, projected)
print(f"   d(project, replace)=0 sanity: {summary['d_project_replace_mean']:.1e}")
print(f"   d(input, project) mean     : {summary['d_input_replace_mean']:.3f}")

print("\nfiles on disk:")
for p in sorted(workdir.iterdir()):
    print("  ", p.name)

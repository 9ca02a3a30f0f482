import hashlib
import json

import numpy as np
import pytest

from editioner import EmbeddingMatrix, read_matrix, write_matrix
from editioner.cli import main

from oracles import random_orthonormal


def run(*argv):
    return main([str(a) for a in argv])


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture
def rank3_embeddings(tmp_path):
    """Embeddings that lie exactly in a 3-dim subspace of a 12-dim space."""
    rng = np.random.default_rng(70)
    frame = random_orthonormal(rng, 3, 12)
    data = (rng.normal(size=(300, 3)) @ frame).astype(np.float32)
    path = tmp_path / "rank3.npy"
    write_matrix(EmbeddingMatrix(data), path)
    return path, frame


# ---------------------------------------------------------------------------
# gen-prompts


def test_gen_prompts_full_corpus(tmp_path, capsys):
    out = tmp_path / "all.txt"
    assert run("gen-prompts", "--out", out) == 0
    assert len(out.read_text().splitlines()) == 31752
    assert "31752" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "all.manifest.json").read_text())
    assert manifest["count"] == 31752 and manifest["kind"] == "corpus"


def test_gen_prompts_concept_filter(tmp_path):
    out = tmp_path / "cat.txt"
    assert run("gen-prompts", "--concept", "subject=cat", "--out", out) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3528
    assert all(line.startswith("cat ") for line in lines)


def test_gen_prompts_eval_reproducible(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    args = ["gen-prompts", "--concept", "subject=cat", "--eval",
            "--per-category", "5", "--seed", "7"]
    assert run(*args, "--out", a) == 0
    assert run(*args, "--out", b) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 40


def test_gen_prompts_eval_requires_seed(tmp_path):
    rc = run("gen-prompts", "--concept", "subject=cat", "--eval",
             "--per-category", "5", "--out", tmp_path / "x.txt")
    assert rc == 2


def test_gen_prompts_unknown_concept(tmp_path):
    assert run("gen-prompts", "--concept", "subject=dragon",
               "--out", tmp_path / "x.txt") == 2


def test_gen_prompts_custom_wordlist(tmp_path):
    wl = tmp_path / "wl.json"
    wl.write_text(json.dumps({
        "subject": ["cat", "dog"], "verb": ["sleeping"],
        "preposition": ["on"], "object": ["grass", "sky", "desk"],
    }))
    out = tmp_path / "mini.txt"
    assert run("gen-prompts", "--wordlist", wl, "--out", out) == 0
    assert len(out.read_text().splitlines()) == 6


# ---------------------------------------------------------------------------
# build-reducer / build-subspace


def test_build_reducer_exact_rank(tmp_path, capsys, rank3_embeddings):
    emb, _ = rank3_embeddings
    out = tmp_path / "reducer.npy"
    assert run("build-reducer", "--embeddings", emb, "--target-dim", 3,
               "--out", out) == 0
    assert "1.000000" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "reducer.manifest.json").read_text())
    assert manifest["kind"] == "reducer" and manifest["reduced_dim"] == 3


def test_build_reducer_target_dim_too_large(tmp_path, rank3_embeddings):
    emb, _ = rank3_embeddings
    assert run("build-reducer", "--embeddings", emb, "--target-dim", 12,
               "--out", tmp_path / "r.npy") == 2


def test_build_subspace_rank3(tmp_path, capsys, rank3_embeddings):
    emb, frame = rank3_embeddings
    out = tmp_path / "sub.npy"
    assert run("build-subspace", "--embeddings", emb, "--concept", "subject=cat",
               "--out", out) == 0
    assert "k 3" in capsys.readouterr().out


def test_build_subspace_threshold_one_full_rank(tmp_path):
    rng = np.random.default_rng(71)
    emb = tmp_path / "full.npy"
    write_matrix(EmbeddingMatrix(rng.normal(size=(100, 6)).astype(np.float32)), emb)
    rc = run("build-subspace", "--embeddings", emb, "--concept", "subject=cat",
             "--threshold", "1.0", "--out", tmp_path / "s.npy")
    assert rc == 3


def test_build_subspace_through_reducer(tmp_path, capsys, rank3_embeddings):
    emb, _ = rank3_embeddings
    reducer = tmp_path / "reducer.npy"
    assert run("build-reducer", "--embeddings", emb, "--target-dim", 5,
               "--out", reducer) == 0
    out = tmp_path / "sub.npy"
    assert run("build-subspace", "--embeddings", emb, "--reducer", reducer,
               "--concept", "subject=cat", "--out", out) == 0
    assert "k 3" in capsys.readouterr().out.splitlines()[-1]


# ---------------------------------------------------------------------------
# project


def _build_subspace_fixture(tmp_path, rank3_embeddings):
    emb, frame = rank3_embeddings
    sub = tmp_path / "sub.npy"
    assert run("build-subspace", "--embeddings", emb, "--concept", "subject=cat",
               "--out", sub) == 0
    return emb, sub, frame


def test_project_in_span_is_identity(tmp_path, rank3_embeddings):
    emb, sub, _ = _build_subspace_fixture(tmp_path, rank3_embeddings)
    out = tmp_path / "proj.npy"
    assert run("project", "--embeddings", emb, "--subspace", sub, "--out", out) == 0
    original = read_matrix(emb).data
    projected = read_matrix(out).data
    assert np.allclose(projected, original, atol=1e-5)
    eta = json.loads((tmp_path / "proj.eta.json").read_text())
    assert eta["summary"]["eta_max"] == pytest.approx(1.0, abs=1e-6)


def test_project_naive_contracts(tmp_path, rank3_embeddings):
    emb, sub, frame = _build_subspace_fixture(tmp_path, rank3_embeddings)
    rng = np.random.default_rng(72)
    off = tmp_path / "off.npy"
    write_matrix(EmbeddingMatrix(rng.normal(size=(20, 12)).astype(np.float32)), off)
    out = tmp_path / "naive.npy"
    assert run("project", "--embeddings", off, "--subspace", sub,
               "--mode", "naive", "--out", out) == 0
    before = np.linalg.norm(read_matrix(off).data, axis=1)
    after = np.linalg.norm(read_matrix(out).data, axis=1)
    assert np.all(after < before)
    eta = json.loads((tmp_path / "naive.eta.json").read_text())
    assert eta["summary"]["eta_min"] > 1.0


def test_project_through_reducer_preserves_norms(tmp_path, rank3_embeddings):
    emb, _ = rank3_embeddings
    reducer = tmp_path / "reducer.npy"
    assert run("build-reducer", "--embeddings", emb, "--target-dim", 5,
               "--out", reducer) == 0
    sub = tmp_path / "sub.npy"
    assert run("build-subspace", "--embeddings", emb, "--reducer", reducer,
               "--concept", "subject=cat", "--out", sub) == 0
    out = tmp_path / "proj.npy"
    assert run("project", "--embeddings", emb, "--subspace", sub,
               "--reducer", reducer, "--out", out) == 0
    before = np.linalg.norm(read_matrix(emb).data.astype(np.float64), axis=1)
    after = np.linalg.norm(read_matrix(out).data.astype(np.float64), axis=1)
    assert np.allclose(after, before, rtol=1e-5)


def test_project_dim_mismatch(tmp_path, rank3_embeddings):
    emb, sub, _ = _build_subspace_fixture(tmp_path, rank3_embeddings)
    rng = np.random.default_rng(73)
    wrong = tmp_path / "wrong.npy"
    write_matrix(EmbeddingMatrix(rng.normal(size=(4, 7)).astype(np.float32)), wrong)
    assert run("project", "--embeddings", wrong, "--subspace", sub,
               "--out", tmp_path / "o.npy") == 2


def test_project_drop_excludes_orthogonal_rows(tmp_path):
    # subspace on exact coordinate axes, so a row supported elsewhere is
    # orthogonal even after float32 storage
    from editioner import write_subspace
    from editioner.subspace import ConceptSubspace

    sub_obj = ConceptSubspace(np.eye(12)[:3], np.ones(3), 3.0, evr_threshold=0.95)
    sub = tmp_path / "axes.npy"
    write_subspace(sub_obj, sub)
    rng = np.random.default_rng(76)
    rows = rng.normal(size=(3, 12)).astype(np.float32)
    rows[1, :3] = 0.0  # no component inside the subspace
    mixed = tmp_path / "mixed.npy"
    write_matrix(EmbeddingMatrix(rows), mixed)
    out = tmp_path / "dropped.npy"
    assert run("project", "--embeddings", mixed, "--subspace", sub,
               "--on-orthogonal", "drop", "--out", out) == 0
    assert read_matrix(out).count == 2
    eta = json.loads((tmp_path / "dropped.eta.json").read_text())
    assert eta["summary"]["orthogonal_rows"] == [1]
    assert eta["summary"]["rows_out"] == 2
    # --strict turns the same situation into a data error
    assert run("project", "--embeddings", mixed, "--subspace", sub,
               "--on-orthogonal", "drop", "--strict", "--out", out) == 3


def test_project_missing_file_is_io_error(tmp_path, rank3_embeddings):
    emb, sub, _ = _build_subspace_fixture(tmp_path, rank3_embeddings)
    assert run("project", "--embeddings", tmp_path / "absent.npy",
               "--subspace", sub, "--out", tmp_path / "o.npy") == 4


# ---------------------------------------------------------------------------
# diagnose


def test_diagnose_shell_unit_norms(tmp_path, capsys):
    rng = np.random.default_rng(74)
    rows = rng.normal(size=(30, 5))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    emb = tmp_path / "unit.npy"
    write_matrix(EmbeddingMatrix(rows.astype(np.float32)), emb)
    report = tmp_path / "shell.json"
    hist = tmp_path / "shell.csv"
    assert run("diagnose", "shell", "--embeddings", emb, "--out", report,
               "--histogram", hist, "--bins", 10) == 0
    doc = json.loads(report.read_text())
    assert doc["summary"]["mean_norm"] == pytest.approx(1.0, abs=1e-6)
    assert doc["summary"]["std_norm"] == pytest.approx(0.0, abs=1e-6)
    assert hist.read_text().splitlines()[0] == "bin_left,bin_right,count"


def test_diagnose_evr_values_fixture(tmp_path):
    values = tmp_path / "values.json"
    values.write_text("[3.0, 1.0]")
    report = tmp_path / "evr.json"
    assert run("diagnose", "evr", "--values", values, "--out", report) == 0
    doc = json.loads(report.read_text())
    assert doc["rows"][0] == {"k": 1, "cumulative_ratio": 0.75}
    assert doc["rows"][1] == {"k": 2, "cumulative_ratio": 1.0}


def test_diagnose_evr_needs_one_source(tmp_path):
    assert run("diagnose", "evr", "--out", tmp_path / "x.json") == 2


def test_diagnose_similarity(tmp_path, capsys):
    rng = np.random.default_rng(75)
    base = rng.normal(size=(12, 6)).astype(np.float32)
    inputs, projected, replaced = (tmp_path / n for n in ("i.npy", "p.npy", "r.npy"))
    write_matrix(EmbeddingMatrix(base), inputs)
    write_matrix(EmbeddingMatrix(base + 0.1), projected)
    write_matrix(EmbeddingMatrix(base + 0.1), replaced)
    report = tmp_path / "sim.json"
    assert run("diagnose", "similarity", "--inputs", inputs, "--projected", projected,
               "--replaced", replaced, "--rows", "--out", report) == 0
    doc = json.loads(report.read_text())
    assert doc["summary"]["d_project_replace_mean"] == pytest.approx(0.0, abs=1e-9)
    assert len(doc["rows"]) == 12
    assert "distance" in doc["params"]["note"]


# ---------------------------------------------------------------------------
# interpolate / traverse


def test_interpolate_endpoints(tmp_path, rank3_embeddings):
    emb, sub, _ = _build_subspace_fixture(tmp_path, rank3_embeddings)
    out = tmp_path / "interp.npy"
    assert run("interpolate", "--embeddings", emb, "--subspace", sub,
               "--row-a", 0, "--row-b", 1, "--steps", 4, "--out", out) == 0
    path = read_matrix(out).data
    source = read_matrix(emb).data
    assert path.shape == (4, 12)
    assert np.allclose(path[0], source[0], atol=1e-5)  # row already in span
    assert np.allclose(path[-1], source[1], atol=1e-5)


def test_traverse_offsets(tmp_path, rank3_embeddings):
    emb, sub, _ = _build_subspace_fixture(tmp_path, rank3_embeddings)
    out = tmp_path / "trav.npy"
    assert run("traverse", "--embeddings", emb, "--subspace", sub, "--row", 0,
               "--component", 0, "--offsets=-1.0,0.0,1.0", "--out", out) == 0
    moved = read_matrix(out).data.astype(np.float64)
    assert moved.shape == (3, 12)
    assert np.linalg.norm(moved[0] - moved[1]) == pytest.approx(1.0, rel=1e-5)
    assert np.linalg.norm(moved[2] - moved[1]) == pytest.approx(1.0, rel=1e-5)


def test_traverse_bad_offsets(tmp_path, rank3_embeddings):
    emb, sub, _ = _build_subspace_fixture(tmp_path, rank3_embeddings)
    assert run("traverse", "--embeddings", emb, "--subspace", sub, "--row", 0,
               "--component", 0, "--offsets", "a,b", "--out", tmp_path / "t.npy") == 2


# ---------------------------------------------------------------------------
# config file handling


def test_config_file_supplies_flags(tmp_path):
    config = tmp_path / "config.json"
    out = tmp_path / "from_config.txt"
    config.write_text(json.dumps({"concept": "subject=cat", "out": str(out)}))
    assert run("gen-prompts", "--config", config) == 0
    assert len(out.read_text().splitlines()) == 3528


def test_config_flags_win_over_file(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"concept": "subject=cat"}))
    out = tmp_path / "dog.txt"
    assert run("gen-prompts", "--config", config, "--concept", "subject=dog",
               "--out", out) == 0
    assert out.read_text().splitlines()[0].startswith("dog ")


def test_config_unknown_key_rejected(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"conceptt": "subject=cat"}))
    assert run("gen-prompts", "--config", config, "--out", tmp_path / "x.txt") == 2


def test_rerun_byte_identical(tmp_path, rank3_embeddings):
    emb, _ = rank3_embeddings
    digests = []
    for name in ("one", "two"):
        sub = tmp_path / f"{name}.npy"
        assert run("build-subspace", "--embeddings", emb, "--concept",
                   "subject=cat", "--out", sub) == 0
        digests.append((digest(sub), digest(tmp_path / f"{name}.manifest.json")))
    assert digests[0][0] == digests[1][0]
    # manifests differ only in their own path-independent content
    a = json.loads((tmp_path / "one.manifest.json").read_text())
    b = json.loads((tmp_path / "two.manifest.json").read_text())
    assert a == b

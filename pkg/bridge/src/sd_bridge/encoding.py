"""Text encoders and the encode job: corpus lines -> float32 NPY rows.

The matrix row layout is the full token-embedding tensor flattened
row-major (token_count x hidden_size), i.e. the sequence fed to the
diffusion model's cross-attention, not the pooled vector. Output files are
plain NPY ('<f4') with a JSON manifest sidecar, the exact contract the
editioner toolkit reads.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .errors import CorpusError, MissingDependencyError
from .jobs import EncodeJob


class TextEncoder(Protocol):
    """What encode() needs: token counting plus batched embedding."""

    name: str
    token_count: int
    hidden_size: int

    def count_tokens(self, prompt: str) -> int: ...

    def encode_batch(self, prompts: Sequence[str]) -> np.ndarray: ...


class FakeEncoder:
    """Deterministic stand-in encoder for offline plumbing and smoke tests.

    Embeddings are seeded from a digest of (name, prompt), so a prompt
    always encodes to the same row and different prompts differ. Token
    count is words + 2, mimicking begin/end markers.
    """

    def __init__(self, token_count: int = 4, hidden_size: int = 8):
        self.token_count = token_count
        self.hidden_size = hidden_size
        self.name = f"fake:{token_count}x{hidden_size}"

    def count_tokens(self, prompt: str) -> int:
        return len(prompt.split()) + 2

    def encode_batch(self, prompts: Sequence[str]) -> np.ndarray:
        dim = self.token_count * self.hidden_size
        out = np.empty((len(prompts), dim), dtype=np.float32)
        for i, prompt in enumerate(prompts):
            digest = hashlib.sha256(f"{self.name}\x00{prompt}".encode()).digest()
            rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
            row = rng.standard_normal(dim)
            out[i] = (row * (250.0 / np.linalg.norm(row))).astype(np.float32)
        return out


class ClipTextEncoder:
    """The real text encoder of the diffusion model, via transformers."""

    def __init__(self, model_id: str, token_count: int = 77):
        try:
            import torch
            from transformers import CLIPTextModel, CLIPTokenizer
        except ImportError as exc:
            raise MissingDependencyError(
                "encoding with a real model needs torch and transformers"
            ) from exc
        self._torch = torch
        self.name = model_id
        self.tokenizer = CLIPTokenizer.from_pretrained(model_id)
        self.model = CLIPTextModel.from_pretrained(model_id)
        self.model.eval()
        self.token_count = token_count
        self.hidden_size = int(self.model.config.hidden_size)

    def count_tokens(self, prompt: str) -> int:
        return len(self.tokenizer(prompt).input_ids)

    def encode_batch(self, prompts: Sequence[str]) -> np.ndarray:
        tokens = self.tokenizer(
            list(prompts),
            padding="max_length",
            max_length=self.token_count,
            return_tensors="pt",
        )
        with self._torch.no_grad():
            hidden = self.model(tokens.input_ids).last_hidden_state
        batch = hidden.to(self._torch.float32).cpu().numpy()
        return np.ascontiguousarray(batch.reshape(batch.shape[0], -1))


def make_encoder(spec: str) -> TextEncoder:
    """'fake:<tokens>x<hidden>' builds the offline stub, anything else a real model."""
    if spec.startswith("fake:"):
        try:
            tokens, hidden = spec[len("fake:"):].split("x")
            return FakeEncoder(int(tokens), int(hidden))
        except ValueError as exc:
            raise CorpusError(f"bad fake encoder spec {spec!r}") from exc
    return ClipTextEncoder(spec)


def read_corpus(path: str | Path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise CorpusError(f"corpus {path} is empty")
    return lines


def encode(job: EncodeJob, encoder: TextEncoder | None = None) -> Path:
    """Run an encode job; returns the output path.

    Rows align 1:1 with corpus lines. Prompts longer than the token budget
    are rejected up front with their line number. Output is written
    batch-by-batch through a memory map, so large corpora never sit in
    memory whole.
    """
    if encoder is None:
        encoder = make_encoder(job.encoder)
    lines = read_corpus(job.corpus)
    for i, line in enumerate(lines):
        used = encoder.count_tokens(line)
        if used > job.max_tokens:
            raise CorpusError(
                f"prompt on line {i + 1} needs {used} tokens (budget {job.max_tokens})",
                line=i + 1,
            )
    dim = encoder.token_count * encoder.hidden_size
    out_path = Path(job.out)
    tmp_path = out_path.with_name(out_path.name + ".tmp")
    out = np.lib.format.open_memmap(
        tmp_path, mode="w+", dtype=np.float32, shape=(len(lines), dim)
    )
    for start in range(0, len(lines), job.batch_size):
        batch = lines[start : start + job.batch_size]
        out[start : start + len(batch)] = encoder.encode_batch(batch)
    out.flush()
    del out
    os.replace(tmp_path, out_path)
    corpus_digest = hashlib.sha256(Path(job.corpus).read_bytes()).hexdigest()
    manifest = {
        "kind": "embeddings",
        "dim": dim,
        "source_hash": corpus_digest,
        "created_from": [{"path": str(job.corpus), "sha256": corpus_digest}],
        "format_version": 1,
    }
    stem = out_path.name[: -len(".npy")] if out_path.name.endswith(".npy") else out_path.name
    out_path.with_name(stem + ".manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return out_path

"""Job descriptions for the three bridge commands, loaded from JSON files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import JobError

DEFAULT_TEXT_ENCODER = "openai/clip-vit-large-patch14"
DEFAULT_DIFFUSION_MODEL = "CompVis/stable-diffusion-v1-4"
TOKEN_COUNT = 77
HIDDEN_SIZE = 768


def _load(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise JobError(f"cannot load job file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise JobError("job file must hold a JSON object")
    return doc


def _take(doc: dict, allowed: set[str], required: set[str], path) -> dict:
    unknown = set(doc) - allowed
    if unknown:
        raise JobError(f"{path}: unknown job keys {sorted(unknown)}")
    missing = required - set(doc)
    if missing:
        raise JobError(f"{path}: missing job keys {sorted(missing)}")
    return doc


@dataclass
class EncodeJob:
    """Encode a prompt corpus (one prompt per line) into an NPY matrix.

    Row i of the output is the flattened token-embedding tensor of corpus
    line i; with the real encoder that is 77 x 768 = 59,136 coordinates.
    An ``encoder`` of the form ``fake:<tokens>x<hidden>`` selects the
    deterministic offline stub (for smoke tests and plumbing work).
    """

    corpus: str
    out: str
    encoder: str = DEFAULT_TEXT_ENCODER
    batch_size: int = 32
    max_tokens: int = TOKEN_COUNT

    @classmethod
    def from_file(cls, path: str | Path) -> "EncodeJob":
        doc = _take(
            _load(path),
            allowed={"corpus", "out", "encoder", "batch_size", "max_tokens"},
            required={"corpus", "out"},
            path=path,
        )
        job = cls(**doc)
        if job.batch_size < 1:
            raise JobError("batch_size must be >= 1")
        if job.max_tokens < 2:
            raise JobError("max_tokens must be >= 2")
        return job


@dataclass
class GenerateJob:
    """Render one image per embedding row by overriding the conditioning.

    The embeddings file must hold ambient-dimension rows (token_count x
    hidden_size flattened); the tokenizer is bypassed entirely. Seeds are
    per image: row i uses ``seed + i`` and is recorded in the index.
    """

    embeddings: str
    out_dir: str
    model: str = DEFAULT_DIFFUSION_MODEL
    seed: int = 0
    steps: int = 50
    guidance_scale: float = 7.5
    height: int = 512
    width: int = 512
    token_count: int = TOKEN_COUNT
    hidden_size: int = HIDDEN_SIZE
    source_prompts: str | None = None
    replaced_prompts: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "GenerateJob":
        doc = _take(
            _load(path),
            allowed={
                "embeddings", "out_dir", "model", "seed", "steps", "guidance_scale",
                "height", "width", "token_count", "hidden_size",
                "source_prompts", "replaced_prompts",
            },
            required={"embeddings", "out_dir"},
            path=path,
        )
        return cls(**doc)


@dataclass
class EvaluateJob:
    """Image-level metrics: 'clip_score', 'fid', or 'inception_score'.

    clip_score: for every (image, truth prompt, other prompt) triple,
    report the softmax probability of the truth prompt. fid compares two
    image sets; inception_score scores one.
    """

    kind: str
    out: str
    index: str | None = None
    pairs: str | None = None
    images_a: str | None = None
    images_b: str | None = None
    clip_model: str = DEFAULT_TEXT_ENCODER
    splits: int = 1

    @classmethod
    def from_file(cls, path: str | Path) -> "EvaluateJob":
        doc = _take(
            _load(path),
            allowed={
                "kind", "out", "index", "pairs", "images_a", "images_b",
                "clip_model", "splits",
            },
            required={"kind", "out"},
            path=path,
        )
        job = cls(**doc)
        if job.kind not in ("clip_score", "fid", "inception_score"):
            raise JobError(f"unknown evaluate kind {job.kind!r}")
        if job.kind == "clip_score" and (job.index is None or job.pairs is None):
            raise JobError("clip_score needs 'index' and 'pairs'")
        if job.kind == "fid" and (job.images_a is None or job.images_b is None):
            raise JobError("fid needs 'images_a' and 'images_b'")
        if job.kind == "inception_score" and job.images_a is None:
            raise JobError("inception_score needs 'images_a'")
        return job

"""Image-level metrics: CLIP-score softmax tables, FID, Inception Score.

The metric arithmetic is pure and separately testable; the heavy parts
(CLIP similarity scoring, Inception feature extraction or class
probabilities) are injected as callables, with loaders for the real
models behind optional imports.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import linalg as sla

from .errors import BridgeError, MissingDependencyError
from .jobs import EvaluateJob

# scorer(image_path, [prompt_a, prompt_b]) -> (score_a, score_b), higher = closer
ClipScorer = Callable[[str, Sequence[str]], tuple[float, float]]
# features(image_paths) -> (n, feat_dim) array
FeatureFn = Callable[[Sequence[str]], np.ndarray]
# probs(image_paths) -> (n, classes) array of class probabilities
ProbFn = Callable[[Sequence[str]], np.ndarray]


# ---------------------------------------------------------------------------
# metric arithmetic


def softmax_pair_probability(score_truth: float, score_other: float) -> float:
    """Probability mass the two-way softmax puts on the truth score."""
    a, b = float(score_truth), float(score_other)
    top = max(a, b)
    ea, eb = np.exp(a - top), np.exp(b - top)
    return float(ea / (ea + eb))


def frechet_distance(
    mean_a: np.ndarray, cov_a: np.ndarray, mean_b: np.ndarray, cov_b: np.ndarray
) -> float:
    """Frechet distance between two Gaussians given their moments."""
    diff = np.asarray(mean_a, float) - np.asarray(mean_b, float)
    covmean = sla.sqrtm(np.asarray(cov_a, float) @ np.asarray(cov_b, float))
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    value = diff @ diff + np.trace(cov_a) + np.trace(cov_b) - 2.0 * np.trace(covmean)
    return float(max(value, 0.0))


def fid_from_features(features_a: np.ndarray, features_b: np.ndarray) -> float:
    """FID of two feature sets (rows = images)."""
    fa = np.asarray(features_a, dtype=np.float64)
    fb = np.asarray(features_b, dtype=np.float64)
    if fa.ndim != 2 or fb.ndim != 2 or fa.shape[0] < 2 or fb.shape[0] < 2:
        raise BridgeError("FID needs two 2-D feature sets with >= 2 rows each")
    return frechet_distance(
        fa.mean(axis=0), np.cov(fa, rowvar=False),
        fb.mean(axis=0), np.cov(fb, rowvar=False),
    )


def inception_score_from_probs(probs: np.ndarray, splits: int = 1) -> float:
    """Inception Score from per-image class probabilities."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 1:
        raise BridgeError("inception score needs an (images, classes) matrix")
    if np.any(p < 0) or not np.allclose(p.sum(axis=1), 1.0, atol=1e-6):
        raise BridgeError("rows must be probability distributions")
    scores = []
    for chunk in np.array_split(p, splits):
        marginal = chunk.mean(axis=0, keepdims=True)
        kl = np.sum(chunk * (np.log(chunk + 1e-12) - np.log(marginal + 1e-12)), axis=1)
        scores.append(float(np.exp(kl.mean())))
    return float(np.mean(scores))


def clip_probability_table(
    image_paths: Sequence[str],
    prompt_pairs: Sequence[tuple[str, str]],
    scorer: ClipScorer,
) -> dict:
    """Per-image softmax probability of the truth prompt, plus mean/std."""
    if len(image_paths) != len(prompt_pairs):
        raise BridgeError(
            f"{len(image_paths)} images vs {len(prompt_pairs)} prompt pairs"
        )
    if not image_paths:
        raise BridgeError("no images to evaluate")
    rows = []
    for path, (truth, other) in zip(image_paths, prompt_pairs):
        score_truth, score_other = scorer(path, [truth, other])
        rows.append(
            {
                "image": str(path),
                "truth": truth,
                "other": other,
                "probability": softmax_pair_probability(score_truth, score_other),
            }
        )
    probabilities = np.array([r["probability"] for r in rows])
    return {
        "rows": rows,
        "mean": float(probabilities.mean()),
        "std": float(probabilities.std()),
        "count": len(rows),
    }


# ---------------------------------------------------------------------------
# real-model backends (optional)


def load_clip_scorer(model_id: str) -> ClipScorer:
    try:
        import torch
        from PIL import Image
        from transformers import CLIPModel, CLIPProcessor
    except ImportError as exc:
        raise MissingDependencyError(
            "clip_score needs torch, transformers, and pillow"
        ) from exc
    model = CLIPModel.from_pretrained(model_id)
    model.eval()
    processor = CLIPProcessor.from_pretrained(model_id)

    def scorer(image_path: str, prompts: Sequence[str]) -> tuple[float, float]:
        image = Image.open(image_path).convert("RGB")
        inputs = processor(
            text=list(prompts), images=image, return_tensors="pt", padding=True
        )
        with torch.no_grad():
            logits = model(**inputs).logits_per_image[0]
        return float(logits[0]), float(logits[1])

    return scorer


def _require_torchmetrics():
    try:
        import torchmetrics  # noqa: F401
    except ImportError as exc:
        raise MissingDependencyError(
            "FID/IS image backends need torchmetrics (metric arithmetic is "
            "available without it via fid_from_features/inception_score_from_probs)"
        ) from exc


# ---------------------------------------------------------------------------
# job runner


def _paths_from_index(index_path: str) -> list[str]:
    doc = json.loads(Path(index_path).read_text(encoding="utf-8"))
    base = Path(index_path).parent
    return [str(base / record["file"]) for record in doc["images"]]


def _paths_from_dir(directory: str) -> list[str]:
    return [str(p) for p in sorted(Path(directory).glob("*.png"))]


def evaluate(job: EvaluateJob, scorer: ClipScorer | None = None,
             features: FeatureFn | None = None, probs: ProbFn | None = None) -> Path:
    """Run an evaluate job; returns the report path."""
    out = Path(job.out)
    if job.kind == "clip_score":
        image_paths = _paths_from_index(job.index)
        pairs_doc = json.loads(Path(job.pairs).read_text(encoding="utf-8"))
        pairs = [(p["truth"], p["other"]) for p in pairs_doc]
        if scorer is None:
            scorer = load_clip_scorer(job.clip_model)
        table = clip_probability_table(image_paths, pairs, scorer)
        doc = {"kind": "clip_score", "summary": {k: table[k] for k in ("mean", "std", "count")},
               "rows": table["rows"]}
    elif job.kind == "fid":
        if features is None:
            _require_torchmetrics()
            raise MissingDependencyError("no built-in feature extractor wired yet")
        fa = features(_paths_from_dir(job.images_a))
        fb = features(_paths_from_dir(job.images_b))
        doc = {"kind": "fid", "summary": {"fid": fid_from_features(fa, fb)}}
    else:  # inception_score
        if probs is None:
            _require_torchmetrics()
            raise MissingDependencyError("no built-in classifier wired yet")
        p = probs(_paths_from_dir(job.images_a))
        doc = {
            "kind": "inception_score",
            "summary": {"inception_score": inception_score_from_probs(p, job.splits)},
        }
    out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return out

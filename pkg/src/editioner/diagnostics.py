"""Embedding-level measurements: shell geometry, cosine-distance tables,
and explained-variance curves.

All distances here are cosine distances, 1 - cosine similarity; reports
carry that definition in their header because similarity-style tables are
often labeled the other way around while holding distance-sized values.
Reports are emitted as JSON documents ({kind, params, rows?, summary}) and
histograms as CSV with bin_left,bin_right,count columns.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .spectral import _matrix_data

COSINE_NOTE = "distance = 1 - cosine_similarity (values are distances, not similarities)"


@dataclass(frozen=True)
class ShellReport:
    """Distance-to-origin statistics of embedding rows.

    ``relative_spread`` (std/mean) is the thinness of the shell the rows
    sit on; population std is used.
    """

    mean_norm: float
    std_norm: float
    min_norm: float
    max_norm: float
    count: int
    relative_spread: float

    def to_dict(self) -> dict:
        return {
            "mean_norm": self.mean_norm,
            "std_norm": self.std_norm,
            "min_norm": self.min_norm,
            "max_norm": self.max_norm,
            "count": self.count,
            "relative_spread": self.relative_spread,
        }


@dataclass(frozen=True)
class SimilarityTriple:
    """Cosine distances for one prompt: input-vs-replaced and projected-vs-replaced."""

    d_input_replace: float
    d_project_replace: float
    index: int


def shell_report(data) -> ShellReport:
    """Per-row Euclidean norms, summarized."""
    arr = _matrix_data(data)
    norms = np.linalg.norm(arr.astype(np.float64), axis=1)
    mean = float(norms.mean())
    std = float(norms.std())
    return ShellReport(
        mean_norm=mean,
        std_norm=std,
        min_norm=float(norms.min()),
        max_norm=float(norms.max()),
        count=int(norms.shape[0]),
        relative_spread=float(std / mean) if mean > 0 else 0.0,
    )


def row_norms(data) -> np.ndarray:
    arr = _matrix_data(data)
    return np.linalg.norm(arr.astype(np.float64), axis=1)


def _cosine_distance_rows(a: np.ndarray, b: np.ndarray, label: str) -> np.ndarray:
    norms_a = np.linalg.norm(a, axis=1)
    norms_b = np.linalg.norm(b, axis=1)
    for name, norms in ((label[0], norms_a), (label[1], norms_b)):
        zero = np.nonzero(norms == 0.0)[0]
        if zero.size:
            raise DataError(f"zero-norm row {int(zero[0])} in {name}", row=int(zero[0]))
    cos = np.einsum("ij,ij->i", a, b) / (norms_a * norms_b)
    return 1.0 - np.clip(cos, -1.0, 1.0)


def similarity_table(
    inputs, projected, replaced
) -> tuple[list[SimilarityTriple], dict]:
    """Cosine-distance triples per row plus per-column mean and std.

    Compares each input embedding and its projected version against the
    "replaced" ground-truth embedding of the same row.
    """
    arr_in = _matrix_data(inputs).astype(np.float64)
    arr_pr = _matrix_data(projected).astype(np.float64)
    arr_re = _matrix_data(replaced).astype(np.float64)
    if not (arr_in.shape == arr_pr.shape == arr_re.shape):
        raise DataError(
            f"shape mismatch: inputs {arr_in.shape}, projected {arr_pr.shape}, "
            f"replaced {arr_re.shape}"
        )
    d_ir = _cosine_distance_rows(arr_in, arr_re, ("inputs", "replaced"))
    d_pr = _cosine_distance_rows(arr_pr, arr_re, ("projected", "replaced"))
    triples = [
        SimilarityTriple(float(d_ir[i]), float(d_pr[i]), i)
        for i in range(arr_in.shape[0])
    ]
    summary = {
        "d_input_replace_mean": float(d_ir.mean()),
        "d_input_replace_std": float(d_ir.std()),
        "d_project_replace_mean": float(d_pr.mean()),
        "d_project_replace_std": float(d_pr.std()),
        "count": int(arr_in.shape[0]),
    }
    return triples, summary


def evr_curve(values) -> list[tuple[int, float]]:
    """Cumulative explained-variance ratio at each rank; ends exactly at 1."""
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 1 or vals.size < 1:
        raise DataError("values must be a non-empty 1-D sequence")
    if not np.isfinite(vals).all() or np.any(vals < 0):
        raise DataError("values must be finite and nonnegative")
    cum = np.cumsum(vals)
    if cum[-1] <= 0:
        raise DataError("all values are zero")
    ratios = cum / cum[-1]
    return [(i + 1, float(ratios[i])) for i in range(vals.size)]


# ---------------------------------------------------------------------------
# report emission


def write_report(path: str | Path, kind: str, params: dict, summary: dict,
                 rows: list | None = None) -> None:
    doc: dict = {"kind": kind, "params": params}
    if rows is not None:
        doc["rows"] = rows
    doc["summary"] = summary
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def write_histogram_csv(path: str | Path, samples: np.ndarray, bins: int = 50) -> None:
    """CSV histogram of a 1-D sample: bin_left,bin_right,count."""
    counts, edges = np.histogram(np.asarray(samples, dtype=np.float64), bins=bins)
    lines = ["bin_left,bin_right,count"]
    for i, count in enumerate(counts):
        lines.append(f"{float(edges[i])!r},{float(edges[i + 1])!r},{int(count)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

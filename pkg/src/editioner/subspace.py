"""Concept subspaces: construction, rank selection, and projection.

A concept subspace is the span of the top-k uncentered principal axes of a
concept dataset's embeddings, with k chosen as the smallest rank whose
cumulative explained-variance ratio reaches a threshold (0.95 by default).
Prompt embeddings are confined to an edition by orthogonal projection onto
that span followed by rescaling with eta = |x| / |BB'x|, which restores the
input's norm and thereby its place on the embedding shell. The unscaled
("naive") projection is kept as a mode of its own: it strictly shrinks
norms for anything outside the span.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    DegenerateError,
    IntegrityError,
    OrthogonalInputError,
)
from .prompt_forge import ConceptSpec
from .spectral import as_vector, compute_spectrum

ORTHOGONAL_INPUT_TOL = 1e-10

PROJECTION_MODES = ("compensated", "naive")


@dataclass(eq=False)
class ConceptSubspace:
    """Truncated orthonormal principal basis of a concept dataset.

    ``basis`` holds k orthonormal rows in the working space (reduced or
    ambient); ``spectrum_values`` the k retained principal values, with
    ``total_variance`` the full mass they were selected from, so the rank
    choice can be re-checked after a round-trip.
    """

    basis: np.ndarray
    spectrum_values: np.ndarray
    total_variance: float
    concept: ConceptSpec | None = None
    evr_threshold: float = 0.95
    created_from: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=np.float64)
        self.spectrum_values = np.asarray(self.spectrum_values, dtype=np.float64)
        if self.basis.ndim != 2:
            raise DataError("subspace basis must be 2-D")
        k, dim = self.basis.shape
        if k < 1:
            raise DataError("subspace needs at least one axis")
        if k >= dim:
            raise DegenerateError(
                f"subspace rank k={k} does not reduce the working dim {dim}"
            )
        if self.spectrum_values.shape != (k,):
            raise DataError("need exactly one retained principal value per axis")
        gram = self.basis @ self.basis.T
        dev = float(np.max(np.abs(gram - np.eye(k))))
        if dev > 1e-5:
            raise IntegrityError(f"basis rows not orthonormal (deviation {dev:.3e})")

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    @property
    def working_dim(self) -> int:
        return self.basis.shape[1]

    def cumulative_ratio(self) -> float:
        """Explained-variance ratio captured by the k retained axes."""
        if self.total_variance <= 0:
            raise DataError("subspace has zero total variance")
        return float(np.cumsum(self.spectrum_values)[-1] / self.total_variance)

    def validate_rank_choice(self) -> None:
        """Re-check that k is the smallest rank reaching the threshold."""
        if self.total_variance <= 0:
            raise IntegrityError("stored total variance is not positive")
        ratios = np.cumsum(self.spectrum_values) / self.total_variance
        if ratios[-1] < self.evr_threshold:
            raise IntegrityError(
                f"retained axes reach only {ratios[-1]:.6f} < threshold "
                f"{self.evr_threshold}"
            )
        if self.k > 1 and ratios[-2] >= self.evr_threshold:
            raise IntegrityError("a smaller rank already reaches the threshold")


@dataclass(frozen=True)
class ProjectionResult:
    """Outcome of projecting one vector into a subspace.

    ``eta`` is the magnitude-compensation factor |x| / |BB'x|; it is
    reported in both modes but applied to ``vector`` only in compensated
    mode. ``raw_norm_ratio`` = |BB'x| / |x| = 1/eta records how much the
    plain projection shrank the input.
    """

    vector: np.ndarray
    eta: float
    raw_norm_ratio: float


@dataclass
class BatchProjectionReport:
    """Per-row eta values for a batch projection.

    ``etas`` aligns with the input rows (NaN for rows flagged orthogonal);
    ``orthogonal_rows`` lists inputs whose projection fell below the
    orthogonality threshold and were zeroed or dropped.
    """

    etas: np.ndarray
    orthogonal_rows: list[int]
    mode: str

    def summary(self) -> dict:
        valid = self.etas[np.isfinite(self.etas)]
        return {
            "mode": self.mode,
            "rows": int(self.etas.shape[0]),
            "orthogonal_rows": list(self.orthogonal_rows),
            "eta_mean": float(valid.mean()) if valid.size else None,
            "eta_std": float(valid.std()) if valid.size else None,
            "eta_min": float(valid.min()) if valid.size else None,
            "eta_max": float(valid.max()) if valid.size else None,
        }


def select_k(values, threshold: float = 0.95) -> int:
    """Smallest k whose cumulative share of the total value mass reaches the threshold."""
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"threshold must be in (0, 1], got {threshold}")
    vals = np.asarray(values, dtype=np.float64)
    if vals.ndim != 1 or vals.size < 1:
        raise DataError("values must be a non-empty 1-D sequence")
    if not np.isfinite(vals).all() or np.any(vals < 0):
        raise DataError("values must be finite and nonnegative")
    if np.any(np.diff(vals) > 0):
        raise DataError("values must be sorted descending")
    cum = np.cumsum(vals)
    total = cum[-1]
    if total <= 0:
        raise DataError("all principal values are zero")
    return int(np.argmax(cum / total >= threshold)) + 1


def build_subspace(
    data,
    concept: ConceptSpec | None,
    threshold: float = 0.95,
    created_from: Sequence[dict] = (),
) -> ConceptSubspace:
    """Build a concept subspace from that concept's embedding matrix.

    Computes the uncentered spectrum of the rows, picks k at the
    explained-variance threshold, and truncates the basis. The concept is
    recorded as provenance; the rows are trusted to be its dataset.
    """
    spectrum = compute_spectrum(data, center=False)
    k = select_k(spectrum.values, threshold)
    dim = spectrum.axes.shape[1]
    if k >= dim:
        raise DegenerateError(
            f"threshold {threshold} keeps k={k} of working dim {dim}: no reduction"
        )
    return ConceptSubspace(
        basis=spectrum.axes[:k],
        spectrum_values=spectrum.values[:k],
        total_variance=spectrum.total_variance,
        concept=concept,
        evr_threshold=float(threshold),
        created_from=tuple(created_from),
    )


def _project_kernel(vec: np.ndarray, basis: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Shared arithmetic for single and batch projection: (BB'x, |x|, |BB'x|)."""
    naive = basis.T @ (basis @ vec)
    return naive, float(np.linalg.norm(vec)), float(np.linalg.norm(naive))


def project(
    x, subspace: ConceptSubspace, mode: str = "compensated"
) -> ProjectionResult:
    """Project a vector into the subspace, restoring its norm by default.

    Compensated mode returns eta * BB'x with eta = |x| / |BB'x|, so the
    output norm equals the input norm; naive mode returns BB'x unscaled.
    Inputs essentially orthogonal to the span (|BB'x| < 1e-10 |x|) are
    rejected rather than blown up.
    """
    if mode not in PROJECTION_MODES:
        raise ConfigError(f"mode must be one of {PROJECTION_MODES}, got {mode!r}")
    vec = as_vector(x, dim=subspace.working_dim)
    naive, in_norm, out_norm = _project_kernel(vec, subspace.basis)
    if in_norm == 0.0:
        raise DataError("cannot project the zero vector")
    if out_norm < ORTHOGONAL_INPUT_TOL * in_norm:
        raise OrthogonalInputError(
            f"input is orthogonal to the subspace (norm ratio {out_norm / in_norm:.3e})"
        )
    eta = in_norm / out_norm
    vector = eta * naive if mode == "compensated" else naive
    return ProjectionResult(vector=vector, eta=eta, raw_norm_ratio=out_norm / in_norm)


def project_batch(
    matrix,
    subspace: ConceptSubspace,
    mode: str = "compensated",
    on_orthogonal: str = "zero",
):
    """Row-wise projection of a matrix; returns (projected matrix, report).

    Rows that would raise OrthogonalInputError are collected in the report
    and either zeroed in place (``on_orthogonal='zero'``) or excluded from
    the output (``'drop'``). Each row goes through exactly the same
    arithmetic as ``project``, so batch output matches stacked single
    projections bit for bit.
    """
    from .tensor_store import EmbeddingMatrix

    if mode not in PROJECTION_MODES:
        raise ConfigError(f"mode must be one of {PROJECTION_MODES}, got {mode!r}")
    if on_orthogonal not in ("zero", "drop"):
        raise ConfigError(f"on_orthogonal must be 'zero' or 'drop', got {on_orthogonal!r}")
    is_embedding = isinstance(matrix, EmbeddingMatrix)
    arr = matrix.data if is_embedding else np.asarray(matrix)
    if arr.ndim != 2:
        raise DataError("project_batch needs a 2-D matrix")
    if arr.shape[1] != subspace.working_dim:
        raise DataError(
            f"matrix dim {arr.shape[1]} != subspace working dim {subspace.working_dim}"
        )
    rows, dim = arr.shape
    etas = np.full(rows, np.nan)
    out = np.zeros((rows, dim), dtype=np.float64)
    orthogonal: list[int] = []
    for i in range(rows):
        vec = arr[i].astype(np.float64)
        naive, in_norm, out_norm = _project_kernel(vec, subspace.basis)
        if in_norm == 0.0:
            raise DataError(f"zero-norm row at index {i}", row=i)
        if out_norm < ORTHOGONAL_INPUT_TOL * in_norm:
            orthogonal.append(i)
            continue
        eta = in_norm / out_norm
        etas[i] = eta
        out[i] = eta * naive if mode == "compensated" else naive
    if on_orthogonal == "drop" and orthogonal:
        keep = np.setdiff1d(np.arange(rows), np.array(orthogonal))
        out = out[keep]
    report = BatchProjectionReport(etas=etas, orthogonal_rows=orthogonal, mode=mode)
    if is_embedding:
        return EmbeddingMatrix(out.astype(np.float32), source_hash=matrix.source_hash), report
    return out, report


def interpolate(a, b, subspace: ConceptSubspace, steps: int) -> list[np.ndarray]:
    """Evenly spaced linear interpolants between two compensated projections.

    Returns v_t = (1-t) a' + t b' for t = 0, 1/(steps-1), ..., 1. The
    endpoints are the projections themselves, and every interpolant stays
    inside the span (which is closed under linear combination); no
    re-compensation is applied in between.
    """
    if steps < 2:
        raise ConfigError(f"steps must be >= 2, got {steps}")
    pa = project(a, subspace).vector
    pb = project(b, subspace).vector
    return [(1.0 - t) * pa + t * pb for t in np.linspace(0.0, 1.0, steps)]


def traverse(
    x,
    subspace: ConceptSubspace,
    component_index: int,
    offsets: Sequence[float],
    sigma_units: bool = False,
) -> list[np.ndarray]:
    """Move a projected embedding along one principal axis of the subspace.

    Offsets are in raw embedding-norm units; with ``sigma_units`` they are
    multiplied by the axis's root-mean-square coefficient
    sqrt(spectrum_values[i]). Results stay in the span and are not
    re-compensated.
    """
    if not 0 <= component_index < subspace.k:
        raise ConfigError(
            f"component_index must be in [0, {subspace.k}), got {component_index}"
        )
    base = project(x, subspace).vector
    axis = subspace.basis[component_index]
    scale = float(np.sqrt(subspace.spectrum_values[component_index])) if sigma_units else 1.0
    return [base + (float(o) * scale) * axis for o in offsets]

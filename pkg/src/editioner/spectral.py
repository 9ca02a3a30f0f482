"""Principal-axis machinery: spectra, the global dimensionality reducer,
and movement between the ambient and reduced spaces.

The decomposition is of the raw second-moment matrix X'X/m by default, i.e.
PCA without mean removal; prompt embeddings sit on a thin shell around the
origin, so the subspaces of interest radiate from the origin and centering
is deliberately skipped. Pass ``center=True`` for conventional PCA.

Two equivalent routes are used depending on shape: an eigendecomposition of
the d x d second-moment matrix when d <= m (accumulated over row chunks in
a fixed order, streamable from disk), and of the m x m Gram matrix
otherwise. Accumulation is always in float64 regardless of storage
precision. Axis signs are normalized (largest-magnitude entry positive) and
eigenvalue ties keep the underlying solver's order, so results are
bit-reproducible run to run.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigError, DataError, DimError, IntegrityError

_EPS = np.finfo(np.float64).eps


def _matrix_data(data) -> np.ndarray:
    """Accept an EmbeddingMatrix or a plain 2-D array; return the ndarray."""
    arr = getattr(data, "data", data)
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise DataError(f"expected a 2-D matrix, got ndim={arr.ndim}")
    if not np.isfinite(arr).all():
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise DataError(
            f"non-finite entry at ({bad[0]}, {bad[1]})", row=int(bad[0]), col=int(bad[1])
        )
    return arr


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate a 1-D finite vector, returning it as float64."""
    vec = np.asarray(x, dtype=np.float64)
    if vec.ndim != 1:
        raise DataError(f"expected a 1-D vector, got ndim={vec.ndim}")
    if not np.isfinite(vec).all():
        col = int(np.argwhere(~np.isfinite(vec))[0][0])
        raise DataError(f"non-finite entry at component {col}", col=col)
    if dim is not None and vec.shape[0] != dim:
        raise DimError(f"vector has dim {vec.shape[0]}, expected {dim}")
    return vec


@dataclass(eq=False)
class Spectrum:
    """Principal axes (one per row) ranked by descending principal values.

    ``values[i]`` is the mean squared projection of the data onto
    ``axes[i]`` (eigenvalue of the second-moment matrix); ``total_variance``
    is the full principal-value mass, including any tail not represented in
    ``values`` when the spectrum was truncated.
    """

    axes: np.ndarray
    values: np.ndarray
    total_variance: float

    def __post_init__(self):
        self.axes = np.asarray(self.axes, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.axes.ndim != 2 or self.values.ndim != 1:
            raise DataError("spectrum needs 2-D axes and 1-D values")
        if self.axes.shape[0] != self.values.shape[0]:
            raise DataError("one principal value per axis required")
        if np.any(self.values < 0):
            raise DataError("principal values must be nonnegative")
        if np.any(np.diff(self.values) > 0):
            raise DataError("principal values must be sorted descending")
        gram = self.axes @ self.axes.T
        dev = float(np.max(np.abs(gram - np.eye(self.axes.shape[0]))))
        if dev > 1e-5:
            raise IntegrityError(f"axes not orthonormal (max deviation {dev:.3e})")

    @property
    def rank(self) -> int:
        return self.axes.shape[0]

    def explained_variance_ratios(self) -> np.ndarray:
        """Cumulative explained-variance ratio at each k = 1..rank."""
        if self.total_variance <= 0:
            raise DataError("spectrum has zero total variance")
        return np.cumsum(self.values) / self.total_variance


@dataclass(eq=False)
class ReducedSpace:
    """Orthonormal basis (rows) mapping ambient dim d down to r < d."""

    basis: np.ndarray
    captured_variance_ratio: float
    created_from: tuple = ()

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=np.float64)
        if self.basis.ndim != 2:
            raise DataError("reducer basis must be 2-D")
        r, d = self.basis.shape
        if not 1 <= r < d:
            raise ConfigError(f"reducer must satisfy 1 <= r < d, got r={r}, d={d}")
        gram = self.basis @ self.basis.T
        dev = float(np.max(np.abs(gram - np.eye(r))))
        if dev > 1e-5:
            raise IntegrityError(f"reducer basis not orthonormal (deviation {dev:.3e})")

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    @property
    def reduced_dim(self) -> int:
        return self.basis.shape[0]


# ---------------------------------------------------------------------------
# spectrum computation


def _iter_blocks(arr: np.ndarray, chunk_rows: int) -> Iterator[np.ndarray]:
    for start in range(0, arr.shape[0], chunk_rows):
        yield arr[start : start + chunk_rows]


def _accumulate_mean(chunks: Iterable[np.ndarray], dim: int, count: int) -> np.ndarray:
    total = np.zeros(dim, dtype=np.float64)
    for block in chunks:
        total += block.astype(np.float64, copy=False).sum(axis=0)
    return total / count


def _accumulate_moment(
    chunks: Iterable[np.ndarray], dim: int, count: int, mean: np.ndarray | None
) -> np.ndarray:
    moment = np.zeros((dim, dim), dtype=np.float64)
    for block in chunks:
        work = block.astype(np.float64, copy=False)
        if mean is not None:
            work = work - mean
        moment += work.T @ work
    return moment / count


def _descending_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    evals, evecs = np.linalg.eigh(matrix)
    order = np.argsort(-evals, kind="stable")
    return evals[order], evecs[:, order]


def _clamp_values(values: np.ndarray) -> np.ndarray:
    scale = float(values[0]) if values.size and values[0] > 0 else 1.0
    tol = max(1e-10, 32.0 * _EPS * scale)
    if np.any(values < -tol):
        raise DataError(f"eigensolver returned a negative principal value {values.min():.3e}")
    return np.clip(values, 0.0, None)


def _fix_signs(axes: np.ndarray) -> np.ndarray:
    # Deterministic orientation: first entry of largest magnitude made positive.
    for i in range(axes.shape[0]):
        j = int(np.argmax(np.abs(axes[i])))
        if axes[i, j] < 0:
            axes[i] = -axes[i]
    return axes


def _complete_basis(axes: list[np.ndarray], dim: int, needed: int) -> list[np.ndarray]:
    """Deterministically extend a partial orthonormal set with canonical vectors."""
    out = list(axes)
    completed = []
    for j in range(dim):
        if len(completed) == needed:
            break
        w = np.zeros(dim, dtype=np.float64)
        w[j] = 1.0
        for _ in range(2):  # twice-is-enough Gram-Schmidt
            for b in out:
                w = w - (b @ w) * b
        norm = float(np.linalg.norm(w))
        if norm > 1e-6:
            w /= norm
            out.append(w)
            completed.append(w)
    if len(completed) < needed:
        raise DataError("could not complete an orthonormal basis")
    return out


def _spectrum_covariance(
    chunks: Iterable[np.ndarray], dim: int, count: int, mean: np.ndarray | None
) -> Spectrum:
    moment = _accumulate_moment(chunks, dim, count, mean)
    evals, evecs = _descending_eigh(moment)
    values = _clamp_values(evals)
    axes = _fix_signs(np.ascontiguousarray(evecs.T))
    return Spectrum(axes, values, float(values.sum()))


def _spectrum_gram(work: np.ndarray, count: int) -> Spectrum:
    m, d = work.shape
    gram = (work @ work.T) / count
    evals, evecs = _descending_eigh(gram)
    values = _clamp_values(evals)
    rank_tol = values[0] * max(m, d) * _EPS if values[0] > 0 else 0.0
    axes: list[np.ndarray] = []
    for i in range(m):
        if values[i] <= rank_tol:
            break
        axes.append((work.T @ evecs[:, i]) / np.sqrt(count * values[i]))
    axes = _complete_basis(axes, d, needed=m - len(axes))
    stacked = _fix_signs(np.vstack(axes))
    return Spectrum(stacked, values, float(values.sum()))


def compute_spectrum(data, center: bool = False, chunk_rows: int = 4096) -> Spectrum:
    """Full principal spectrum of a data matrix: min(m, d) axes and values.

    Parameters
    ----------
    data : EmbeddingMatrix or (m, d) array_like
        Sample rows. Needs m >= 2.
    center : bool
        If False (default), decompose the raw second-moment matrix X'X/m.
        If True, subtract the row mean first (conventional PCA).
    chunk_rows : int
        Row block size for the fixed-order float64 accumulation.
    """
    arr = _matrix_data(data)
    m, d = arr.shape
    if m < 2:
        raise DataError(f"need at least 2 rows to compute a spectrum, got {m}")
    mean = None
    if center:
        mean = _accumulate_mean(_iter_blocks(arr, chunk_rows), d, m)
    if d <= m:
        return _spectrum_covariance(_iter_blocks(arr, chunk_rows), d, m, mean)
    work = arr.astype(np.float64, copy=True)
    if mean is not None:
        work -= mean
    return _spectrum_gram(work, m)


def spectrum_from_file(
    path, center: bool = False, chunk_rows: int | None = None
) -> Spectrum:
    """Spectrum of a stored matrix without loading it whole (when d <= m).

    Streams the second-moment accumulation over row chunks; bitwise
    identical to ``compute_spectrum`` on the loaded matrix at equal
    ``chunk_rows``. The Gram route (m < d) still loads the rows.
    """
    from . import tensor_store

    rows = chunk_rows if chunk_rows is not None else tensor_store.chunk_rows_default()
    m, d = tensor_store.matrix_info(path)
    if m < 2:
        raise DataError(f"need at least 2 rows to compute a spectrum, got {m}")
    if d <= m:
        mean = None
        if center:
            mean = _accumulate_mean(tensor_store.iter_matrix_chunks(path, rows), d, m)
        return _spectrum_covariance(
            tensor_store.iter_matrix_chunks(path, rows), d, m, mean
        )
    return compute_spectrum(tensor_store.read_matrix(path), center=center, chunk_rows=rows)


# ---------------------------------------------------------------------------
# reducer


def build_reducer(data, target_dim: int) -> ReducedSpace:
    """Top ``target_dim`` uncentered principal axes, as a reusable reducer."""
    arr = _matrix_data(data)
    m, d = arr.shape
    if not 1 <= target_dim < min(m, d):
        raise ConfigError(
            f"target_dim must satisfy 1 <= target_dim < min(m, d) = {min(m, d)}, "
            f"got {target_dim}"
        )
    spectrum = compute_spectrum(arr, center=False)
    if spectrum.total_variance <= 0:
        raise DataError("data has zero total variance; cannot build a reducer")
    ratio = float(spectrum.values[:target_dim].sum() / spectrum.total_variance)
    return ReducedSpace(spectrum.axes[:target_dim], captured_variance_ratio=ratio)


def reduce(x, space: ReducedSpace):
    """Coordinates of ambient-space input in the reduced basis.

    Vectors map to length-r vectors; matrices row-wise, preserving row
    count. EmbeddingMatrix inputs come back as EmbeddingMatrix.
    """
    basis = space.basis
    if hasattr(x, "data") and hasattr(x, "source_hash"):  # EmbeddingMatrix
        if x.dim != space.ambient_dim:
            raise DimError(f"matrix dim {x.dim} != ambient dim {space.ambient_dim}")
        reduced = x.data.astype(np.float64) @ basis.T
        out = type(x)(reduced.astype(np.float32), source_hash=x.source_hash)
        return out
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        if arr.shape[0] != space.ambient_dim:
            raise DimError(f"vector dim {arr.shape[0]} != ambient dim {space.ambient_dim}")
        return basis @ arr
    if arr.ndim == 2:
        if arr.shape[1] != space.ambient_dim:
            raise DimError(f"matrix dim {arr.shape[1]} != ambient dim {space.ambient_dim}")
        return arr @ basis.T
    raise DataError(f"cannot reduce an array with ndim={arr.ndim}")


def lift(x, space: ReducedSpace):
    """Map reduced coordinates back into the ambient space (basis' @ x)."""
    basis = space.basis
    if hasattr(x, "data") and hasattr(x, "source_hash"):  # EmbeddingMatrix
        if x.dim != space.reduced_dim:
            raise DimError(f"matrix dim {x.dim} != reduced dim {space.reduced_dim}")
        lifted = x.data.astype(np.float64) @ basis
        return type(x)(lifted.astype(np.float32), source_hash=x.source_hash)
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        if arr.shape[0] != space.reduced_dim:
            raise DimError(f"vector dim {arr.shape[0]} != reduced dim {space.reduced_dim}")
        return basis.T @ arr
    if arr.ndim == 2:
        if arr.shape[1] != space.reduced_dim:
            raise DimError(f"matrix dim {arr.shape[1]} != reduced dim {space.reduced_dim}")
        return arr @ basis
    raise DataError(f"cannot lift an array with ndim={arr.ndim}")

"""Bit-exact storage for embedding matrices, reducers, and subspace artifacts.

Binary payloads are NPY v1.0 files; embedding matrices are little-endian
float32 ('<f4'), orthonormal bases are stored at full float64 precision
('<f8') so that round-trips preserve them bitwise. Every artifact gets a
JSON manifest sidecar ``<name>.manifest.json``.

Matrices can be written and read in row chunks so corpora at full
77x768-token resolution (tens of GB) never have to fit in memory.
"""

from __future__ import annotations

import ast
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    FormatError,
    IntegrityError,
    IoError,
)
from .prompt_forge import ConceptSpec, TemplateSlot
from .spectral import ReducedSpace
from .subspace import ConceptSubspace

_MAGIC = b"\x93NUMPY"
_VERSION = b"\x01\x00"
_HEADER_ALIGN = 64
_DTYPES = {"<f4": np.dtype("<f4"), "<f8": np.dtype("<f8")}

DEFAULT_CHUNK_ROWS = 4096
ORTHONORMALITY_TOL = 1e-5

MANIFEST_KINDS = ("embeddings", "reducer", "subspace")
MANIFEST_FORMAT_VERSION = 1

# Manifest keys, in serialization order. Optional keys are omitted when None.
_MANIFEST_KEY_ORDER = (
    "kind",
    "dim",
    "reduced_dim",
    "concept_slot",
    "concept_word",
    "source_hash",
    "k",
    "evr_threshold",
    "spectrum_values",
    "total_variance",
    "captured_variance_ratio",
    "created_from",
    "format_version",
)


# ---------------------------------------------------------------------------
# domain types


@dataclass(eq=False)
class EmbeddingMatrix:
    """Row-major matrix of prompt embeddings: row i = embedding of corpus line i.

    Data is kept as C-contiguous float32 (the on-disk precision); all entries
    must be finite. ``source_hash`` optionally records the digest of the
    prompt corpus the rows were encoded from.
    """

    data: np.ndarray
    source_hash: str | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise DataError(f"embedding matrix must be 2-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DataError(f"embedding matrix must be at least 1x1, got {arr.shape}")
        _check_finite(arr, row_offset=0)
        self.data = arr

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass
class ArtifactManifest:
    """JSON sidecar describing a stored artifact.

    ``created_from`` lists the inputs as ``{"path": ..., "sha256": ...}``
    records. Kind-specific fields are present iff applicable.
    """

    kind: str
    dim: int
    reduced_dim: int | None = None
    concept_slot: str | None = None
    concept_word: str | None = None
    source_hash: str | None = None
    k: int | None = None
    evr_threshold: float | None = None
    spectrum_values: list[float] | None = None
    total_variance: float | None = None
    captured_variance_ratio: float | None = None
    created_from: list[dict] = field(default_factory=list)
    format_version: int = MANIFEST_FORMAT_VERSION

    def __post_init__(self):
        if self.kind not in MANIFEST_KINDS:
            raise ConfigError(f"unknown manifest kind {self.kind!r}")
        if self.format_version != MANIFEST_FORMAT_VERSION:
            raise FormatError(
                f"unsupported manifest format_version {self.format_version}"
            )

    def to_json(self) -> str:
        doc = {}
        for key in _MANIFEST_KEY_ORDER:
            value = getattr(self, key)
            if value is None:
                continue
            doc[key] = value
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ArtifactManifest":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"manifest is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise FormatError("manifest must be a JSON object")
        unknown = set(doc) - set(_MANIFEST_KEY_ORDER)
        if unknown:
            raise FormatError(f"manifest has unknown keys: {sorted(unknown)}")
        if "kind" not in doc or "dim" not in doc:
            raise FormatError("manifest is missing required keys 'kind'/'dim'")
        return cls(**doc)


def manifest_path(artifact_path: str | Path) -> Path:
    p = Path(artifact_path)
    stem = p.name[: -len(".npy")] if p.name.endswith(".npy") else p.name
    return p.with_name(stem + ".manifest.json")


def write_manifest(manifest: ArtifactManifest, artifact_path: str | Path) -> Path:
    path = manifest_path(artifact_path)
    try:
        path.write_text(manifest.to_json(), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write manifest {path}: {exc}") from exc
    return path


def read_manifest(artifact_path: str | Path) -> ArtifactManifest:
    path = manifest_path(artifact_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    return ArtifactManifest.from_json(text)


def file_digest(path: str | Path) -> str:
    """SHA-256 of a file, streamed."""
    h = hashlib.sha256()
    try:
        with open(path, "rb") as f:
            for block in iter(lambda: f.read(1 << 20), b""):
                h.update(block)
    except OSError as exc:
        raise IoError(f"cannot digest {path}: {exc}") from exc
    return h.hexdigest()


def provenance(*paths: str | Path) -> list[dict]:
    return [{"path": str(p), "sha256": file_digest(p)} for p in paths]


# ---------------------------------------------------------------------------
# NPY v1.0 header

def _build_header(dtype_str: str, shape: tuple[int, int], pad_to: int | None = None) -> bytes:
    body = "{'descr': '%s', 'fortran_order': False, 'shape': (%d, %d), }" % (
        dtype_str,
        shape[0],
        shape[1],
    )
    # magic(6) + version(2) + header_len(2) + header must be 64-byte aligned,
    # header ends with '\n'; this matches what np.save emits for v1.0.
    base = len(_MAGIC) + 2 + 2
    total = base + len(body) + 1
    padded = ((total + _HEADER_ALIGN - 1) // _HEADER_ALIGN) * _HEADER_ALIGN
    if pad_to is not None:
        # pad_to is the reserved total length (prefix included) being patched.
        if pad_to < padded or pad_to % _HEADER_ALIGN != 0:
            raise IoError("reserved NPY header too small for final shape")
        padded = pad_to
    header = body.encode("latin1") + b" " * (padded - total) + b"\n"
    if len(header) > 0xFFFF:
        raise FormatError("NPY v1.0 header exceeds 65535 bytes")
    return _MAGIC + _VERSION + len(header).to_bytes(2, "little") + header


def _parse_header(f: IO[bytes], path: Path) -> tuple[np.dtype, tuple[int, int], int]:
    """Read and validate an NPY v1.0 header; return (dtype, shape, data offset)."""
    prefix = f.read(8)
    if len(prefix) < 8 or prefix[:6] != _MAGIC:
        raise FormatError(f"{path}: not an NPY file (bad magic)")
    if prefix[6:8] != _VERSION:
        raise FormatError(
            f"{path}: unsupported NPY version {prefix[6]}.{prefix[7]} (need 1.0)"
        )
    raw_len = f.read(2)
    if len(raw_len) < 2:
        raise FormatError(f"{path}: truncated NPY header")
    header_len = int.from_bytes(raw_len, "little")
    header = f.read(header_len)
    if len(header) < header_len or not header.endswith(b"\n"):
        raise FormatError(f"{path}: truncated or unterminated NPY header")
    try:
        meta = ast.literal_eval(header.decode("latin1").strip())
    except (ValueError, SyntaxError) as exc:
        raise FormatError(f"{path}: malformed NPY header dict") from exc
    if not isinstance(meta, dict) or set(meta) != {"descr", "fortran_order", "shape"}:
        raise FormatError(f"{path}: NPY header must have descr/fortran_order/shape")
    if meta["fortran_order"] is not False:
        raise FormatError(f"{path}: fortran_order must be False")
    descr = meta["descr"]
    if descr not in _DTYPES:
        raise FormatError(f"{path}: unsupported dtype {descr!r} (need '<f4' or '<f8')")
    shape = meta["shape"]
    if (
        not isinstance(shape, tuple)
        or len(shape) != 2
        or not all(isinstance(s, int) and s >= 0 for s in shape)
    ):
        raise FormatError(f"{path}: array must be two-dimensional, got shape {shape!r}")
    return _DTYPES[descr], (shape[0], shape[1]), 10 + header_len


def _check_finite(chunk: np.ndarray, row_offset: int) -> None:
    if np.isfinite(chunk).all():
        return
    bad = np.argwhere(~np.isfinite(chunk))[0]
    row, col = int(bad[0]) + row_offset, int(bad[1])
    raise DataError(f"non-finite entry at ({row}, {col})", row=row, col=col)


def chunk_rows_default() -> int:
    """Streaming chunk size; EDITIONER_CHUNK_ROWS overrides the default."""
    env = os.environ.get("EDITIONER_CHUNK_ROWS")
    if env is None:
        return DEFAULT_CHUNK_ROWS
    try:
        value = int(env)
    except ValueError as exc:
        raise ConfigError(f"EDITIONER_CHUNK_ROWS must be an integer, got {env!r}") from exc
    if value < 1:
        raise ConfigError("EDITIONER_CHUNK_ROWS must be >= 1")
    return value


# ---------------------------------------------------------------------------
# matrices


def matrix_info(path: str | Path) -> tuple[int, int]:
    """Shape (rows, columns) of a stored float32 matrix, from the header only."""
    p = Path(path)
    try:
        with open(p, "rb") as f:
            dtype, shape, _ = _parse_header(f, p)
    except OSError as exc:
        raise IoError(f"cannot read {p}: {exc}") from exc
    if dtype != np.dtype("<f4"):
        raise FormatError(f"{p}: embedding matrices must be '<f4'")
    return shape


def iter_matrix_chunks(
    path: str | Path, chunk_rows: int | None = None
) -> Iterator[np.ndarray]:
    """Yield successive row blocks of a stored float32 matrix.

    Each block is a float32 array of at most ``chunk_rows`` rows, validated
    finite. Blocks arrive in row order, so consuming them reproduces the
    matrix exactly.
    """
    p = Path(path)
    rows = chunk_rows if chunk_rows is not None else chunk_rows_default()
    if rows < 1:
        raise ConfigError("chunk_rows must be >= 1")
    try:
        with open(p, "rb") as f:
            dtype, (m, d), offset = _parse_header(f, p)
            if dtype != np.dtype("<f4"):
                raise FormatError(f"{p}: embedding matrices must be '<f4'")
            expected = offset + m * d * dtype.itemsize
            actual = os.fstat(f.fileno()).st_size
            if actual != expected:
                raise FormatError(
                    f"{p}: payload size {actual - offset} does not match shape ({m}, {d})"
                )
            done = 0
            while done < m:
                take = min(rows, m - done)
                block = np.fromfile(f, dtype=dtype, count=take * d)
                block = block.reshape(take, d)
                _check_finite(block, row_offset=done)
                done += take
                yield block
    except OSError as exc:
        raise IoError(f"cannot read {p}: {exc}") from exc


def read_matrix(path: str | Path, chunk_rows: int | None = None) -> EmbeddingMatrix:
    """Load a float32 embedding matrix, validating the header and every entry."""
    m, d = matrix_info(path)
    out = np.empty((m, d), dtype=np.float32)
    done = 0
    for block in iter_matrix_chunks(path, chunk_rows):
        out[done : done + block.shape[0]] = block
        done += block.shape[0]
    matrix = EmbeddingMatrix.__new__(EmbeddingMatrix)
    matrix.data = out  # already validated chunk-wise; skip a second pass
    matrix.source_hash = None
    return matrix


class MatrixWriter:
    """Streaming float32 matrix writer.

    With ``count`` given up front the header is final immediately and the
    output bytes are canonical (identical to ``np.save`` of the same array).
    Without it, a padded header is reserved and patched on close.
    """

    def __init__(self, path: str | Path, dim: int, count: int | None = None):
        if dim < 1:
            raise ConfigError("dim must be >= 1")
        if count is not None and count < 0:
            raise ConfigError("count must be >= 0")
        self.path = Path(path)
        self.dim = dim
        self.count = count
        self.rows_written = 0
        self._reserved: int | None = None
        try:
            self._f: IO[bytes] | None = open(self.path, "wb")
            if count is not None:
                self._f.write(_build_header("<f4", (count, dim)))
            else:
                # Reserve room for any row count up to 20 digits.
                header = _build_header("<f4", (10**19, dim))
                self._reserved = len(header)
                self._f.write(header)
        except OSError as exc:
            raise IoError(f"cannot open {self.path} for writing: {exc}") from exc

    def append(self, rows: np.ndarray) -> None:
        if self._f is None:
            raise IoError("writer already closed")
        block = np.ascontiguousarray(rows, dtype=np.float32)
        if block.ndim == 1:
            block = block.reshape(1, -1)
        if block.ndim != 2 or block.shape[1] != self.dim:
            raise DataError(
                f"chunk shape {block.shape} incompatible with dim={self.dim}"
            )
        _check_finite(block, row_offset=self.rows_written)
        try:
            block.tofile(self._f)
        except OSError as exc:
            raise IoError(f"write to {self.path} failed: {exc}") from exc
        self.rows_written += block.shape[0]

    def close(self) -> None:
        if self._f is None:
            return
        try:
            if self.count is not None:
                if self.rows_written != self.count:
                    raise IoError(
                        f"{self.path}: wrote {self.rows_written} rows, expected {self.count}"
                    )
            else:
                self._f.seek(0)
                self._f.write(
                    _build_header("<f4", (self.rows_written, self.dim), pad_to=self._reserved)
                )
        finally:
            f, self._f = self._f, None
            f.close()

    def __enter__(self) -> "MatrixWriter":
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        if exc_type is None:
            self.close()
        elif self._f is not None:
            f, self._f = self._f, None
            f.close()


def write_matrix(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Serialize a matrix as '<f4' NPY v1.0; byte-identical on repeated writes."""
    with MatrixWriter(path, dim=matrix.dim, count=matrix.count) as w:
        w.append(matrix.data)


# ---------------------------------------------------------------------------
# orthonormal-basis artifacts (reducers and concept subspaces)


def _write_basis(basis: np.ndarray, path: Path) -> None:
    arr = np.ascontiguousarray(basis, dtype="<f8")
    try:
        with open(path, "wb") as f:
            f.write(_build_header("<f8", arr.shape))
            arr.tofile(f)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _read_basis(path: Path) -> np.ndarray:
    try:
        with open(path, "rb") as f:
            dtype, (rows, cols), offset = _parse_header(f, path)
            expected = offset + rows * cols * dtype.itemsize
            if os.fstat(f.fileno()).st_size != expected:
                raise FormatError(f"{path}: payload does not match header shape")
            arr = np.fromfile(f, dtype=dtype, count=rows * cols).reshape(rows, cols)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    _check_finite(arr, row_offset=0)
    return arr.astype(np.float64, copy=False)


def _check_orthonormal(basis: np.ndarray, path: Path) -> None:
    gram = basis @ basis.T
    dev = float(np.max(np.abs(gram - np.eye(basis.shape[0]))))
    if dev > ORTHONORMALITY_TOL:
        raise IntegrityError(
            f"{path}: basis rows not orthonormal (max Gram deviation {dev:.3e})"
        )


def write_subspace(subspace: ConceptSubspace, path: str | Path) -> None:
    """Persist a concept subspace: '<f8' basis plus manifest sidecar."""
    p = Path(path)
    _write_basis(subspace.basis, p)
    manifest = ArtifactManifest(
        kind="subspace",
        dim=subspace.working_dim,
        concept_slot=subspace.concept.slot.value if subspace.concept else None,
        concept_word=subspace.concept.word if subspace.concept else None,
        k=subspace.k,
        evr_threshold=subspace.evr_threshold,
        spectrum_values=[float(v) for v in subspace.spectrum_values],
        total_variance=float(subspace.total_variance),
        created_from=list(subspace.created_from),
    )
    write_manifest(manifest, p)


def read_subspace(path: str | Path) -> ConceptSubspace:
    """Load a concept subspace, re-validating orthonormality and rank choice."""
    p = Path(path)
    basis = _read_basis(p)
    _check_orthonormal(basis, p)
    manifest = read_manifest(p)
    if manifest.kind != "subspace":
        raise FormatError(f"{p}: manifest kind {manifest.kind!r}, expected 'subspace'")
    if manifest.k != basis.shape[0] or manifest.dim != basis.shape[1]:
        raise IntegrityError(f"{p}: manifest k/dim do not match stored basis shape")
    if manifest.spectrum_values is None or len(manifest.spectrum_values) != manifest.k:
        raise IntegrityError(f"{p}: manifest must carry exactly k spectrum values")
    concept = None
    if manifest.concept_slot is not None and manifest.concept_word is not None:
        concept = ConceptSpec(TemplateSlot(manifest.concept_slot), manifest.concept_word)
    sub = ConceptSubspace(
        basis=basis,
        spectrum_values=np.asarray(manifest.spectrum_values, dtype=np.float64),
        total_variance=float(manifest.total_variance),
        concept=concept,
        evr_threshold=float(manifest.evr_threshold),
        created_from=tuple(manifest.created_from),
    )
    sub.validate_rank_choice()
    return sub


def write_reducer(space: ReducedSpace, path: str | Path) -> None:
    """Persist a global dimensionality reducer: '<f8' basis plus manifest."""
    p = Path(path)
    _write_basis(space.basis, p)
    manifest = ArtifactManifest(
        kind="reducer",
        dim=space.ambient_dim,
        reduced_dim=space.reduced_dim,
        captured_variance_ratio=float(space.captured_variance_ratio),
        created_from=list(space.created_from),
    )
    write_manifest(manifest, p)


def read_reducer(path: str | Path) -> ReducedSpace:
    """Load a reducer, re-validating orthonormality of its basis rows."""
    p = Path(path)
    basis = _read_basis(p)
    _check_orthonormal(basis, p)
    manifest = read_manifest(p)
    if manifest.kind != "reducer":
        raise FormatError(f"{p}: manifest kind {manifest.kind!r}, expected 'reducer'")
    if manifest.reduced_dim != basis.shape[0] or manifest.dim != basis.shape[1]:
        raise IntegrityError(f"{p}: manifest dims do not match stored basis shape")
    return ReducedSpace(
        basis=basis,
        captured_variance_ratio=float(manifest.captured_variance_ratio),
        created_from=tuple(manifest.created_from),
    )


def write_matrix_manifest(
    matrix: EmbeddingMatrix,
    path: str | Path,
    created_from: Iterable[dict] = (),
    reduced_dim: int | None = None,
) -> None:
    manifest = ArtifactManifest(
        kind="embeddings",
        dim=matrix.dim,
        reduced_dim=reduced_dim,
        source_hash=matrix.source_hash,
        created_from=list(created_from),
    )
    write_manifest(manifest, path)

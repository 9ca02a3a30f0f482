"""Training-free editions of text-to-image models via concept subspaces.

The pipeline: generate template prompt corpora (prompt_forge), encode them
externally into float32 embedding matrices (tensor_store handles the file
contract), optionally compress the ambient space with a global PCA reducer
(spectral), build per-concept subspaces and project prompt embeddings into
them with magnitude compensation (subspace), and measure the result
(diagnostics). The ``editioner`` CLI strings these together.
"""

from .diagnostics import ShellReport, SimilarityTriple, evr_curve, shell_report, similarity_table
from .errors import (
    ConfigError,
    DataError,
    DegenerateError,
    DimError,
    EditionerError,
    FormatError,
    IntegrityError,
    IoError,
    OrthogonalInputError,
)
from .prompt_forge import (
    ConceptSpec,
    PromptCorpus,
    PromptRecord,
    TemplateSlot,
    WordList,
    evaluation_set,
    filter_concept,
    generate_all,
    replaced_prompt,
)
from .spectral import (
    ReducedSpace,
    Spectrum,
    build_reducer,
    compute_spectrum,
    lift,
    reduce,
    spectrum_from_file,
)
from .subspace import (
    BatchProjectionReport,
    ConceptSubspace,
    ProjectionResult,
    build_subspace,
    interpolate,
    project,
    project_batch,
    select_k,
    traverse,
)
from .tensor_store import (
    ArtifactManifest,
    EmbeddingMatrix,
    MatrixWriter,
    read_matrix,
    read_reducer,
    read_subspace,
    write_matrix,
    write_reducer,
    write_subspace,
)

__version__ = "0.1.0"

__all__ = [
    "ArtifactManifest",
    "BatchProjectionReport",
    "ConceptSpec",
    "ConceptSubspace",
    "ConfigError",
    "DataError",
    "DegenerateError",
    "DimError",
    "EditionerError",
    "EmbeddingMatrix",
    "FormatError",
    "IntegrityError",
    "IoError",
    "MatrixWriter",
    "OrthogonalInputError",
    "ProjectionResult",
    "PromptCorpus",
    "PromptRecord",
    "ReducedSpace",
    "ShellReport",
    "SimilarityTriple",
    "Spectrum",
    "TemplateSlot",
    "WordList",
    "build_reducer",
    "build_subspace",
    "compute_spectrum",
    "evaluation_set",
    "evr_curve",
    "filter_concept",
    "generate_all",
    "interpolate",
    "lift",
    "project",
    "project_batch",
    "read_matrix",
    "read_reducer",
    "read_subspace",
    "reduce",
    "replaced_prompt",
    "select_k",
    "shell_report",
    "similarity_table",
    "spectrum_from_file",
    "traverse",
    "write_matrix",
    "write_reducer",
    "write_subspace",
]

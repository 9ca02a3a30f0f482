"""Ecosystem adapter for the editioner toolkit.

Everything crosses the boundary as files: prompt corpora go in, float32
NPY embedding matrices (with manifest sidecars) come out; projected
embeddings go in, images plus an index JSON come out. There is no
in-process coupling with the toolkit itself.
"""

from .encoding import ClipTextEncoder, FakeEncoder, encode, make_encoder, read_corpus
from .errors import BridgeError, CorpusError, JobError, MissingDependencyError
from .evaluation import (
    clip_probability_table,
    evaluate,
    fid_from_features,
    frechet_distance,
    inception_score_from_probs,
    softmax_pair_probability,
)
from .generation import generate
from .jobs import EncodeJob, EvaluateJob, GenerateJob

__all__ = [
    "BridgeError",
    "ClipTextEncoder",
    "CorpusError",
    "EncodeJob",
    "EvaluateJob",
    "FakeEncoder",
    "GenerateJob",
    "JobError",
    "MissingDependencyError",
    "clip_probability_table",
    "encode",
    "evaluate",
    "fid_from_features",
    "frechet_distance",
    "generate",
    "inception_score_from_probs",
    "make_encoder",
    "read_corpus",
    "softmax_pair_probability",
]

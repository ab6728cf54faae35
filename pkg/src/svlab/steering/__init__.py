"""In-context vectors and function vectors: extraction, scoring, hooks, files."""

from .fv import (
    CorruptedPrompt,
    average_scores,
    build_fv,
    cie_summary,
    compute_aie,
    corrupted_prompts,
    default_fv_layer,
    default_k,
    function_vector_from_heads,
    make_fv_hooks,
    mean_head_activations,
    top_heads,
    total_mean_cie,
)
from .icv import build_icv, collect_differences, make_icv_hooks
from .io import load_vector, load_vectors, save_vector, save_vectors, vector_equal
from .linalg import mean_direction, principal_direction
from .vectors import FunctionVector, HeadScore, InContextVector

__all__ = [
    "CorruptedPrompt",
    "FunctionVector",
    "HeadScore",
    "InContextVector",
    "average_scores",
    "build_fv",
    "build_icv",
    "cie_summary",
    "collect_differences",
    "compute_aie",
    "corrupted_prompts",
    "default_fv_layer",
    "default_k",
    "function_vector_from_heads",
    "load_vector",
    "load_vectors",
    "make_fv_hooks",
    "make_icv_hooks",
    "mean_direction",
    "mean_head_activations",
    "principal_direction",
    "save_vector",
    "save_vectors",
    "top_heads",
    "total_mean_cie",
    "vector_equal",
]

"""Task datasets, prompt construction and contrast-pair generation."""

from .datasets import (
    BEHAVIORAL,
    FUNCTIONAL,
    TaskSpec,
    builtin_task,
    builtin_tasks,
    load_fillers,
    load_lexicons,
    load_task,
    load_templates,
)
from .prompts import (
    ContrastPair,
    DemoStyle,
    PromptStyle,
    build_few_shot,
    build_natural,
    build_prompt,
    build_zero_shot,
    make_contrast_pairs,
    shuffle_labels,
)

__all__ = [
    "BEHAVIORAL",
    "FUNCTIONAL",
    "ContrastPair",
    "DemoStyle",
    "PromptStyle",
    "TaskSpec",
    "build_few_shot",
    "build_natural",
    "build_prompt",
    "build_zero_shot",
    "builtin_task",
    "builtin_tasks",
    "load_fillers",
    "load_lexicons",
    "load_task",
    "load_templates",
    "make_contrast_pairs",
    "shuffle_labels",
]

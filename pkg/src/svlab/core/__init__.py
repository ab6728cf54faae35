"""Toy transformer: config, tokenizer, hooks, forward/generate, training, files."""

from .config import ModelConfig
from .hooks import EMPTY, ActivationTrace, HeadSubstitute, HookSet, ResidualAdd, residual_add
from .io import load_model, save_model
from .model import ModelBundle, forward, generate, generate_batch, project_head
from .tokenizer import Tokenizer
from .train import TrainConfig, train_toy

__all__ = [
    "EMPTY", "ActivationTrace", "HeadSubstitute", "HookSet", "ModelBundle", "ModelConfig",
    "ResidualAdd", "Tokenizer", "TrainConfig", "forward", "generate", "generate_batch",
    "load_model", "project_head", "residual_add", "save_model", "train_toy",
]

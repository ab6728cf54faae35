from __future__ import annotations

import numpy as np
import pytest

from svlab.core.config import ModelConfig
from svlab.core.curriculum import default_tokenizer
from svlab.core.model import ModelBundle, init_params


def make_model(n_layers=2, n_heads=2, d_head=8, seed=0, vocab=None, scale=1.0, d_mlp=32, parallel=True):
    tok = vocab or default_tokenizer()
    cfg = ModelConfig(n_layers=n_layers, n_heads=n_heads, d_model=n_heads * d_head, d_head=d_head,
                      vocab_size=len(tok), max_seq_len=128, seed=seed, d_mlp=d_mlp,
                      parallel_blocks=parallel)
    params = init_params(cfg)
    if scale != 1.0:
        # Larger weights make attention patterns and outputs far from uniform,
        # which makes equivalence tests more discriminating.
        params = {k: (v * np.float32(scale) if k.rsplit(".", 1)[-1].startswith("W") else v)
                  for k, v in params.items()}
    return ModelBundle(cfg, params, tok, {})


@pytest.fixture(scope="session")
def tiny_model():
    return make_model(scale=20.0)


@pytest.fixture(scope="session")
def tokenizer():
    return default_tokenizer()


_VERDICTS: dict = {}


@pytest.fixture(scope="session")
def verdict():
    """Record one acceptance line: ``verdict(number, ok, detail)``."""
    def record(number: int, ok: bool, detail: str) -> None:
        _VERDICTS[number] = (bool(ok), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        ok, detail = _VERDICTS[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {detail}")

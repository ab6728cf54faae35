"""Time the numba kernels against their numpy references.

Usage::

    python benchmarks/bench_kernels.py [--repeat N] [--end-to-end]

Kernel timings run in-process (both implementations are importable when
numba is installed). ``--end-to-end`` also times a forward pass, a short
greedy generation and one training step in two subprocesses, one with
``SVLAB_DISABLE_NUMBA=1``.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from svlab import _accel


def _cases(rng):
    # Shapes of the default toy model: batch 24, 8 heads, 128 tokens, d=128.
    scores = rng.standard_normal((24, 8, 128, 128)).astype(np.float32)
    dp = rng.standard_normal(scores.shape).astype(np.float32)
    p = _accel.np_causal_softmax(scores)
    x = rng.standard_normal((24, 128, 128)).astype(np.float32)
    g = np.ones(128, np.float32)
    b = np.zeros(128, np.float32)
    d = rng.standard_normal((40, 1024))
    gram = d @ d.T
    x0 = rng.standard_normal(40)
    return {
        "causal_softmax": (lambda: _accel.np_causal_softmax(scores),
                           lambda: _accel._nb_causal_softmax(scores, 0)),
        "layernorm": (lambda: _accel.np_layernorm(x, g, b),
                      lambda: _accel._nb_layernorm(x, g, b, np.float32(1e-5))),
        "softmax_backward": (lambda: _accel.np_softmax_backward(p, dp),
                             lambda: _accel._nb_softmax_backward(p, dp)),
        "power_iteration": (lambda: _accel.np_power_iteration(gram, x0, 1e-8, 10_000),
                            lambda: _accel._nb_power_iteration(gram, x0.copy(), 1e-8, 10_000)),
    }


def bench_kernels(repeat: int) -> list:
    rng = np.random.default_rng(0)
    rows = []
    for name, (np_fn, nb_fn) in _cases(rng).items():
        t_np = min(timeit.repeat(np_fn, number=1, repeat=repeat))
        t_nb = None
        if _accel.HAVE_NUMBA:
            nb_fn()  # compile outside the timed region
            t_nb = min(timeit.repeat(nb_fn, number=1, repeat=repeat))
        rows.append({"kernel": name, "numpy_ms": 1e3 * t_np, "numba_ms": None if t_nb is None else 1e3 * t_nb})
    return rows


_E2E = r"""
import json, time, numpy as np
from svlab import _accel
from svlab.core.config import ModelConfig
from svlab.core.curriculum import build_curriculum
from svlab.core.model import ModelBundle, forward, generate, init_params
from svlab.core.train import TrainConfig, train_toy
cur = build_curriculum(n_docs=200, seed=0)
cfg = ModelConfig(vocab_size=len(cur.tokenizer), seed=1)
m = ModelBundle(cfg, init_params(cfg), cur.tokenizer, {})
ids = cur.tokenizer.encode(cur.documents[0])[:120]
forward(m, ids); generate(m, ids[:20], 2)
t = {}
s = time.perf_counter(); [forward(m, ids) for _ in range(10)]; t["forward_ms"] = (time.perf_counter() - s) * 100
s = time.perf_counter(); generate(m, ids[:20], 20); t["generate20_ms"] = (time.perf_counter() - s) * 1e3
tc = TrainConfig(batch_size=24, warmup=1, log_every=0)
train_toy(cur, cfg, steps=1, train_config=tc)
s = time.perf_counter(); train_toy(cur, cfg, steps=3, train_config=tc); t["train_step_ms"] = (time.perf_counter() - s) / 3 * 1e3
t["backend"] = _accel.BACKEND
print(json.dumps(t))
"""


def bench_end_to_end() -> list:
    out = []
    for disable in ("0", "1"):
        env = {**os.environ, "SVLAB_DISABLE_NUMBA": disable}
        r = subprocess.run([sys.executable, "-c", _E2E], env=env, capture_output=True, text=True, check=True)
        out.append(json.loads(r.stdout.strip().splitlines()[-1]))
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    print(f"{'kernel':<18} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for r in bench_kernels(args.repeat):
        nb = r["numba_ms"]
        speed = f"{r['numpy_ms'] / nb:8.2f}" if nb else "     n/a"
        print(f"{r['kernel']:<18} {r['numpy_ms']:10.3f} {nb if nb is not None else float('nan'):10.3f} {speed}")
    if args.end_to_end:
        print()
        for r in bench_end_to_end():
            print(f"[{r['backend']:>5}] forward(120 tok) {r['forward_ms']:.1f} ms, "
                  f"generate 20 tok {r['generate20_ms']:.1f} ms, train step {r['train_step_ms']:.0f} ms")


if __name__ == "__main__":
    main()

"""Command-line entry point: ``svlab <subcommand> [--config F] [--seed N] [--out D] [--threads N]``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .core.io import save_model
from .errors import SvlabError
from .harness.config import RunConfig, load_config
from .harness.evaluate import EvalContext, Executor
from .harness.experiments import extract_fvs, extract_icv, sweep_icv
from .harness.pipeline import (
    Comparison,
    compare_methods,
    resolve_model,
    run_ablations,
    run_cie,
    tasks_of,
    train_from_config,
)
from .harness.report import (
    emit_report,
    read_records,
    write_ablation,
    write_cie,
    write_head_scores,
    write_provenance,
    write_sweep,
)
from .steering import save_vectors

COMMANDS = ("train-toy", "extract-icv", "extract-fv", "cie-map", "eval", "sweep", "ablate", "report")


def _common(suppress: bool) -> argparse.ArgumentParser:
    # Subcommand copies use SUPPRESS so a flag given before the subcommand
    # is not reset to None by the subparser's defaults.
    d = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (must contain 'version')", **d)
    common.add_argument("--seed", type=int, help="run seed (unsigned 64-bit)", **d)
    common.add_argument("--out", help="output directory", **d)
    common.add_argument("--threads", type=int, help="worker threads for evaluation", **d)
    common.add_argument("--model", help="model file (overrides the config's 'model')", **d)
    common.add_argument("-v", "--verbose", action="store_true", **d)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = argparse.ArgumentParser(prog="svlab", description=__doc__, parents=[_common(suppress=False)])
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "train-toy": "train the toy model on the synthetic curriculum",
        "extract-icv": "extract in-context vectors per task and seed",
        "extract-fv": "extract function vectors (means, AIE, top-k heads) per task",
        "cie-map": "per-head AIE maps and the CIE / FV-gain rank correlation",
        "eval": "evaluate baseline, FV and best swept ICV",
        "sweep": "ICV strength x demo-count sweep on the validation slice",
        "ablate": "re-apply vectors at alternative layer sets",
        "report": "rebuild summary.csv and charts from results.jsonl",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, help=helps[name], parents=[common])
        if name == "report":
            sp.add_argument("--input", help="results.jsonl to read (default: <out>/results.jsonl)")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out"] = args.out
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.model is not None:
        changes["model"] = args.model
    return dataclasses.replace(cfg, **changes).validate()


def _flatten_icvs(icvs: dict) -> list:
    return [v for task in sorted(icvs) for _, v in sorted(icvs[task].items())]


def cmd_train_toy(cfg: RunConfig, out: Path) -> None:
    model, info = train_from_config(cfg)
    path = out / "model.svlm"
    save_model(model, path)
    write_provenance(out, cfg, "train-toy", {"model": path}, {"train": {**model.metadata["train"], **info}})
    print(f"wrote {path} ({info['train_seconds']:.0f}s)")


def cmd_extract_icv(cfg: RunConfig, out: Path) -> None:
    model = resolve_model(cfg)
    vecs = [extract_icv(model, t, cfg, cfg.icv.n_demos, cfg.icv.strength, s)
            for t in tasks_of(cfg) for s in cfg.seeds]
    save_vectors(vecs, out / "icv.jsonl")
    write_provenance(out, cfg, "extract-icv", {"model": cfg.model})
    print(f"wrote {len(vecs)} ICVs to {out / 'icv.jsonl'}")


def cmd_extract_fv(cfg: RunConfig, out: Path) -> None:
    model = resolve_model(cfg)
    ext = extract_fvs(model, tasks_of(cfg), cfg)
    save_vectors([e.vector for e in ext.values()], out / "fv.jsonl")
    write_head_scores({t: e.scores for t, e in ext.items()}, out, model.config.n_heads)
    write_provenance(out, cfg, "extract-fv", {"model": cfg.model},
                     {"fv_extraction": {t: e.vector.metadata for t, e in ext.items()}})
    print(f"wrote {len(ext)} FVs to {out / 'fv.jsonl'}")


def cmd_cie_map(cfg: RunConfig, out: Path, ctx: EvalContext) -> None:
    model = resolve_model(cfg)
    cfg = dataclasses.replace(cfg, methods=("baseline", "fv"), styles=("zero_shot",))
    ctx = dataclasses.replace(ctx, config=cfg, config_hash=cfg.hash())
    comp = compare_methods(model, cfg, ctx)
    write_head_scores({t: e.scores for t, e in comp.fv.items()}, out, model.config.n_heads)
    report = run_cie(model, cfg, comp)
    write_cie(report, out)
    write_provenance(out, cfg, "cie-map", {"model": cfg.model})
    rho = "undefined" if report.spearman is None else f"{report.spearman:.3f}"
    print(f"Spearman(total mean CIE, FV gain) = {rho} over {len(report.rows)} tasks")


def cmd_eval(cfg: RunConfig, out: Path, ctx: EvalContext) -> Comparison:
    model = resolve_model(cfg)
    comp = compare_methods(model, cfg, ctx)
    emit_report(comp.records, out, cfg.metrics.ge_threshold)
    if comp.sweeps:
        write_sweep(list(comp.sweeps.values()), out)
    if comp.fv:
        save_vectors([e.vector for e in comp.fv.values()], out / "fv.jsonl")
    if comp.icv:
        save_vectors(_flatten_icvs(comp.icv), out / "icv_best.jsonl")
    write_provenance(out, cfg, "eval", {"model": cfg.model})
    print(f"wrote {len(comp.records)} records to {out / 'results.jsonl'}")
    return comp


def cmd_sweep(cfg: RunConfig, out: Path, ctx: EvalContext) -> None:
    model = resolve_model(cfg)
    results = [sweep_icv(model, t, cfg.icv.grid, ctx) for t in tasks_of(cfg)]
    write_sweep(results, out)
    best = {r.task: r.vectors for r in results if r.admissible}
    if best:
        save_vectors(_flatten_icvs(best), out / "icv_best.jsonl")
    write_provenance(out, cfg, "sweep", {"model": cfg.model})
    for r in results:
        print(f"{r.task}: {r.best if r.best else 'no admissible ICV'}")


def cmd_ablate(cfg: RunConfig, out: Path, ctx: EvalContext) -> None:
    model = resolve_model(cfg)
    comp = Comparison()
    if "fv" in cfg.ablation.applies_to:
        comp.fv = extract_fvs(model, tasks_of(cfg), cfg)
    if "icv" in cfg.ablation.applies_to and "icv" in cfg.methods and not cfg.vectors.get("icv"):
        for t in tasks_of(cfg):
            sw = sweep_icv(model, t, cfg.icv.grid, ctx)
            if sw.admissible:
                comp.icv[t.name] = sw.vectors
    results = run_ablations(model, cfg, ctx, comp)
    write_ablation(results, out)
    records = [r for res in results for recs in res.records.values() for r in recs]
    emit_report(records, out, cfg.metrics.ge_threshold)
    write_provenance(out, cfg, "ablate", {"model": cfg.model})
    print(f"wrote ablation tables for {len(results)} (task, vector) combinations")


def cmd_report(cfg: RunConfig, out: Path, src: str | None) -> None:
    path = Path(src) if src else out / "results.jsonl"
    records = read_records(path)
    emit_report(records, out, cfg.metrics.ge_threshold)
    print(f"summarized {len(records)} records into {out / 'summary.csv'}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "train-toy":
            cmd_train_toy(cfg, out)
        elif args.command == "extract-icv":
            cmd_extract_icv(cfg, out)
        elif args.command == "extract-fv":
            cmd_extract_fv(cfg, out)
        elif args.command == "report":
            cmd_report(cfg, out, args.input)
        else:
            with Executor(cfg.threads) as ex:
                ctx = EvalContext.from_config(cfg, ex)
                {"cie-map": cmd_cie_map, "eval": cmd_eval, "sweep": cmd_sweep,
                 "ablate": cmd_ablate}[args.command](cfg, out, ctx)
    except (SvlabError, OSError) as exc:
        print(f"svlab: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

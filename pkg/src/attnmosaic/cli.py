"""Single command-line entry point for composing, benchmarking and fitting.

Subcommands: ``compose`` (photomosaic bundle), ``attn`` (block-sparse vs
dense attention report), ``kv`` (staircase-quantized decode vs oracle
report), ``fit`` (curve regression), ``export-knowledge`` (tile knowledge
pack). Every run is reproducible from its flags and seed; ``--format
records`` emits one machine-parseable JSON record per line, and passing
``--out`` to a report command writes the records plus a rendered figure
into that directory. ``--no-timings`` nulls wall-time fields so records
are byte-identical across reruns.
"""

from __future__ import annotations

import functools
import os
import sys
import time

import click
import numpy as np

from . import curvefit as curvefit_mod
from . import mosaic as mosaic_mod
from . import reporting
from .blocksparse import AttnConfig, AttnTensors, build_mask, dense_attention, sparse_attention
from .errors import AttnMosaicError
from .kvcache import (
    DecoderWeights,
    StaircaseConfig,
    ToyDecoder,
    baseline_cache_bits,
    baseline_decode,
)

DEFAULT_SEED = 42
SEED_ENV_VAR = "ATTNMOSAIC_SEED"
KV_MODEL_DIM = 16
ATTN_HEAD_DIM = 64


def _resolve_seed(flag_value: int | None) -> int:
    if flag_value is not None:
        return flag_value
    return int(os.environ.get(SEED_ENV_VAR, DEFAULT_SEED))


def domain_errors(fn):
    """Print domain errors as one stable line on stderr and exit nonzero."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except AttnMosaicError as exc:
            click.echo(f"error[{exc.code}]: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.option("--seed", type=int, default=None,
              help=f"Random seed [default: {DEFAULT_SEED}; "
                   f"env {SEED_ENV_VAR} overrides the default].")
@click.option("--format", "fmt", type=click.Choice(["human", "records"]),
              default="human", show_default=True,
              help="human summaries or line-delimited JSON records.")
@click.pass_context
def main(ctx, seed, fmt):
    """Photomosaic composer and attention/KV-cache experiment runner."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = _resolve_seed(seed)
    ctx.obj["format"] = fmt


# ---------------------------------- compose ----------------------------------


@main.command("compose")
@click.option("--target", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Target image (PNG or JPEG).")
@click.option("--tiles", "tiles_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of candidate tile images.")
@click.option("--tile-size", type=int, default=32, show_default=True)
@click.option("--rows", type=int, default=None, help="Grid rows (default: fill target).")
@click.option("--cols", type=int, default=None, help="Grid cols (default: fill target).")
@click.option("--knowledge", "knowledge_file", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Tab-separated filename-to-text map.")
@click.option("--out", required=True, type=click.Path(file_okay=False),
              help="Bundle output directory.")
@click.option("--timings/--no-timings", default=True,
              help="Include elapsed wall time in the summary record.")
@click.pass_context
@domain_errors
def cmd_compose(ctx, target, tiles_dir, tile_size, rows, cols,
                knowledge_file, out, timings):
    """Compose a photomosaic bundle from a tile library and a target."""
    target_arr = mosaic_mod.load_image_rgb(target)
    height, width = target_arr.shape[:2]
    grid = mosaic_mod.plan_grid(width, height, tile_size, rows=rows, cols=cols)
    ingest = mosaic_mod.ingest_tiles(tiles_dir, tile_size)
    for skip in ingest.skipped:
        click.echo(f"skipped undecodable tile: {skip.path.name} ({skip.reason})", err=True)
    knowledge = (mosaic_mod.load_knowledge(knowledge_file, ingest.tiles)
                 if knowledge_file else {})

    start = time.perf_counter()
    composed = mosaic_mod.compose(target_arr, ingest.tiles, grid)
    elapsed = time.perf_counter() - start
    bundle = mosaic_mod.emit_bundle(composed, ingest.tiles, out, knowledge=knowledge)

    mean_score = float(np.mean([c.score for c in composed.cells]))
    record = {
        "command": "compose",
        "rows": composed.rows,
        "cols": composed.cols,
        "tile_size": composed.tile_size,
        "tiles": len(ingest.tiles),
        "skipped": len(ingest.skipped),
        "cells": len(composed.cells),
        "mean_score": mean_score,
        "elapsed_s": round(elapsed, 6) if timings else None,
        "out": str(bundle.root),
    }
    if ctx.obj["format"] == "records":
        click.echo(reporting.record_line(record))
    else:
        timing = f"  elapsed {elapsed:.2f}s" if timings else ""
        click.echo(
            f"grid {composed.rows}x{composed.cols} cells of {tile_size}px  "
            f"tiles {len(ingest.tiles)}  mean score {mean_score:.6g}{timing}  "
            f"-> {bundle.root}"
        )


# ------------------------------------ attn -----------------------------------


@main.command("attn")
@click.option("--seq-len", type=int, default=128, show_default=True)
@click.option("--block-r", type=int, default=16, show_default=True,
              help="Tokens per query block.")
@click.option("--block-c", type=int, default=16, show_default=True,
              help="Tokens per key block.")
@click.option("--k", type=int, default=1, show_default=True,
              help="Block distance kept at probability 1.")
@click.option("--w", type=float, default=1.0, show_default=True,
              help="Probability-vs-randomness blend in [0, 1].")
@click.option("--sparsity", type=float, default=0.0, show_default=True,
              help="Targeted dropping percentage in [0, 100].")
@click.option("--causal/--non-causal", default=True, show_default=True)
@click.option("--trials", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for records.jsonl and the report figure.")
@click.option("--timings/--no-timings", default=True,
              help="Include kernel wall times in records.")
@click.pass_context
@domain_errors
def cmd_attn(ctx, seq_len, block_r, block_c, k, w, sparsity, causal,
             trials, out, timings):
    """Compare block-sparse attention against the dense oracle."""
    if not 0.0 <= w <= 1.0:
        raise click.UsageError("--w must be in [0, 1]")
    if not 0.0 <= sparsity <= 100.0:
        raise click.UsageError("--sparsity must be in [0, 100]")
    if trials < 1:
        raise click.UsageError("--trials must be >= 1")
    base_seed = ctx.obj["seed"]

    records = []
    plan = None
    for trial in range(trials):
        trial_seed = base_seed + trial
        try:
            config = AttnConfig(
                context_len=seq_len, head_dim=ATTN_HEAD_DIM,
                block_rows=block_r, block_cols=block_c, threshold_range=k,
                weight=w, target_drop=sparsity, seed=trial_seed, causal=causal,
            )
        except ValueError as exc:
            raise click.UsageError(str(exc)) from exc
        plan = build_mask(config)
        tensors = AttnTensors.random(seq_len, ATTN_HEAD_DIM, seed=[trial_seed, 1])

        start = time.perf_counter()
        dense = dense_attention(tensors, causal)
        wall_dense = time.perf_counter() - start
        start = time.perf_counter()
        sparse = sparse_attention(tensors, plan, config)
        wall_sparse = time.perf_counter() - start

        records.append({
            "seq_len": seq_len,
            "block_r": block_r,
            "block_c": block_c,
            "k": k,
            "w": w,
            "sparsity": sparsity,
            "seed": trial_seed,
            "kept_row_fraction": plan.kept_row_fraction,
            "kept_col_fraction": plan.kept_col_fraction,
            "max_abs_diff_vs_dense": float(np.abs(sparse - dense).max()),
            "wall_time_dense": round(wall_dense, 6) if timings else None,
            "wall_time_sparse": round(wall_sparse, 6) if timings else None,
        })

    if ctx.obj["format"] == "records":
        reporting.write_records(records, click.get_text_stream("stdout"))
    else:
        for trial, rec in enumerate(records):
            timing = ""
            if timings:
                timing = (f"  dense {rec['wall_time_dense'] * 1e3:.2f}ms"
                          f" sparse {rec['wall_time_sparse'] * 1e3:.2f}ms")
            click.echo(
                f"trial {trial}: kept rows {rec['kept_row_fraction']:.1%} "
                f"cols {rec['kept_col_fraction']:.1%}  "
                f"max|sparse-dense| {rec['max_abs_diff_vs_dense']:.3e}{timing}"
            )
    if out:
        reporting.save_records(records, os.path.join(out, "records.jsonl"))
        reporting.render_attn_figure(records, plan, os.path.join(out, "attn_report.png"))


# ------------------------------------- kv ------------------------------------


@main.command("kv")
@click.option("--prompt-len", type=int, default=512, show_default=True)
@click.option("--gen-len", type=int, default=16, show_default=True)
@click.option("--segment", type=int, default=128, show_default=True,
              help="Tokens per quantization segment.")
@click.option("--group", type=int, default=32, show_default=True,
              help="Tokens per quantized group (must divide segment).")
@click.option("--bits", default="16,8,4,2", show_default=True,
              help="Descending bit ladder, comma separated, starting at 16.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for records.jsonl and the report figure.")
@click.pass_context
@domain_errors
def cmd_kv(ctx, prompt_len, gen_len, segment, group, bits, out):
    """Run staircase-quantized decoding against the full-precision oracle."""
    try:
        ladder = tuple(int(part) for part in bits.split(","))
    except ValueError as exc:
        raise click.UsageError(f"--bits must be comma-separated integers: {exc}") from exc
    try:
        config = StaircaseConfig(segment_size=segment, group_size=group, bit_ladder=ladder)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    if prompt_len < 1:
        raise click.UsageError("--prompt-len must be >= 1")
    if gen_len < 0:
        raise click.UsageError("--gen-len must be >= 0")
    seed = ctx.obj["seed"]

    weights = DecoderWeights.seeded(KV_MODEL_DIM, seed)
    rng = np.random.default_rng([seed, 2])
    prompt = rng.standard_normal((prompt_len, KV_MODEL_DIM))
    tokens = rng.standard_normal((gen_len, KV_MODEL_DIM))

    decoder = ToyDecoder(weights, config)
    decoder.prefill(prompt)
    oracle = baseline_decode(prompt, tokens, weights) if gen_len else np.empty((0, KV_MODEL_DIM))

    records = []
    for step in range(gen_len):
        output = decoder.decode_step(tokens[step])
        err = np.abs(output - oracle[step])
        theoretical = decoder.cache.theoretical_bits()
        baseline = baseline_cache_bits(decoder.cache.total_tokens, KV_MODEL_DIM)
        records.append({
            "l_prompt": prompt_len,
            "gen_len": gen_len,
            "segment": segment,
            "group": group,
            "ladder": list(ladder),
            "seed": seed,
            "step": step,
            "max_abs_err": float(err.max()),
            "mean_abs_err": float(err.mean()),
            "theoretical_cache_bits": theoretical,
            "baseline_cache_bits": baseline,
            "cache_ratio": theoretical / baseline,
        })

    if ctx.obj["format"] == "records":
        reporting.write_records(records, click.get_text_stream("stdout"))
    else:
        theoretical = decoder.cache.theoretical_bits()
        baseline = baseline_cache_bits(decoder.cache.total_tokens, KV_MODEL_DIM)
        worst = max((r["max_abs_err"] for r in records), default=0.0)
        click.echo(
            f"prompt {prompt_len} gen {gen_len} ladder {','.join(map(str, ladder))}  "
            f"max abs err {worst:.3e}  cache bits {theoretical} vs {baseline} "
            f"(ratio {theoretical / baseline:.3f})"
        )
    if out:
        reporting.save_records(records, os.path.join(out, "records.jsonl"))
        if records:
            reporting.render_kv_figure(records, os.path.join(out, "kv_report.png"))


# ------------------------------------- fit -----------------------------------


@main.command("fit")
@click.option("--points", "points_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Two-column x,y text file (# comments allowed).")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for fit.json and the report figure.")
@click.pass_context
@domain_errors
def cmd_fit(ctx, points_file, out):
    """Fit the four-parameter smoothing curve to sampled points."""
    try:
        points = curvefit_mod.load_points(points_file)
        result = curvefit_mod.fit_curve(points)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc

    params = result.params
    doc = {
        "a1": params.a1,
        "a2": params.a2,
        "a3": params.a3,
        "a4": params.a4,
        "residual": result.residual,
        "iterations": result.iterations,
    }
    if ctx.obj["format"] == "records":
        click.echo(reporting.record_line(doc))
    else:
        click.echo(
            f"a1={params.a1:.6g} a2={params.a2:.6g} a3={params.a3:.6g} "
            f"a4={params.a4:.6g}  residual={result.residual:.3e} "
            f"iterations={result.iterations}"
        )
    if out:
        reporting.save_records([doc], os.path.join(out, "fit.json"))
        reporting.render_fit_figure(points, params, os.path.join(out, "fit_report.png"))


# ------------------------------- export-knowledge ----------------------------


@main.command("export-knowledge")
@click.option("--tiles", "tiles_dir", required=True,
              type=click.Path(exists=True, file_okay=False))
@click.option("--knowledge", "knowledge_file", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Tab-separated filename-to-text map.")
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Knowledge pack output path.")
@click.pass_context
@domain_errors
def cmd_export_knowledge(ctx, tiles_dir, knowledge_file, out):
    """Export a standalone tile-knowledge document."""
    ingest = mosaic_mod.ingest_tiles(tiles_dir, tile_size=8)
    knowledge = mosaic_mod.load_knowledge(knowledge_file, ingest.tiles)
    doc = mosaic_mod.export_knowledge(ingest.tiles, knowledge, out)
    record = {
        "command": "export_knowledge",
        "entries": len(doc["entries"]),
        "with_text": sum(1 for e in doc["entries"] if e["knowledge"]),
        "out": str(out),
    }
    if ctx.obj["format"] == "records":
        click.echo(reporting.record_line(record))
    else:
        click.echo(f"wrote {record['entries']} entries "
                   f"({record['with_text']} with text) -> {out}")


if __name__ == "__main__":
    main()

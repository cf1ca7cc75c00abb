"""Photomosaic composition plus desk-scale attention/KV-cache experiments."""

from .blocksparse import (
    AttnConfig,
    AttnTensors,
    BlockMaskPlan,
    build_mask,
    dense_attention,
    sparse_attention,
)
from .curvefit import CurveParams, FitResult, curve_value, fit_curve
from .kvcache import (
    DecoderWeights,
    QuantSpec,
    StaircaseCache,
    StaircaseConfig,
    ToyDecoder,
    baseline_decode,
    dequantize,
    quantize,
    staircase_bits,
)
from .mosaic import (
    Bundle,
    MosaicGrid,
    TileRecord,
    attention_score,
    compose,
    emit_bundle,
    export_knowledge,
    ingest_tiles,
    plan_grid,
)

__version__ = "0.1.0"

__all__ = [
    "AttnConfig",
    "AttnTensors",
    "BlockMaskPlan",
    "build_mask",
    "dense_attention",
    "sparse_attention",
    "CurveParams",
    "FitResult",
    "curve_value",
    "fit_curve",
    "DecoderWeights",
    "QuantSpec",
    "StaircaseCache",
    "StaircaseConfig",
    "ToyDecoder",
    "baseline_decode",
    "dequantize",
    "quantize",
    "staircase_bits",
    "Bundle",
    "MosaicGrid",
    "TileRecord",
    "attention_score",
    "compose",
    "emit_bundle",
    "export_knowledge",
    "ingest_tiles",
    "plan_grid",
]

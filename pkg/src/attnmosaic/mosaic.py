"""Photomosaic composition from a tile library and a target image.

A tile library is ingested into square thumbnails produced by
area-average (box filter) downsampling. The target is center-cropped to a
rows x cols grid of tile-sized cells, and each cell is assigned the tile
whose pixel statistics sit closest to the cell's: the match score is
``1 / (distance + 1e-6)`` over a 15-number statistic vector (per-channel
global mean plus per-channel 2x2 quadrant means), so a pixel-identical
tile scores 1e6 and strictly dominates. Ties break toward the lowest tile
id, tiles may be reused freely, and the whole pipeline is a pure function
of its inputs: composing twice, or emitting a bundle twice, produces
byte-identical results.

The emitted bundle is ``mosaic.png`` + ``metadata.json`` + ``originals/``
copies of every source image referenced by a cell.
"""

from __future__ import annotations

import json
import shutil
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    BundleIOError,
    GridConstraintError,
    GridTooSmallError,
    KnowledgeKeyError,
    NoTilesError,
)

__all__ = [
    "SCORE_EPSILON",
    "BlockStats",
    "TileRecord",
    "SkippedFile",
    "IngestResult",
    "CellAssignment",
    "MosaicGrid",
    "Bundle",
    "block_stats",
    "ingest_tiles",
    "plan_grid",
    "attention_score",
    "compose",
    "emit_bundle",
    "export_knowledge",
    "validate_metadata",
    "load_image_rgb",
    "load_knowledge",
]

SCORE_EPSILON = 1e-6  # keeps the inverse-distance score finite at exact matches

METADATA_VERSION = 1


# ------------------------------ pixel statistics -----------------------------


@dataclass(frozen=True)
class BlockStats:
    """Per-channel global mean plus per-channel 2x2 quadrant means."""

    channel_means: np.ndarray   # (C,)
    quadrant_means: np.ndarray  # (4, C): top-left, top-right, bottom-left, bottom-right

    def vector(self) -> np.ndarray:
        """15-number scoring vector; single-channel stats replicate to 3."""
        means, quads = self.channel_means, self.quadrant_means
        if means.shape[0] == 1:
            means = np.repeat(means, 3)
            quads = np.repeat(quads, 3, axis=1)
        return np.concatenate([means, quads.ravel()])


def block_stats(block: np.ndarray) -> BlockStats:
    """Statistics of one square pixel block, shaped (s, s) or (s, s, C).

    For odd s the quadrant halves share the middle row/column, so every
    quadrant is nonempty down to s = 1.
    """
    arr = np.asarray(block, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square (s, s, C) block, got shape {arr.shape}")
    size = arr.shape[0]
    hi, lo = (size + 1) // 2, size // 2
    top, bottom = arr[:hi], arr[lo:]
    quadrants = (top[:, :hi], top[:, lo:], bottom[:, :hi], bottom[:, lo:])
    return BlockStats(
        channel_means=arr.mean(axis=(0, 1)),
        quadrant_means=np.stack([q.mean(axis=(0, 1)) for q in quadrants]),
    )


# --------------------------------- tile library ------------------------------


@dataclass(frozen=True)
class TileRecord:
    """One candidate tile: identity, source info, thumbnail, statistics."""

    id: int
    source_path: Path
    width: int
    height: int
    channels: int               # 1 (grayscale) or 3 (color)
    thumb: np.ndarray           # (s, s, channels) uint8
    stats: BlockStats

    def stat_vector(self) -> np.ndarray:
        return self.stats.vector()

    def rgb_thumb(self) -> np.ndarray:
        """Thumbnail promoted to 3 channels by replication."""
        if self.channels == 3:
            return self.thumb
        return np.repeat(self.thumb, 3, axis=2)


@dataclass(frozen=True)
class SkippedFile:
    path: Path
    reason: str


@dataclass(frozen=True)
class IngestResult:
    tiles: list[TileRecord]
    skipped: list[SkippedFile]


def ingest_tiles(directory, tile_size: int) -> IngestResult:
    """Load every decodable image in a directory into a TileRecord.

    Files are visited in sorted name order so ids are dense, stable
    0..N-1. Undecodable files are skipped and reported in the result.
    """
    if tile_size < 1:
        raise ValueError("tile_size must be >= 1")
    root = Path(directory)
    if not root.is_dir():
        raise NoTilesError(f"tile directory does not exist: {root}")
    files = sorted(p for p in root.iterdir() if p.is_file())
    if not files:
        raise NoTilesError(f"tile directory is empty: {root}")

    tiles: list[TileRecord] = []
    skipped: list[SkippedFile] = []
    for path in files:
        try:
            with Image.open(path) as img:
                img.load()
                record = _tile_from_image(img, path, len(tiles), tile_size)
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            skipped.append(SkippedFile(path, str(exc) or type(exc).__name__))
            continue
        tiles.append(record)
    if not tiles:
        raise NoTilesError(f"no decodable images in {root}")
    return IngestResult(tiles=tiles, skipped=skipped)


def _tile_from_image(img: Image.Image, path: Path, tile_id: int, tile_size: int) -> TileRecord:
    width, height = img.size
    if img.mode == "L":
        flat = img
    elif img.mode in ("1", "I", "I;16", "F", "LA"):
        flat = img.convert("L")
    elif img.mode != "RGB":
        flat = img.convert("RGB")
    else:
        flat = img
    thumb_img = flat.resize((tile_size, tile_size), Image.Resampling.BOX)
    thumb = np.asarray(thumb_img, dtype=np.uint8)
    if thumb.ndim == 2:
        thumb = thumb[:, :, None]
    return TileRecord(
        id=tile_id,
        source_path=path,
        width=width,
        height=height,
        channels=thumb.shape[2],
        thumb=thumb,
        stats=block_stats(thumb),
    )


# ----------------------------------- the grid --------------------------------


@dataclass(frozen=True)
class CellAssignment:
    row: int
    col: int
    tile_id: int
    score: float


@dataclass(frozen=True)
class MosaicGrid:
    rows: int
    cols: int
    tile_size: int
    target_width: int
    target_height: int
    crop_origin: tuple[int, int]      # (x0, y0)
    cells: tuple[CellAssignment, ...] = ()

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1 or self.tile_size < 1:
            raise GridConstraintError("rows, cols and tile_size must be >= 1")
        if self.rows * self.tile_size > self.target_height:
            raise GridConstraintError(
                f"rows * tile_size = {self.rows * self.tile_size} exceeds "
                f"target height {self.target_height}"
            )
        if self.cols * self.tile_size > self.target_width:
            raise GridConstraintError(
                f"cols * tile_size = {self.cols * self.tile_size} exceeds "
                f"target width {self.target_width}"
            )


def plan_grid(width: int, height: int, tile_size: int,
              rows: int | None = None, cols: int | None = None) -> MosaicGrid:
    """Lay out the cell grid and center the crop window in the target.

    With rows/cols omitted the grid fills the target (floor division);
    explicit values must still fit inside the target. The leftover margin
    is split evenly with ties toward the top-left.
    """
    if tile_size < 1:
        raise ValueError("tile_size must be >= 1")
    if rows is None or cols is None:
        if height // tile_size == 0 or width // tile_size == 0:
            raise GridTooSmallError(
                f"target {width}x{height} cannot fit a single {tile_size}px tile"
            )
    if rows is None:
        rows = height // tile_size
    if cols is None:
        cols = width // tile_size
    x0 = (width - cols * tile_size) // 2
    y0 = (height - rows * tile_size) // 2
    return MosaicGrid(
        rows=rows,
        cols=cols,
        tile_size=tile_size,
        target_width=width,
        target_height=height,
        crop_origin=(x0, y0),
    )


# ---------------------------------- scoring ----------------------------------


def attention_score(cell_block: np.ndarray, tile: TileRecord) -> float:
    """Inverse statistic distance between a target cell and a tile.

    Returns ``1 / (d + 1e-6)`` where d is the Euclidean distance between
    the two 15-number statistic vectors; larger score means a closer
    match, and an identical block scores 1e6.
    """
    arr = np.asarray(cell_block)
    size = tile.thumb.shape[0]
    if arr.shape != (size, size, 3):
        raise ValueError(f"cell_block must be ({size}, {size}, 3), got {arr.shape}")
    distance = float(np.linalg.norm(block_stats(arr).vector() - tile.stat_vector()))
    return 1.0 / (distance + SCORE_EPSILON)


def compose(target: np.ndarray, tiles: list[TileRecord], grid: MosaicGrid) -> MosaicGrid:
    """Assign every grid cell its best-scoring tile.

    ``target`` is an (H, W, 3) uint8 array matching the grid's target
    size. Assignments are the score argmax per cell with ties broken by
    the lowest tile id; the result is independent of cell evaluation
    order.
    """
    if not tiles:
        raise ValueError("need at least one tile")
    arr = np.asarray(target)
    if arr.shape != (grid.target_height, grid.target_width, 3):
        raise ValueError(
            f"target shape {arr.shape} does not match grid target "
            f"{(grid.target_height, grid.target_width, 3)}"
        )
    size = grid.tile_size
    x0, y0 = grid.crop_origin
    tile_vectors = np.stack([t.stat_vector() for t in tiles])

    cells = []
    for row in range(grid.rows):
        for col in range(grid.cols):
            block = arr[y0 + row * size : y0 + (row + 1) * size,
                        x0 + col * size : x0 + (col + 1) * size]
            vec = block_stats(block).vector()
            distances = np.linalg.norm(tile_vectors - vec, axis=1)
            best = int(np.argmin(distances))  # first minimum = lowest id
            score = 1.0 / (float(distances[best]) + SCORE_EPSILON)
            cells.append(CellAssignment(row=row, col=col,
                                        tile_id=tiles[best].id, score=score))
    return replace(grid, cells=tuple(cells))


# ---------------------------------- the bundle -------------------------------


@dataclass(frozen=True)
class Bundle:
    root: Path
    mosaic_path: Path
    metadata_path: Path
    originals_dir: Path
    metadata: dict


def emit_bundle(grid: MosaicGrid, tiles: list[TileRecord], out_dir,
                knowledge: dict[int, str] | None = None) -> Bundle:
    """Write mosaic.png, metadata.json and originals/ for a composed grid.

    Only tiles actually referenced by a cell are listed and copied, so
    every metadata tile entry resolves to an existing original. Emitting
    the same inputs twice produces byte-identical metadata.
    """
    if not grid.cells:
        raise ValueError("grid has no cell assignments; run compose first")
    knowledge = dict(knowledge or {})
    tile_by_id = {t.id: t for t in tiles}
    _check_knowledge_ids(knowledge, tile_by_id)

    root = Path(out_dir)
    originals = root / "originals"
    try:
        originals.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise BundleIOError(f"cannot create bundle directory {root}: {exc}") from exc

    size = grid.tile_size
    mosaic = np.zeros((grid.rows * size, grid.cols * size, 3), dtype=np.uint8)
    for cell in grid.cells:
        mosaic[cell.row * size : (cell.row + 1) * size,
               cell.col * size : (cell.col + 1) * size] = tile_by_id[cell.tile_id].rgb_thumb()
    mosaic_path = root / "mosaic.png"
    try:
        Image.fromarray(mosaic).save(mosaic_path)
    except OSError as exc:
        raise BundleIOError(f"cannot write {mosaic_path}: {exc}") from exc

    referenced = sorted({cell.tile_id for cell in grid.cells})
    for tile_id in referenced:
        tile = tile_by_id[tile_id]
        if not tile.source_path.is_file():
            raise BundleIOError(
                f"tile {tile_id}: source file missing at emit time: {tile.source_path}"
            )
        shutil.copyfile(tile.source_path, originals / tile.source_path.name)

    ordered = sorted(grid.cells, key=lambda c: (c.row, c.col))
    metadata = {
        "version": METADATA_VERSION,
        "grid": {"rows": grid.rows, "cols": grid.cols, "tile_size": grid.tile_size},
        "target": {
            "width": grid.target_width,
            "height": grid.target_height,
            "crop": list(grid.crop_origin),
        },
        "cells": [
            {"row": c.row, "col": c.col, "tile_id": c.tile_id, "score": c.score}
            for c in ordered
        ],
        "tiles": [
            {
                "id": tile_id,
                "original": f"originals/{tile_by_id[tile_id].source_path.name}",
                "width": tile_by_id[tile_id].width,
                "height": tile_by_id[tile_id].height,
                "channels": tile_by_id[tile_id].channels,
                "knowledge": knowledge.get(tile_id, ""),
            }
            for tile_id in referenced
        ],
    }
    validate_metadata(metadata)
    metadata_path = root / "metadata.json"
    metadata_path.write_bytes(json.dumps(metadata, indent=2).encode() + b"\n")
    return Bundle(root=root, mosaic_path=mosaic_path, metadata_path=metadata_path,
                  originals_dir=originals, metadata=metadata)


def export_knowledge(tiles: list[TileRecord], knowledge: dict[int, str], out_path) -> dict:
    """Write a standalone tile-knowledge document for upload elsewhere.

    One record per tile (id, source filename, knowledge text, empty when
    unset). Unknown tile ids in the map are rejected.
    """
    tile_by_id = {t.id: t for t in tiles}
    _check_knowledge_ids(knowledge, tile_by_id)
    doc = {
        "version": METADATA_VERSION,
        "entries": [
            {
                "tile_id": t.id,
                "file": t.source_path.name,
                "knowledge": knowledge.get(t.id, ""),
            }
            for t in sorted(tiles, key=lambda t: t.id)
        ],
    }
    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(json.dumps(doc, indent=2).encode() + b"\n")
    return doc


def _check_knowledge_ids(knowledge: dict[int, str], tile_by_id: dict[int, TileRecord]) -> None:
    for key in knowledge:
        if key not in tile_by_id:
            raise KnowledgeKeyError(f"knowledge entry references unknown tile id {key}")


def validate_metadata(doc: dict) -> None:
    """Raise ValueError naming the offending key if the schema is violated."""
    def require(container, key, kind, where):
        if key not in container:
            raise ValueError(f"metadata key '{where}{key}' missing")
        if not isinstance(container[key], kind) or isinstance(container[key], bool):
            raise ValueError(f"metadata key '{where}{key}' has wrong type")
        return container[key]

    version = require(doc, "version", int, "")
    if version != METADATA_VERSION:
        raise ValueError(f"metadata key 'version' unsupported: {version}")
    grid = require(doc, "grid", dict, "")
    rows = require(grid, "rows", int, "grid.")
    cols = require(grid, "cols", int, "grid.")
    require(grid, "tile_size", int, "grid.")
    target = require(doc, "target", dict, "")
    require(target, "width", int, "target.")
    require(target, "height", int, "target.")
    crop = require(target, "crop", list, "target.")
    if len(crop) != 2:
        raise ValueError("metadata key 'target.crop' must have two entries")
    cells = require(doc, "cells", list, "")
    if len(cells) != rows * cols:
        raise ValueError(
            f"metadata key 'cells' has {len(cells)} entries, expected {rows * cols}"
        )
    tile_entries = require(doc, "tiles", list, "")
    tile_ids = set()
    for entry in tile_entries:
        tile_ids.add(require(entry, "id", int, "tiles[]."))
        require(entry, "original", str, "tiles[].")
        require(entry, "width", int, "tiles[].")
        require(entry, "height", int, "tiles[].")
        require(entry, "channels", int, "tiles[].")
        require(entry, "knowledge", str, "tiles[].")
    for index, cell in enumerate(cells):
        require(cell, "row", int, "cells[].")
        require(cell, "col", int, "cells[].")
        require(cell, "score", (int, float), "cells[].")
        if require(cell, "tile_id", int, "cells[].") not in tile_ids:
            raise ValueError(
                f"metadata key 'cells[{index}].tile_id' does not resolve to a tile"
            )


# ----------------------------------- helpers ---------------------------------


def load_image_rgb(path) -> np.ndarray:
    """Load PNG/JPEG as an (H, W, 3) uint8 array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def load_knowledge(path, tiles: list[TileRecord]) -> dict[int, str]:
    """Parse a tab-separated filename-to-text map keyed back to tile ids.

    Lines look like ``car_012.jpg<TAB>where to buy ...``; ``#`` comments
    and blank lines are skipped. A filename matching no ingested tile is
    an error.
    """
    by_name = {t.source_path.name: t.id for t in tiles}
    knowledge: dict[int, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, _, text = line.partition("\t")
        name = name.strip()
        if name not in by_name:
            raise KnowledgeKeyError(
                f"{path}:{lineno}: no tile named {name!r} in the library"
            )
        knowledge[by_name[name]] = text.strip()
    return knowledge

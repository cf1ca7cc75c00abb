// Typed view of a bundle's metadata.json plus field-level validation.

export interface GridInfo {
  rows: number;
  cols: number;
  tile_size: number;
}

export interface TargetInfo {
  width: number;
  height: number;
  crop: [number, number];
}

export interface CellEntry {
  row: number;
  col: number;
  tile_id: number;
  score: number;
}

export interface TileEntry {
  id: number;
  original: string;
  width: number;
  height: number;
  channels: number;
  knowledge: string;
}

export interface BundleMetadata {
  version: number;
  grid: GridInfo;
  target: TargetInfo;
  cells: CellEntry[];
  tiles: TileEntry[];
}

export class BundleFormatError extends Error {
  constructor(public readonly field: string, message: string) {
    super(message);
    this.name = "BundleFormatError";
  }
}

export class UnsupportedVersionError extends BundleFormatError {
  constructor(version: unknown) {
    super("version", `unsupported metadata version: ${String(version)} (expected 1)`);
    this.name = "UnsupportedVersionError";
  }
}

function asObject(value: unknown, field: string): Record<string, unknown> {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new BundleFormatError(field, `'${field}' must be an object`);
  }
  return value as Record<string, unknown>;
}

function asNumber(value: unknown, field: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new BundleFormatError(field, `'${field}' must be a finite number`);
  }
  return value;
}

function asString(value: unknown, field: string): string {
  if (typeof value !== "string") {
    throw new BundleFormatError(field, `'${field}' must be a string`);
  }
  return value;
}

function asArray(value: unknown, field: string): unknown[] {
  if (!Array.isArray(value)) {
    throw new BundleFormatError(field, `'${field}' must be an array`);
  }
  return value;
}

/** Validate raw metadata; errors name the offending field. */
export function parseMetadata(raw: unknown): BundleMetadata {
  const doc = asObject(raw, "metadata");
  if (doc.version !== 1) {
    throw new UnsupportedVersionError(doc.version);
  }

  const gridRaw = asObject(doc.grid, "grid");
  const grid: GridInfo = {
    rows: asNumber(gridRaw.rows, "grid.rows"),
    cols: asNumber(gridRaw.cols, "grid.cols"),
    tile_size: asNumber(gridRaw.tile_size, "grid.tile_size"),
  };
  if (grid.rows < 1 || grid.cols < 1 || grid.tile_size < 1) {
    throw new BundleFormatError("grid", "'grid' dimensions must be >= 1");
  }

  const targetRaw = asObject(doc.target, "target");
  const cropRaw = asArray(targetRaw.crop, "target.crop");
  if (cropRaw.length !== 2) {
    throw new BundleFormatError("target.crop", "'target.crop' must hold [x0, y0]");
  }
  const target: TargetInfo = {
    width: asNumber(targetRaw.width, "target.width"),
    height: asNumber(targetRaw.height, "target.height"),
    crop: [asNumber(cropRaw[0], "target.crop"), asNumber(cropRaw[1], "target.crop")],
  };

  const tiles = asArray(doc.tiles, "tiles").map((entry, i) => {
    const t = asObject(entry, `tiles[${i}]`);
    return {
      id: asNumber(t.id, `tiles[${i}].id`),
      original: asString(t.original, `tiles[${i}].original`),
      width: asNumber(t.width, `tiles[${i}].width`),
      height: asNumber(t.height, `tiles[${i}].height`),
      channels: asNumber(t.channels, `tiles[${i}].channels`),
      knowledge: asString(t.knowledge, `tiles[${i}].knowledge`),
    };
  });
  const tileIds = new Set(tiles.map((t) => t.id));

  const cells = asArray(doc.cells, "cells").map((entry, i) => {
    const c = asObject(entry, `cells[${i}]`);
    const cell = {
      row: asNumber(c.row, `cells[${i}].row`),
      col: asNumber(c.col, `cells[${i}].col`),
      tile_id: asNumber(c.tile_id, `cells[${i}].tile_id`),
      score: asNumber(c.score, `cells[${i}].score`),
    };
    if (!tileIds.has(cell.tile_id)) {
      throw new BundleFormatError(
        `cells[${i}].tile_id`,
        `'cells[${i}].tile_id' ${cell.tile_id} does not resolve to a tile`,
      );
    }
    return cell;
  });
  if (cells.length !== grid.rows * grid.cols) {
    throw new BundleFormatError(
      "cells",
      `'cells' holds ${cells.length} entries, expected rows*cols = ${grid.rows * grid.cols}`,
    );
  }

  return { version: 1, grid, target, cells, tiles };
}

/** Row-major cell lookup. */
export function cellAt(metadata: BundleMetadata, row: number, col: number): CellEntry {
  const index = row * metadata.grid.cols + col;
  const cell = metadata.cells[index];
  if (!cell || cell.row !== row || cell.col !== col) {
    throw new BundleFormatError("cells", `'cells' is not row-major at (${row}, ${col})`);
  }
  return cell;
}

export function tileById(metadata: BundleMetadata, tileId: number): TileEntry {
  const tile = metadata.tiles.find((t) => t.id === tileId);
  if (!tile) {
    throw new BundleFormatError("tiles", `no tile with id ${tileId}`);
  }
  return tile;
}

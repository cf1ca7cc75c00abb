// Display-scale math and click-to-cell mapping. Scaling is restricted to
// integer ratios (q or 1/q) with centered letterboxing so the inverse
// mapping is exact.

export interface GridGeometry {
  rows: number;
  cols: number;
  tileSize: number;
}

export interface DisplayTransform {
  scale: number; // integer >= 1, or 1/integer
  offsetX: number;
  offsetY: number;
}

export interface CellHit {
  row: number;
  col: number;
}

export function mosaicSize(grid: GridGeometry): { width: number; height: number } {
  return { width: grid.cols * grid.tileSize, height: grid.rows * grid.tileSize };
}

/** Largest integer-ratio scale that fits the viewport, centered. */
export function fitTransform(
  grid: GridGeometry,
  viewWidth: number,
  viewHeight: number,
): DisplayTransform {
  const { width, height } = mosaicSize(grid);
  const up = Math.floor(Math.min(viewWidth / width, viewHeight / height));
  let scale: number;
  if (up >= 1) {
    scale = up;
  } else {
    const down = Math.ceil(Math.max(width / viewWidth, height / viewHeight));
    scale = 1 / down;
  }
  return {
    scale,
    offsetX: Math.floor((viewWidth - width * scale) / 2),
    offsetY: Math.floor((viewHeight - height * scale) / 2),
  };
}

/**
 * Map display coordinates to the cell under them, or null when outside
 * the mosaic. Cells are half-open, so a click exactly on boundary
 * x = col * tileSize lands in that column.
 */
export function hitTest(
  x: number,
  y: number,
  grid: GridGeometry,
  transform: DisplayTransform,
): CellHit | null {
  const { width, height } = mosaicSize(grid);
  const nativeX = (x - transform.offsetX) / transform.scale;
  const nativeY = (y - transform.offsetY) / transform.scale;
  if (nativeX < 0 || nativeY < 0 || nativeX >= width || nativeY >= height) {
    return null;
  }
  return {
    row: Math.floor(nativeY / grid.tileSize),
    col: Math.floor(nativeX / grid.tileSize),
  };
}

/** Display coordinates of a cell's center under the given transform. */
export function cellCenter(
  row: number,
  col: number,
  grid: GridGeometry,
  transform: DisplayTransform,
): { x: number; y: number } {
  return {
    x: transform.offsetX + (col + 0.5) * grid.tileSize * transform.scale,
    y: transform.offsetY + (row + 0.5) * grid.tileSize * transform.scale,
  };
}

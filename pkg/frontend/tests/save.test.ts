// Click-and-display round trip against the fixture bundle produced by the
// composer CLI: cell centers resolve to the right originals, and the Save
// path yields bytes identical to the bundled files.

import assert from "node:assert/strict";
import { readFile } from "node:fs/promises";
import { test } from "node:test";

import { loadBundle, originalBytes, originalPath } from "../src/bundle.js";
import { cellCenter, fitTransform, hitTest } from "../src/hittest.js";
import { cellAt } from "../src/schema.js";
import { FIXTURE_BUNDLE, fsSource } from "./helpers.js";

const EXPECTED_ORIGINALS: Record<string, string> = {
  "0,0": "originals/car_000.png",
  "0,1": "originals/car_001.png",
  "1,0": "originals/car_002.png",
  "1,1": "originals/car_003.png",
};

test("clicking every cell center opens the correct original (x1 and x2)", async () => {
  const bundle = await loadBundle(fsSource(FIXTURE_BUNDLE));
  const g = bundle.metadata.grid;
  const grid = { rows: g.rows, cols: g.cols, tileSize: g.tile_size };
  for (const scale of [1, 2]) {
    const mosaicWidth = grid.cols * grid.tileSize;
    const mosaicHeight = grid.rows * grid.tileSize;
    const transform = fitTransform(grid, mosaicWidth * scale, mosaicHeight * scale);
    assert.equal(transform.scale, scale);
    let correct = 0;
    for (let row = 0; row < grid.rows; row++) {
      for (let col = 0; col < grid.cols; col++) {
        const center = cellCenter(row, col, grid, transform);
        const hit = hitTest(center.x, center.y, grid, transform);
        assert.ok(hit, `no hit at center of (${row}, ${col})`);
        const cell = cellAt(bundle.metadata, hit.row, hit.col);
        assert.equal(
          originalPath(bundle, cell.tile_id),
          EXPECTED_ORIGINALS[`${row},${col}`],
        );
        correct += 1;
      }
    }
    assert.equal(correct, 4);
  }
});

test("save path returns bytes identical to the bundled original", async () => {
  const bundle = await loadBundle(fsSource(FIXTURE_BUNDLE));
  for (const cell of bundle.metadata.cells) {
    const viaViewer = await originalBytes(bundle, cell.tile_id);
    const onDisk = new Uint8Array(
      await readFile(FIXTURE_BUNDLE + originalPath(bundle, cell.tile_id)),
    );
    assert.deepEqual(viaViewer, onDisk);
    assert.ok(onDisk.length > 0);
  }
});

test("knowledge text arrives verbatim from metadata", async () => {
  const bundle = await loadBundle(fsSource(FIXTURE_BUNDLE));
  const withText = bundle.metadata.tiles.filter((t) => t.knowledge !== "");
  assert.deepEqual(
    withText.map((t) => [t.id, t.knowledge]),
    [
      [0, "EcoTire retailer list for this model"],
      [2, "recycled-rubber supplier notes"],
    ],
  );
});

test("missing original surfaces as a readable error", async () => {
  const bundle = await loadBundle(fsSource(FIXTURE_BUNDLE));
  const source = bundle.source;
  const broken = {
    metadata: bundle.metadata,
    source: {
      readText: source.readText,
      readBytes: () => Promise.reject(new Error("ENOENT")),
    },
  };
  await assert.rejects(() => originalBytes(broken, 0), /ENOENT/);
});

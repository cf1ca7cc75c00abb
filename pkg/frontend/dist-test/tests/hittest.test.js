import assert from "node:assert/strict";
import { test } from "node:test";
import { cellCenter, fitTransform, hitTest } from "../src/hittest.js";
const IDENTITY = { scale: 1, offsetX: 0, offsetY: 0 };
test("click inside the first cell", () => {
    const grid = { rows: 4, cols: 4, tileSize: 32 };
    assert.deepEqual(hitTest(5, 5, grid, IDENTITY), { row: 0, col: 0 });
});
test("click maps by floor division", () => {
    const grid = { rows: 4, cols: 4, tileSize: 32 };
    assert.deepEqual(hitTest(95, 33, grid, IDENTITY), { row: 1, col: 2 });
});
test("boundary click lands in the starting column (half-open cells)", () => {
    const grid = { rows: 4, cols: 4, tileSize: 32 };
    for (let col = 0; col < 4; col++) {
        assert.deepEqual(hitTest(col * 32, 0, grid, IDENTITY), { row: 0, col });
    }
});
test("clicks outside the mosaic are rejected", () => {
    const grid = { rows: 2, cols: 2, tileSize: 8 };
    assert.equal(hitTest(-1, 4, grid, IDENTITY), null);
    assert.equal(hitTest(16, 4, grid, IDENTITY), null);
    assert.equal(hitTest(4, 16, grid, IDENTITY), null);
    const letterboxed = fitTransform(grid, 50, 50); // x3 scale, 1px margin
    assert.equal(hitTest(0, 0, grid, letterboxed), null);
});
test("fitTransform picks integer upscale ratios", () => {
    const grid = { rows: 2, cols: 2, tileSize: 8 };
    assert.equal(fitTransform(grid, 16, 16).scale, 1);
    assert.equal(fitTransform(grid, 40, 33).scale, 2); // floor(min(2.5, 2.06))
    assert.equal(fitTransform(grid, 64, 64).scale, 4);
});
test("fitTransform falls back to integer downscale with centering", () => {
    const grid = { rows: 10, cols: 10, tileSize: 10 };
    const t = fitTransform(grid, 60, 40);
    assert.equal(t.scale, 1 / 3); // ceil(max(100/60, 100/40)) = 3
    assert.equal(t.offsetX, Math.floor((60 - 100 / 3) / 2));
});
test("hit test inverts cell centers at x1 and x2 display scale", () => {
    const grid = { rows: 2, cols: 2, tileSize: 8 };
    for (const viewSize of [16, 32]) {
        const t = fitTransform(grid, viewSize, viewSize);
        assert.equal(t.scale, viewSize / 16);
        for (let row = 0; row < grid.rows; row++) {
            for (let col = 0; col < grid.cols; col++) {
                const center = cellCenter(row, col, grid, t);
                assert.deepEqual(hitTest(center.x, center.y, grid, t), { row, col });
            }
        }
    }
});
test("hit test inverts cell centers under letterboxed transforms", () => {
    const grid = { rows: 3, cols: 5, tileSize: 16 };
    const t = fitTransform(grid, 333, 207); // odd viewport, offsets nonzero
    for (let row = 0; row < grid.rows; row++) {
        for (let col = 0; col < grid.cols; col++) {
            const center = cellCenter(row, col, grid, t);
            assert.deepEqual(hitTest(center.x, center.y, grid, t), { row, col });
        }
    }
});

import assert from "node:assert/strict";
import { test } from "node:test";
import { BundleFormatError, cellAt, parseMetadata, tileById, UnsupportedVersionError, } from "../src/schema.js";
import { fixtureMetadata } from "./helpers.js";
function structuredCloneOf(value) {
    return JSON.parse(JSON.stringify(value));
}
test("fixture bundle metadata parses into a 2x2 grid", async () => {
    const metadata = parseMetadata(await fixtureMetadata());
    assert.equal(metadata.grid.rows, 2);
    assert.equal(metadata.grid.cols, 2);
    assert.equal(metadata.cells.length, 4);
    assert.equal(metadata.tiles.length, 4);
    assert.equal(cellAt(metadata, 1, 0).tile_id, 2);
    assert.equal(tileById(metadata, 0).knowledge, "EcoTire retailer list for this model");
});
test("cell count mismatch is reported on 'cells'", async () => {
    const doc = structuredCloneOf(await fixtureMetadata());
    doc.cells.pop();
    assert.throws(() => parseMetadata(doc), (err) => err instanceof BundleFormatError && err.field === "cells");
});
test("version other than 1 is an unsupported-version error", async () => {
    const doc = structuredCloneOf(await fixtureMetadata());
    doc.version = 2;
    assert.throws(() => parseMetadata(doc), UnsupportedVersionError);
});
test("dangling cell tile_id names the offending cell", async () => {
    const doc = structuredCloneOf(await fixtureMetadata());
    doc.cells[3].tile_id = 99;
    assert.throws(() => parseMetadata(doc), (err) => err instanceof BundleFormatError && err.field === "cells[3].tile_id");
});
test("missing grid key is named", async () => {
    const doc = structuredCloneOf(await fixtureMetadata());
    delete doc.grid.tile_size;
    assert.throws(() => parseMetadata(doc), (err) => err instanceof BundleFormatError && err.field === "grid.tile_size");
});
test("non-string knowledge is rejected with its field", async () => {
    const doc = structuredCloneOf(await fixtureMetadata());
    doc.tiles[1].knowledge = 7;
    assert.throws(() => parseMetadata(doc), (err) => err instanceof BundleFormatError && err.field === "tiles[1].knowledge");
});

import { readFile } from "node:fs/promises";
import { fileURLToPath } from "node:url";
// Compiled tests live in dist-test/tests/, two levels below frontend/.
export const FIXTURE_BUNDLE = fileURLToPath(new URL("../../tests/fixtures/bundle/", import.meta.url));
/** Filesystem-backed source mirroring what fetch/picker sources provide. */
export function fsSource(root) {
    return {
        readText: (relPath) => readFile(root + relPath, "utf8"),
        readBytes: async (relPath) => new Uint8Array(await readFile(root + relPath)),
    };
}
export async function fixtureMetadata() {
    return JSON.parse(await readFile(FIXTURE_BUNDLE + "metadata.json", "utf8"));
}

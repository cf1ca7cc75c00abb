// Bundle loading over an abstract byte source, so the same code path
// serves fetch-from-server, the directory picker, and filesystem tests.
import { parseMetadata, tileById } from "./schema.js";
export async function loadBundle(source) {
    const raw = await source.readText("metadata.json");
    let doc;
    try {
        doc = JSON.parse(raw);
    }
    catch (err) {
        throw new Error(`metadata.json is not valid JSON: ${String(err)}`);
    }
    return { metadata: parseMetadata(doc), source };
}
export function originalPath(bundle, tileId) {
    return tileById(bundle.metadata, tileId).original;
}
/** Bytes of the original image backing a tile; what Save downloads. */
export async function originalBytes(bundle, tileId) {
    return bundle.source.readBytes(originalPath(bundle, tileId));
}
/** Source for a bundle served next to the page (no backend logic). */
export function fetchSource(baseUrl) {
    const resolve = (relPath) => `${baseUrl.replace(/\/$/, "")}/${relPath}`;
    const get = async (relPath) => {
        const response = await fetch(resolve(relPath));
        if (!response.ok) {
            throw new Error(`${resolve(relPath)}: HTTP ${response.status}`);
        }
        return response;
    };
    return {
        readText: async (relPath) => (await get(relPath)).text(),
        readBytes: async (relPath) => new Uint8Array(await (await get(relPath)).arrayBuffer()),
    };
}
/** Source backed by a directory-picker selection. */
export function fileMapSource(files) {
    const lookup = (relPath) => {
        const file = files.get(relPath);
        if (!file) {
            throw new Error(`bundle file missing from selection: ${relPath}`);
        }
        return file;
    };
    return {
        readText: async (relPath) => lookup(relPath).text(),
        readBytes: async (relPath) => new Uint8Array(await lookup(relPath).arrayBuffer()),
    };
}
/**
 * Index a picker's FileList by bundle-relative path (the picked directory
 * itself is stripped from webkitRelativePath).
 */
export function indexPickedFiles(files) {
    const map = new Map();
    for (const file of files) {
        const full = file.webkitRelativePath || file.name;
        const parts = full.split("/");
        const rel = parts.length > 1 ? parts.slice(1).join("/") : full;
        map.set(rel, file);
    }
    return map;
}

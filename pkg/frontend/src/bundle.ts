// Bundle loading over an abstract byte source, so the same code path
// serves fetch-from-server, the directory picker, and filesystem tests.

import { BundleMetadata, parseMetadata, tileById } from "./schema.js";

export interface BundleSource {
  readText(relPath: string): Promise<string>;
  readBytes(relPath: string): Promise<Uint8Array>;
}

export interface LoadedBundle {
  metadata: BundleMetadata;
  source: BundleSource;
}

export async function loadBundle(source: BundleSource): Promise<LoadedBundle> {
  const raw = await source.readText("metadata.json");
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch (err) {
    throw new Error(`metadata.json is not valid JSON: ${String(err)}`);
  }
  return { metadata: parseMetadata(doc), source };
}

export function originalPath(bundle: LoadedBundle, tileId: number): string {
  return tileById(bundle.metadata, tileId).original;
}

/** Bytes of the original image backing a tile; what Save downloads. */
export async function originalBytes(bundle: LoadedBundle, tileId: number): Promise<Uint8Array> {
  return bundle.source.readBytes(originalPath(bundle, tileId));
}

/** Source for a bundle served next to the page (no backend logic). */
export function fetchSource(baseUrl: string): BundleSource {
  const resolve = (relPath: string) => `${baseUrl.replace(/\/$/, "")}/${relPath}`;
  const get = async (relPath: string): Promise<Response> => {
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
export function fileMapSource(files: Map<string, File>): BundleSource {
  const lookup = (relPath: string): File => {
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
export function indexPickedFiles(files: Iterable<File>): Map<string, File> {
  const map = new Map<string, File>();
  for (const file of files) {
    const full = (file as File & { webkitRelativePath?: string }).webkitRelativePath || file.name;
    const parts = full.split("/");
    const rel = parts.length > 1 ? parts.slice(1).join("/") : full;
    map.set(rel, file);
  }
  return map;
}

// Page bootstrap: load a bundle served next to the page (?bundle=<path>,
// default "bundle") or from the directory picker, then hand it to the
// viewer.

import { fetchSource, fileMapSource, indexPickedFiles, loadBundle, LoadedBundle } from "./bundle.js";
import { BundleFormatError } from "./schema.js";
import { MosaicViewer, ViewerElements } from "./viewer.js";

function elements(): ViewerElements {
  return {
    canvas: document.querySelector<HTMLCanvasElement>("#mosaic")!,
    modal: document.querySelector<HTMLElement>("#modal")!,
    modalImage: document.querySelector<HTMLImageElement>("#modal-image")!,
    modalTitle: document.querySelector<HTMLElement>("#modal-title")!,
    modalScore: document.querySelector<HTMLElement>("#modal-score")!,
    knowledgePanel: document.querySelector<HTMLElement>("#knowledge-panel")!,
    knowledgeText: document.querySelector<HTMLElement>("#knowledge-text")!,
    errorPanel: document.querySelector<HTMLElement>("#modal-error")!,
    saveButton: document.querySelector<HTMLButtonElement>("#save-button")!,
    closeButton: document.querySelector<HTMLButtonElement>("#close-button")!,
    autoSaveToggle: document.querySelector<HTMLInputElement>("#auto-save")!,
  };
}

let viewer: MosaicViewer | null = null;

async function show(bundle: LoadedBundle, status: HTMLElement): Promise<void> {
  viewer?.dispose();
  viewer = new MosaicViewer(elements(), bundle);
  await viewer.start();
  const { rows, cols } = bundle.metadata.grid;
  status.textContent =
    `loaded ${rows}x${cols} mosaic, ${bundle.metadata.tiles.length} tiles - click a tile`;
  window.addEventListener("resize", () => viewer?.render());
}

function describe(err: unknown): string {
  if (err instanceof BundleFormatError) {
    return `invalid bundle (field '${err.field}'): ${err.message}`;
  }
  return String(err);
}

window.addEventListener("DOMContentLoaded", () => {
  const status = document.querySelector<HTMLElement>("#status")!;
  const picker = document.querySelector<HTMLInputElement>("#picker")!;

  picker.addEventListener("change", async () => {
    if (!picker.files || picker.files.length === 0) return;
    try {
      const source = fileMapSource(indexPickedFiles(picker.files));
      await show(await loadBundle(source), status);
    } catch (err) {
      status.textContent = describe(err);
    }
  });

  const base = new URLSearchParams(window.location.search).get("bundle") ?? "bundle";
  loadBundle(fetchSource(base))
    .then((bundle) => show(bundle, status))
    .catch((err) => {
      status.textContent =
        `no bundle at '${base}' (${describe(err)}) - pick a bundle directory below`;
    });
});

// Page bootstrap: load a bundle served next to the page (?bundle=<path>,
// default "bundle") or from the directory picker, then hand it to the
// viewer.
import { fetchSource, fileMapSource, indexPickedFiles, loadBundle } from "./bundle.js";
import { BundleFormatError } from "./schema.js";
import { MosaicViewer } from "./viewer.js";
function elements() {
    return {
        canvas: document.querySelector("#mosaic"),
        modal: document.querySelector("#modal"),
        modalImage: document.querySelector("#modal-image"),
        modalTitle: document.querySelector("#modal-title"),
        modalScore: document.querySelector("#modal-score"),
        knowledgePanel: document.querySelector("#knowledge-panel"),
        knowledgeText: document.querySelector("#knowledge-text"),
        errorPanel: document.querySelector("#modal-error"),
        saveButton: document.querySelector("#save-button"),
        closeButton: document.querySelector("#close-button"),
        autoSaveToggle: document.querySelector("#auto-save"),
    };
}
let viewer = null;
async function show(bundle, status) {
    viewer?.dispose();
    viewer = new MosaicViewer(elements(), bundle);
    await viewer.start();
    const { rows, cols } = bundle.metadata.grid;
    status.textContent =
        `loaded ${rows}x${cols} mosaic, ${bundle.metadata.tiles.length} tiles - click a tile`;
    window.addEventListener("resize", () => viewer?.render());
}
function describe(err) {
    if (err instanceof BundleFormatError) {
        return `invalid bundle (field '${err.field}'): ${err.message}`;
    }
    return String(err);
}
window.addEventListener("DOMContentLoaded", () => {
    const status = document.querySelector("#status");
    const picker = document.querySelector("#picker");
    picker.addEventListener("change", async () => {
        if (!picker.files || picker.files.length === 0)
            return;
        try {
            const source = fileMapSource(indexPickedFiles(picker.files));
            await show(await loadBundle(source), status);
        }
        catch (err) {
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

// DOM side of the viewer: render the mosaic to a canvas, map clicks to
// cells, and pop up the original image with its knowledge text and a
// Save action. All geometry lives in hittest.ts; all I/O in bundle.ts.
import { originalBytes, originalPath } from "./bundle.js";
import { cellCenter, fitTransform, hitTest, mosaicSize } from "./hittest.js";
import { cellAt, tileById } from "./schema.js";
export class MosaicViewer {
    el;
    bundle;
    transform = { scale: 1, offsetX: 0, offsetY: 0 };
    selected = null;
    mosaicImage = null;
    objectUrls = [];
    constructor(el, bundle) {
        this.el = el;
        this.bundle = bundle;
        el.canvas.addEventListener("click", (ev) => {
            const rect = el.canvas.getBoundingClientRect();
            void this.handleClick(ev.clientX - rect.left, ev.clientY - rect.top);
        });
        el.closeButton.addEventListener("click", () => this.dismiss());
        el.modal.addEventListener("click", (ev) => {
            if (ev.target === el.modal)
                this.dismiss();
        });
    }
    get grid() {
        const g = this.bundle.metadata.grid;
        return { rows: g.rows, cols: g.cols, tileSize: g.tile_size };
    }
    async start() {
        const bytes = await this.bundle.source.readBytes("mosaic.png");
        this.mosaicImage = await this.decodeImage(bytes);
        this.render();
    }
    /** Fit the mosaic into the canvas's current layout size and draw it. */
    render() {
        if (!this.mosaicImage)
            return;
        const canvas = this.el.canvas;
        const viewWidth = canvas.clientWidth || mosaicSize(this.grid).width;
        const viewHeight = canvas.clientHeight || mosaicSize(this.grid).height;
        canvas.width = viewWidth;
        canvas.height = viewHeight;
        this.transform = fitTransform(this.grid, viewWidth, viewHeight);
        const ctx = canvas.getContext("2d");
        ctx.imageSmoothingEnabled = false;
        ctx.clearRect(0, 0, viewWidth, viewHeight);
        const { width, height } = mosaicSize(this.grid);
        const t = this.transform;
        ctx.drawImage(this.mosaicImage, t.offsetX, t.offsetY, width * t.scale, height * t.scale);
        if (this.selected) {
            const size = this.grid.tileSize * t.scale;
            ctx.strokeStyle = "#ff5252";
            ctx.lineWidth = 2;
            ctx.strokeRect(t.offsetX + this.selected.col * size, t.offsetY + this.selected.row * size, size, size);
        }
    }
    async handleClick(x, y) {
        const hit = hitTest(x, y, this.grid, this.transform);
        if (!hit)
            return; // clicks outside the mosaic are a no-op
        const cell = cellAt(this.bundle.metadata, hit.row, hit.col);
        this.selected = cell;
        this.render();
        await this.showOriginal(cell);
    }
    async showOriginal(cell) {
        const tile = tileById(this.bundle.metadata, cell.tile_id);
        const el = this.el;
        el.modalTitle.textContent = originalPath(this.bundle, tile.id).replace(/^originals\//, "");
        el.modalScore.textContent =
            `cell (${cell.row}, ${cell.col}) - tile ${tile.id} - score ${cell.score.toPrecision(6)}`;
        if (tile.knowledge) {
            el.knowledgePanel.hidden = false;
            el.knowledgeText.textContent = tile.knowledge;
        }
        else {
            el.knowledgePanel.hidden = true;
            el.knowledgeText.textContent = "";
        }
        el.errorPanel.hidden = true;
        el.modalImage.hidden = false;
        el.saveButton.disabled = true;
        el.modal.hidden = false;
        try {
            const bytes = await originalBytes(this.bundle, tile.id);
            el.modalImage.src = this.objectUrl(bytes);
            el.saveButton.disabled = false;
            el.saveButton.onclick = () => this.save(tile, bytes);
            if (el.autoSaveToggle.checked) {
                this.save(tile, bytes);
            }
        }
        catch (err) {
            el.modalImage.hidden = true;
            el.errorPanel.hidden = false;
            el.errorPanel.textContent = `original image unavailable: ${String(err)}`;
        }
    }
    /** Download the original bytes under their bundled filename. */
    save(tile, bytes) {
        const anchor = document.createElement("a");
        anchor.href = this.objectUrl(bytes);
        anchor.download = tile.original.replace(/^originals\//, "");
        anchor.click();
    }
    dismiss() {
        this.el.modal.hidden = true;
    }
    /** Display center of a cell; exposed for scripted walkthroughs. */
    centerOf(row, col) {
        return cellCenter(row, col, this.grid, this.transform);
    }
    dispose() {
        for (const url of this.objectUrls)
            URL.revokeObjectURL(url);
        this.objectUrls = [];
    }
    objectUrl(bytes) {
        const url = URL.createObjectURL(new Blob([bytes], { type: "image/png" }));
        this.objectUrls.push(url);
        return url;
    }
    decodeImage(bytes) {
        return new Promise((resolve, reject) => {
            const img = new Image();
            img.onload = () => resolve(img);
            img.onerror = () => reject(new Error("mosaic.png failed to decode"));
            img.src = this.objectUrl(bytes);
        });
    }
}

import { ApiClient, ApiError, parseAnnotationDoc } from "./api";
import { AnnotationGrid, validateAnnotationDoc } from "./grid";
import { SpectrogramView, sourceColor } from "./heatmap";
import { JobPanel } from "./jobpanel";
import type { SpectrogramDoc } from "./types";

const api = new ApiClient("");

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

function showError(message: string): void {
    const banner = document.getElementById("error-banner");
    if (!banner) return;
    banner.textContent = message;
    banner.classList.toggle("hidden", message === "");
}

class TrackEditor {
    grid!: AnnotationGrid;
    view!: SpectrogramView;
    private doc!: SpectrogramDoc;
    private canvas: HTMLCanvasElement;
    private fractionLabel: HTMLElement;
    private submitButton: HTMLButtonElement;
    private axes: HTMLElement;
    private erasing = false;
    private pointerDown = false;

    constructor(private root: HTMLElement, private trackId: string) {
        this.canvas = el("canvas", "spectrogram");
        this.fractionLabel = el("span", "fraction", "painted: 0.0%");
        this.submitButton = el("button", "", "submit annotations");
        this.submitButton.disabled = true;
        this.axes = el("div", "axes");
    }

    async load(): Promise<void> {
        this.doc = await api.getSpectrogram(this.trackId);
        this.grid = new AnnotationGrid(this.doc.F, this.doc.cols, 2);
        try {
            const stored = await api.getAnnotations(this.trackId);
            const doc = parseAnnotationDoc(stored);
            if (doc.shape[0] === this.doc.F && doc.shape[1] === this.doc.cols) {
                this.grid = AnnotationGrid.fromAnnotationDoc(doc);
            }
        } catch (err) {
            if (!(err instanceof ApiError && err.status === 404)) throw err;
        }
        this.view = new SpectrogramView(this.canvas, this.doc, this.grid);
        this.buildControls();
        this.view.render();
        this.updateStatus();
    }

    private buildControls(): void {
        this.root.replaceChildren();
        const controls = el("div", "controls");

        for (let g = 0; g < this.grid.numSources; g++) {
            const btn = el("button", "source-btn", `source ${g + 1}`);
            btn.style.borderColor = sourceColor(g);
            btn.onclick = () => {
                this.grid.brush.source = g;
                this.erasing = false;
            };
            controls.appendChild(btn);
        }
        const eraser = el("button", "", "eraser");
        eraser.onclick = () => (this.erasing = true);
        controls.appendChild(eraser);

        const sizeLabel = el("label", "", "brush ");
        const size = el("input") as HTMLInputElement;
        size.type = "range";
        size.min = "1";
        size.max = "8";
        size.value = "2";
        this.grid.brush.size = 2;
        size.oninput = () => (this.grid.brush.size = Number(size.value));
        sizeLabel.appendChild(size);
        controls.appendChild(sizeLabel);

        const undo = el("button", "", "undo");
        undo.onclick = () => {
            this.grid.undo();
            this.view.render();
            this.updateStatus();
        };
        controls.appendChild(undo);

        const clear = el("button", "", "clear");
        clear.onclick = () => {
            this.grid.clear();
            this.view.render();
            this.updateStatus();
        };
        controls.appendChild(clear);

        controls.appendChild(this.fractionLabel);
        controls.appendChild(this.submitButton);
        this.submitButton.onclick = () => void this.submit();

        const zoom = el("div", "controls");
        const zoomIn = el("button", "", "zoom 2s");
        zoomIn.onclick = () => {
            const start = this.view.zoomStart * this.doc.hop_seconds;
            this.view.zoomToSeconds(start, start + 2.0);
            this.view.render();
            this.renderAxes();
        };
        const zoomOut = el("button", "", "full view");
        zoomOut.onclick = () => {
            this.view.resetZoom();
            this.view.render();
            this.renderAxes();
        };
        zoom.append(zoomIn, zoomOut);

        this.root.append(controls, zoom, this.canvas, this.axes);
        this.renderAxes();

        this.canvas.onpointerdown = (ev) => {
            this.pointerDown = true;
            this.grid.beginStroke();
            this.paintAt(ev);
        };
        this.canvas.onpointermove = (ev) => {
            if (this.pointerDown) this.paintAt(ev);
        };
        const finish = () => {
            if (this.pointerDown) {
                this.pointerDown = false;
                this.grid.endStroke();
            }
        };
        this.canvas.onpointerup = finish;
        this.canvas.onpointerleave = finish;

        const jobHost = el("div");
        this.root.appendChild(jobHost);
        const run = el("div", "controls");
        const method = el("select") as HTMLSelectElement;
        for (const name of ["lownuc", "nmf"]) {
            const opt = el("option", "", name) as HTMLOptionElement;
            opt.value = name;
            method.appendChild(opt);
        }
        const budget = el("input") as HTMLInputElement;
        budget.type = "number";
        budget.value = "30";
        budget.min = "1";
        const launch = el("button", "", "separate");
        launch.onclick = () => {
            const panel = new JobPanel(api, this.trackId);
            jobHost.replaceChildren(panel.root);
            void panel.start({
                method: method.value as "lownuc" | "nmf",
                budget_seconds: Number(budget.value),
            }).catch((err) => showError(`failed to launch job: ${err}`));
        };
        run.append(method, budget, launch);
        this.root.appendChild(run);
    }

    private paintAt(ev: PointerEvent): void {
        const cell = this.view.cellAt(ev.clientX, ev.clientY);
        if (!cell) return;
        if (this.erasing) {
            this.grid.erase(cell.row, cell.col);
        } else {
            this.grid.paint(cell.row, cell.col);
        }
        this.view.render();
        this.updateStatus();
    }

    private renderAxes(): void {
        this.axes.replaceChildren();
        const time = el("div", "axis", "time: ");
        for (const tick of this.view.timeAxis()) {
            time.appendChild(el("span", "tick", tick.label));
        }
        const freq = el("div", "axis", "freq: ");
        for (const tick of this.view.frequencyAxis()) {
            freq.appendChild(el("span", "tick", tick.label));
        }
        this.axes.append(time, freq);
    }

    private updateStatus(): void {
        this.fractionLabel.textContent = `painted: ${this.grid.fractionPercentLabel()}`;
        this.submitButton.disabled = this.grid.paintedCount() === 0;
    }

    private async submit(): Promise<void> {
        const doc = this.grid.toAnnotationDoc();
        const problems = validateAnnotationDoc(doc);
        if (problems.length > 0) {
            showError(`refusing to submit: ${problems[0]}`);
            return;
        }
        try {
            await api.putAnnotations(this.trackId, JSON.stringify(doc));
            showError("");
            this.submitButton.textContent = "submitted";
            setTimeout(() => (this.submitButton.textContent = "submit annotations"), 1500);
        } catch (err) {
            // keep the layer; the user can retry
            showError(`submit failed, layer preserved: ${err}`);
        }
    }
}

async function refreshTrackList(): Promise<void> {
    const list = document.getElementById("track-list");
    if (!list) return;
    list.replaceChildren();
    const tracks = await api.listTracks();
    if (tracks.length === 0) {
        list.appendChild(el("p", "hint", "no tracks yet: upload a mono 16-bit WAV"));
        return;
    }
    for (const track of tracks) {
        const item = el("button", "track-item",
            `${track.track_id} (${track.duration_seconds.toFixed(1)}s`
            + `${track.has_annotations ? ", annotated" : ""})`);
        item.onclick = () => void openTrack(track.track_id);
        list.appendChild(item);
    }
}

async function openTrack(trackId: string): Promise<void> {
    const host = document.getElementById("editor");
    if (!host) return;
    try {
        const editor = new TrackEditor(host, trackId);
        await editor.load();
        showError("");
    } catch (err) {
        if (err instanceof ApiError && err.status === 404) {
            showError(`track ${trackId} not found`);
        } else {
            showError(String(err));
        }
    }
}

function wireUpload(): void {
    const input = document.getElementById("upload") as HTMLInputElement | null;
    if (!input) return;
    input.onchange = async () => {
        const file = input.files?.[0];
        if (!file) return;
        try {
            const id = await api.uploadTrack(await file.arrayBuffer());
            await refreshTrackList();
            await openTrack(id);
        } catch (err) {
            showError(`upload failed: ${err}`);
        }
    };
}

export async function boot(): Promise<void> {
    wireUpload();
    try {
        await refreshTrackList();
    } catch (err) {
        showError(`cannot reach service: ${err}`);
    }
}

if (typeof document !== "undefined" && document.getElementById("track-list")) {
    void boot();
}

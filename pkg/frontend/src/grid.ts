import type { AnnotationBin, AnnotationDoc } from "./types";

export interface BrushState {
    source: number;
    size: number; // radius in cells; 1 paints a single cell
}

interface StrokeChange {
    index: number;
    previous: number;
}

// Per-cell source labels over the spectrogram grid. A cell carries at
// most one label (painting over an existing label replaces it), which is
// exactly what makes the exported masks one-hot and sum-to-one.
export class AnnotationGrid {
    readonly rows: number;
    readonly cols: number;
    readonly numSources: number;
    brush: BrushState = { source: 0, size: 1 };

    private labels: Int16Array; // -1 = unpainted, otherwise source index
    private painted = 0;
    private undoStack: StrokeChange[][] = [];
    private currentStroke: StrokeChange[] | null = null;

    constructor(rows: number, cols: number, numSources = 2) {
        if (rows < 1 || cols < 1 || numSources < 1) {
            throw new Error("grid dimensions and source count must be positive");
        }
        this.rows = rows;
        this.cols = cols;
        this.numSources = numSources;
        this.labels = new Int16Array(rows * cols).fill(-1);
    }

    labelAt(row: number, col: number): number {
        return this.labels[row * this.cols + col];
    }

    paintedCount(): number {
        return this.painted;
    }

    fraction(): number {
        return this.painted / (this.rows * this.cols);
    }

    fractionPercentLabel(): string {
        return `${(this.fraction() * 100).toFixed(1)}%`;
    }

    beginStroke(): void {
        this.currentStroke = [];
    }

    endStroke(): void {
        if (this.currentStroke && this.currentStroke.length > 0) {
            this.undoStack.push(this.currentStroke);
        }
        this.currentStroke = null;
    }

    // Paint with the current brush centered on (row, col); cells outside
    // the grid are ignored. Calls outside begin/endStroke become
    // single-change strokes so every edit stays undoable.
    paint(row: number, col: number): void {
        const implicit = this.currentStroke === null;
        if (implicit) this.beginStroke();
        const radius = Math.max(0, this.brush.size - 1);
        for (let dr = -radius; dr <= radius; dr++) {
            for (let dc = -radius; dc <= radius; dc++) {
                if (dr * dr + dc * dc > radius * radius) continue;
                this.setCell(row + dr, col + dc, this.brush.source);
            }
        }
        if (implicit) this.endStroke();
    }

    erase(row: number, col: number): void {
        const implicit = this.currentStroke === null;
        if (implicit) this.beginStroke();
        const radius = Math.max(0, this.brush.size - 1);
        for (let dr = -radius; dr <= radius; dr++) {
            for (let dc = -radius; dc <= radius; dc++) {
                if (dr * dr + dc * dc > radius * radius) continue;
                this.setCell(row + dr, col + dc, -1);
            }
        }
        if (implicit) this.endStroke();
    }

    private setCell(row: number, col: number, label: number): void {
        if (row < 0 || row >= this.rows || col < 0 || col >= this.cols) return;
        const index = row * this.cols + col;
        const previous = this.labels[index];
        if (previous === label) return;
        this.currentStroke?.push({ index, previous });
        this.labels[index] = label;
        if (previous === -1 && label !== -1) this.painted++;
        if (previous !== -1 && label === -1) this.painted--;
    }

    canUndo(): boolean {
        return this.undoStack.length > 0;
    }

    undo(): boolean {
        const stroke = this.undoStack.pop();
        if (!stroke) return false;
        // revert in reverse so overlapping edits restore correctly
        for (let i = stroke.length - 1; i >= 0; i--) {
            const { index, previous } = stroke[i];
            const current = this.labels[index];
            if (current === -1 && previous !== -1) this.painted++;
            if (current !== -1 && previous === -1) this.painted--;
            this.labels[index] = previous;
        }
        return true;
    }

    clear(): void {
        this.beginStroke();
        for (let r = 0; r < this.rows; r++) {
            for (let c = 0; c < this.cols; c++) {
                this.setCell(r, c, -1);
            }
        }
        this.endStroke();
    }

    // Binary annotation document: each painted cell gets a one-hot mask.
    // Bins are emitted in row-major order so the bytes are reproducible.
    toAnnotationDoc(): AnnotationDoc {
        const bins: AnnotationBin[] = [];
        for (let r = 0; r < this.rows; r++) {
            for (let c = 0; c < this.cols; c++) {
                const label = this.labels[r * this.cols + c];
                if (label === -1) continue;
                const mask = new Array(this.numSources).fill(0);
                mask[label] = 1;
                bins.push([r, c, mask]);
            }
        }
        return {
            shape: [this.rows, this.cols],
            num_sources: this.numSources,
            bins,
        };
    }

    toJson(): string {
        return JSON.stringify(this.toAnnotationDoc());
    }

    static fromAnnotationDoc(doc: AnnotationDoc): AnnotationGrid {
        const grid = new AnnotationGrid(doc.shape[0], doc.shape[1], doc.num_sources);
        grid.beginStroke();
        for (const [row, col, mask] of doc.bins) {
            let best = 0;
            for (let g = 1; g < mask.length; g++) {
                if (mask[g] > mask[best]) best = g;
            }
            grid.setCell(row, col, best);
        }
        grid.endStroke();
        grid.undoStack = [];
        return grid;
    }
}

// Mirror of the server-side annotation rules; the UI never submits a
// document that fails these.
export function validateAnnotationDoc(doc: AnnotationDoc): string[] {
    const problems: string[] = [];
    const [rows, cols] = doc.shape;
    const seen = new Set<number>();
    for (const [row, col, mask] of doc.bins) {
        if (row < 0 || row >= rows || col < 0 || col >= cols) {
            problems.push(`bin (${row}, ${col}): out of bounds for shape [${rows}, ${cols}]`);
        }
        const key = row * cols + col;
        if (seen.has(key)) {
            problems.push(`bin (${row}, ${col}): duplicate entry`);
        }
        seen.add(key);
        if (mask.length !== doc.num_sources) {
            problems.push(`bin (${row}, ${col}): expected ${doc.num_sources} mask values`);
            continue;
        }
        let total = 0;
        for (const value of mask) {
            if (value < 0 || value > 1) {
                problems.push(`bin (${row}, ${col}): mask value ${value} outside [0, 1]`);
            }
            total += value;
        }
        if (Math.abs(total - 1) > 1e-9) {
            problems.push(`bin (${row}, ${col}): mask sum ${total} is not 1`);
        }
    }
    return problems;
}

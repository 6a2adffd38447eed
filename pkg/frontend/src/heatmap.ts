import type { SpectrogramDoc } from "./types";
import type { AnnotationGrid } from "./grid";

export interface AxisTick {
    position: number; // 0..1 along the axis
    label: string;
}

// Time ticks for a zoomed column window [colStart, colEnd), scaled by
// the hop duration reported by the service.
export function timeTicks(
    hopSeconds: number,
    colStart: number,
    colEnd: number,
    maxTicks = 6,
): AxisTick[] {
    const spanSeconds = (colEnd - colStart) * hopSeconds;
    if (spanSeconds <= 0) return [];
    const rawStep = spanSeconds / maxTicks;
    const magnitude = 10 ** Math.floor(Math.log10(rawStep));
    let step = magnitude;
    for (const mult of [1, 2, 5, 10]) {
        if (magnitude * mult >= rawStep) {
            step = magnitude * mult;
            break;
        }
    }
    const startSeconds = colStart * hopSeconds;
    const ticks: AxisTick[] = [];
    let t = Math.ceil(startSeconds / step) * step;
    while (t <= startSeconds + spanSeconds + 1e-12) {
        ticks.push({
            position: (t - startSeconds) / spanSeconds,
            label: `${t.toFixed(2)}s`,
        });
        t += step;
    }
    return ticks;
}

export function frequencyTicks(binHz: number, rows: number, maxTicks = 6): AxisTick[] {
    const nyquist = binHz * (rows - 1);
    const ticks: AxisTick[] = [];
    for (let i = 0; i <= maxTicks; i++) {
        const hz = (nyquist * i) / maxTicks;
        ticks.push({
            position: i / maxTicks,
            label: hz >= 1000 ? `${(hz / 1000).toFixed(1)}k` : `${Math.round(hz)}`,
        });
    }
    return ticks;
}

const SOURCE_COLORS = [
    [239, 68, 68], // red
    [34, 197, 94], // green
    [59, 130, 246], // blue
    [234, 179, 8], // yellow
];

export function sourceColor(source: number): string {
    const [r, g, b] = SOURCE_COLORS[source % SOURCE_COLORS.length];
    return `rgb(${r}, ${g}, ${b})`;
}

// Canvas heatmap of the log-magnitude grid with the annotation layer
// alpha-blended on top. Rendering is row 0 at the bottom (low
// frequencies down), one canvas pixel per cell; CSS scales it up.
export class SpectrogramView {
    zoomStart = 0;
    zoomEnd: number;

    constructor(
        private canvas: HTMLCanvasElement,
        private doc: SpectrogramDoc,
        private grid: AnnotationGrid,
    ) {
        this.zoomEnd = doc.cols;
    }

    get visibleCols(): [number, number] {
        return [this.zoomStart, this.zoomEnd];
    }

    // Window given in seconds; clamps to the track and keeps >= 1 column.
    zoomToSeconds(startSeconds: number, endSeconds: number): void {
        const colOf = (s: number) => Math.round(s / this.doc.hop_seconds);
        this.zoomStart = Math.max(0, Math.min(colOf(startSeconds), this.doc.cols - 1));
        this.zoomEnd = Math.max(this.zoomStart + 1, Math.min(colOf(endSeconds), this.doc.cols));
    }

    resetZoom(): void {
        this.zoomStart = 0;
        this.zoomEnd = this.doc.cols;
    }

    timeAxis(): AxisTick[] {
        return timeTicks(this.doc.hop_seconds, this.zoomStart, this.zoomEnd);
    }

    frequencyAxis(): AxisTick[] {
        return frequencyTicks(this.doc.bin_hz, this.doc.F);
    }

    // Map a client position inside the canvas to (row, col) in grid
    // coordinates, honoring the current zoom window.
    cellAt(clientX: number, clientY: number): { row: number; col: number } | null {
        const rect = this.canvas.getBoundingClientRect();
        if (rect.width === 0 || rect.height === 0) return null;
        const x = (clientX - rect.left) / rect.width;
        const y = (clientY - rect.top) / rect.height;
        if (x < 0 || x >= 1 || y < 0 || y >= 1) return null;
        const col = this.zoomStart + Math.floor(x * (this.zoomEnd - this.zoomStart));
        const row = Math.floor((1 - y) * this.doc.F);
        return { row: Math.min(row, this.doc.F - 1), col: Math.min(col, this.doc.cols - 1) };
    }

    render(): void {
        const cols = this.zoomEnd - this.zoomStart;
        this.canvas.width = cols;
        this.canvas.height = this.doc.F;
        const ctx = this.canvas.getContext("2d");
        if (!ctx) return; // jsdom and friends: skip pixel work
        const image = ctx.createImageData(cols, this.doc.F);
        const floor = this.doc.db_floor;
        for (let row = 0; row < this.doc.F; row++) {
            for (let c = 0; c < cols; c++) {
                const value = this.doc.values[row * this.doc.cols + this.zoomStart + c];
                const level = Math.max(0, Math.min(1, (value - floor) / -floor));
                const y = this.doc.F - 1 - row;
                const offset = (y * cols + c) * 4;
                image.data[offset] = Math.round(20 + 100 * level);
                image.data[offset + 1] = Math.round(24 + 140 * level);
                image.data[offset + 2] = Math.round(48 + 180 * level);
                image.data[offset + 3] = 255;
                const label = this.grid.labelAt(row, this.zoomStart + c);
                if (label >= 0) {
                    const [r, g, b] = SOURCE_COLORS[label % SOURCE_COLORS.length];
                    image.data[offset] = Math.round(0.45 * image.data[offset] + 0.55 * r);
                    image.data[offset + 1] = Math.round(0.45 * image.data[offset + 1] + 0.55 * g);
                    image.data[offset + 2] = Math.round(0.45 * image.data[offset + 2] + 0.55 * b);
                }
            }
        }
        ctx.putImageData(image, 0, 0);
    }
}

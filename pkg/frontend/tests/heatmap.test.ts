// @vitest-environment jsdom
import { describe, expect, it } from "vitest";
import { AnnotationGrid } from "../src/grid";
import { SpectrogramView, frequencyTicks, timeTicks } from "../src/heatmap";
import type { SpectrogramDoc } from "../src/types";

function fakeDoc(F = 9, cols = 100): SpectrogramDoc {
    return {
        F,
        N: cols,
        cols,
        hop_seconds: 0.016,
        bin_hz: 31.25,
        db_floor: -60,
        values: new Array(F * cols).fill(-30),
    };
}

describe("axis ticks", () => {
    it("spans the full window with labels derived from hop_seconds", () => {
        const ticks = timeTicks(0.016, 0, 500);
        expect(ticks.length).toBeGreaterThan(2);
        expect(ticks[0].position).toBeGreaterThanOrEqual(0);
        expect(ticks[ticks.length - 1].position).toBeLessThanOrEqual(1);
        // 500 columns at 16 ms each = 8 s span
        expect(ticks.every((t) => parseFloat(t.label) <= 8.0)).toBe(true);
    });

    it("offsets labels when zoomed to a 2 s window", () => {
        const hop = 0.016;
        const colStart = Math.round(4.0 / hop);
        const colEnd = Math.round(6.0 / hop);
        const ticks = timeTicks(hop, colStart, colEnd);
        const values = ticks.map((t) => parseFloat(t.label));
        expect(Math.min(...values)).toBeGreaterThanOrEqual(4.0);
        expect(Math.max(...values)).toBeLessThanOrEqual(6.0 + 1e-9);
    });

    it("labels frequencies up to nyquist", () => {
        const ticks = frequencyTicks(31.25, 257);
        expect(ticks[0].label).toBe("0");
        expect(ticks[ticks.length - 1].label).toBe("8.0k");
    });
});

describe("SpectrogramView zoom", () => {
    it("clamps the zoom window to the track and keeps a column", () => {
        const doc = fakeDoc();
        const canvas = document.createElement("canvas");
        const view = new SpectrogramView(canvas, doc, new AnnotationGrid(doc.F, doc.cols));
        view.zoomToSeconds(0.5, 1.0);
        const [start, end] = view.visibleCols;
        expect(start).toBe(Math.round(0.5 / doc.hop_seconds));
        expect(end).toBe(Math.round(1.0 / doc.hop_seconds));
        view.zoomToSeconds(100, 200);
        expect(view.visibleCols[1]).toBe(doc.cols);
        view.resetZoom();
        expect(view.visibleCols).toEqual([0, doc.cols]);
    });

    it("time axis follows the zoom window", () => {
        const doc = fakeDoc();
        const canvas = document.createElement("canvas");
        const view = new SpectrogramView(canvas, doc, new AnnotationGrid(doc.F, doc.cols));
        view.zoomToSeconds(0.8, 1.6);
        const labels = view.timeAxis().map((t) => parseFloat(t.label));
        expect(Math.min(...labels)).toBeGreaterThanOrEqual(0.8 - 1e-9);
    });

    it("render survives a null 2d context", () => {
        // jsdom has no canvas backend; render must be a no-op, not a crash
        const doc = fakeDoc();
        const canvas = document.createElement("canvas");
        const view = new SpectrogramView(canvas, doc, new AnnotationGrid(doc.F, doc.cols));
        expect(() => view.render()).not.toThrow();
    });
});

// SVG polyline chart for solver progress. Points arrive from job polls;
// x values must be strictly increasing, so stale or duplicate poll
// timestamps are dropped rather than drawn.

const SVG_NS = "http://www.w3.org/2000/svg";

export class ProgressChart {
    private points: Array<[number, number]> = [];
    private svg: SVGSVGElement;
    private line: SVGPolylineElement;
    private label: SVGTextElement;

    constructor(container: HTMLElement, private title: string,
                private width = 420, private height = 160) {
        this.svg = document.createElementNS(SVG_NS, "svg");
        this.svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
        this.svg.setAttribute("class", "progress-chart");
        const axis = document.createElementNS(SVG_NS, "rect");
        axis.setAttribute("x", "0");
        axis.setAttribute("y", "0");
        axis.setAttribute("width", String(width));
        axis.setAttribute("height", String(height));
        axis.setAttribute("class", "chart-frame");
        this.line = document.createElementNS(SVG_NS, "polyline");
        this.line.setAttribute("class", "chart-line");
        this.line.setAttribute("fill", "none");
        this.label = document.createElementNS(SVG_NS, "text");
        this.label.setAttribute("x", "8");
        this.label.setAttribute("y", "16");
        this.label.textContent = title;
        this.svg.append(axis, this.line, this.label);
        container.appendChild(this.svg);
    }

    pointCount(): number {
        return this.points.length;
    }

    xValues(): number[] {
        return this.points.map((p) => p[0]);
    }

    // Returns true when the point was accepted (strictly newer x).
    add(x: number, y: number): boolean {
        const last = this.points[this.points.length - 1];
        if (last && x <= last[0]) return false;
        if (!Number.isFinite(x) || !Number.isFinite(y)) return false;
        this.points.push([x, y]);
        this.redraw();
        return true;
    }

    private redraw(): void {
        if (this.points.length === 0) return;
        const xs = this.points.map((p) => p[0]);
        const ys = this.points.map((p) => p[1]);
        const xMin = 0;
        const xMax = Math.max(...xs, 1e-9);
        let yMin = Math.min(...ys);
        let yMax = Math.max(...ys);
        if (yMax - yMin < 1e-12) {
            yMax += 1;
            yMin -= 1;
        }
        const margin = 10;
        const sx = (x: number) =>
            margin + ((x - xMin) / (xMax - xMin)) * (this.width - 2 * margin);
        const sy = (y: number) =>
            this.height - margin -
            ((y - yMin) / (yMax - yMin)) * (this.height - 2 * margin);
        const text = this.points.map(([x, y]) => `${sx(x).toFixed(1)},${sy(y).toFixed(1)}`);
        this.line.setAttribute("points", text.join(" "));
        const last = this.points[this.points.length - 1];
        this.label.textContent = `${this.title}: ${last[1].toExponential(3)} @ ${last[0].toFixed(1)}s`;
    }
}

import type { ApiClient } from "./api";
import type { JobDoc, SeparateParams } from "./types";
import { ProgressChart } from "./chart";

// Launches a separation job and monitors it: polls the job endpoint on a
// fixed interval (never more than one poll in flight), charts the best
// objective against elapsed seconds, and on completion exposes one audio
// player plus a download link per separated source.
export class JobPanel {
    readonly root: HTMLElement;
    private chart: ProgressChart;
    private status: HTMLElement;
    private players: HTMLElement;
    private timer: ReturnType<typeof setInterval> | null = null;
    private inFlight = false;
    private jobId: string | null = null;
    private done: ((job: JobDoc) => void) | null = null;

    constructor(
        private api: ApiClient,
        private trackId: string,
        private pollIntervalMs = 500,
    ) {
        this.root = document.createElement("section");
        this.root.className = "job-panel";
        this.status = document.createElement("p");
        this.status.className = "job-status";
        this.status.textContent = "idle";
        const chartBox = document.createElement("div");
        this.players = document.createElement("div");
        this.players.className = "players";
        this.root.append(this.status, chartBox, this.players);
        this.chart = new ProgressChart(chartBox, "best objective");
    }

    chartPointCount(): number {
        return this.chart.pointCount();
    }

    chartXValues(): number[] {
        return this.chart.xValues();
    }

    audioElements(): HTMLAudioElement[] {
        return Array.from(this.players.querySelectorAll("audio"));
    }

    statusText(): string {
        return this.status.textContent ?? "";
    }

    async start(params: SeparateParams): Promise<void> {
        this.stopPolling();
        this.players.replaceChildren();
        this.jobId = await this.api.separate(this.trackId, params);
        this.status.textContent = `job ${this.jobId}: queued`;
        this.timer = setInterval(() => void this.poll(), this.pollIntervalMs);
    }

    // Resolves when the job reaches a terminal state.
    waitForCompletion(timeoutMs = 60_000): Promise<JobDoc> {
        return new Promise((resolve, reject) => {
            const deadline = setTimeout(
                () => reject(new Error("timed out waiting for job")),
                timeoutMs,
            );
            this.done = (job) => {
                clearTimeout(deadline);
                resolve(job);
            };
        });
    }

    private stopPolling(): void {
        if (this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
        this.inFlight = false;
    }

    private async poll(): Promise<void> {
        if (this.inFlight || this.jobId === null) return;
        this.inFlight = true;
        try {
            const job = await this.api.getJob(this.jobId);
            this.render(job);
            if (job.state === "done" || job.state === "failed") {
                this.stopPolling();
                this.done?.(job);
                this.done = null;
            }
        } catch (err) {
            this.status.textContent = `poll failed: ${String(err)}`;
        } finally {
            this.inFlight = false;
        }
    }

    private render(job: JobDoc): void {
        const progress = job.progress;
        let line = `job ${job.id}: ${job.state}`;
        if (job.state === "running") {
            line += ` (iteration ${progress.iterations}, ${progress.elapsed_seconds.toFixed(1)}s)`;
        }
        if (job.state === "failed" && job.error) {
            line += `: ${job.error}`;
        }
        if (progress.best_objective !== null) {
            this.chart.add(progress.elapsed_seconds, progress.best_objective);
        }
        if (job.state === "done" && job.result) {
            if (job.result.eval) {
                line += ` | avg SDR ${job.result.eval.avg_sdr.toFixed(2)} dB`;
            }
            this.renderPlayers(job.result.sources, job.result.trace_csv);
        }
        this.status.textContent = line;
    }

    private renderPlayers(sources: string[], traceCsv: string): void {
        this.players.replaceChildren();
        sources.forEach((path, index) => {
            const box = document.createElement("figure");
            const caption = document.createElement("figcaption");
            caption.textContent = `source ${index + 1}`;
            const audio = document.createElement("audio");
            audio.controls = true;
            audio.src = this.api.baseUrl + path;
            const link = document.createElement("a");
            link.href = this.api.baseUrl + path;
            link.download = `source${index + 1}.wav`;
            link.textContent = "download WAV";
            box.append(caption, audio, link);
            this.players.appendChild(box);
        });
        const trace = document.createElement("a");
        trace.href = this.api.baseUrl + traceCsv;
        trace.download = "trace.csv";
        trace.textContent = "download trace CSV";
        this.players.appendChild(trace);
    }
}

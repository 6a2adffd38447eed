import type {
    AnnotationDoc,
    JobDoc,
    SeparateParams,
    SpectrogramDoc,
    TrackInfo,
} from "./types";

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

async function expectOk(resp: Response): Promise<Response> {
    if (!resp.ok) {
        let detail = resp.statusText;
        try {
            const body = await resp.json();
            if (body && body.detail) detail = JSON.stringify(body.detail);
        } catch {
            // non-JSON error body; keep the status text
        }
        throw new ApiError(resp.status, detail);
    }
    return resp;
}

// Thin typed client over the service endpoints. All UI state can be
// rebuilt from the GETs here, which keeps page reloads safe.
export class ApiClient {
    constructor(public baseUrl: string = "") {}

    private url(path: string): string {
        return this.baseUrl + path;
    }

    async listTracks(): Promise<TrackInfo[]> {
        const resp = await expectOk(await fetch(this.url("/tracks")));
        return (await resp.json()).tracks;
    }

    async uploadTrack(wavBytes: ArrayBuffer | Uint8Array): Promise<string> {
        const body = wavBytes instanceof Uint8Array
            ? new Uint8Array(wavBytes).slice().buffer
            : wavBytes;
        const resp = await expectOk(
            await fetch(this.url("/tracks"), {
                method: "POST",
                headers: { "Content-Type": "audio/wav" },
                body,
            }),
        );
        return (await resp.json()).track_id;
    }

    async getSpectrogram(
        trackId: string,
        opts: { maxCols?: number; dbFloor?: number } = {},
    ): Promise<SpectrogramDoc> {
        const params = new URLSearchParams();
        if (opts.maxCols !== undefined) params.set("max_cols", String(opts.maxCols));
        if (opts.dbFloor !== undefined) params.set("db_floor", String(opts.dbFloor));
        const query = params.size ? `?${params}` : "";
        const resp = await expectOk(
            await fetch(this.url(`/tracks/${trackId}/spectrogram${query}`)),
        );
        return resp.json();
    }

    async putAnnotations(trackId: string, json: string): Promise<void> {
        await expectOk(
            await fetch(this.url(`/tracks/${trackId}/annotations`), {
                method: "PUT",
                headers: { "Content-Type": "application/json" },
                body: json,
            }),
        );
    }

    async getAnnotations(trackId: string): Promise<string> {
        const resp = await expectOk(
            await fetch(this.url(`/tracks/${trackId}/annotations`)),
        );
        return resp.text();
    }

    async separate(trackId: string, params: SeparateParams): Promise<string> {
        const resp = await expectOk(
            await fetch(this.url(`/tracks/${trackId}/separate`), {
                method: "POST",
                headers: { "Content-Type": "application/json" },
                body: JSON.stringify(params),
            }),
        );
        return (await resp.json()).job_id;
    }

    async getJob(jobId: string): Promise<JobDoc> {
        const resp = await expectOk(await fetch(this.url(`/jobs/${jobId}`)));
        return resp.json();
    }

    sourceUrl(trackId: string, g: number): string {
        return this.url(`/tracks/${trackId}/sources/${g}.wav`);
    }

    traceUrl(jobId: string): string {
        return this.url(`/jobs/${jobId}/trace.csv`);
    }
}

export function parseAnnotationDoc(text: string): AnnotationDoc {
    const doc = JSON.parse(text);
    if (!Array.isArray(doc.shape) || doc.shape.length !== 2) {
        throw new Error("annotation document has no [F, N] shape");
    }
    if (typeof doc.num_sources !== "number" || !Array.isArray(doc.bins)) {
        throw new Error("annotation document missing num_sources or bins");
    }
    return doc as AnnotationDoc;
}

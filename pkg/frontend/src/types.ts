// Wire types for the separation service JSON API.

export interface TrackInfo {
    track_id: string;
    duration_seconds: number;
    has_annotations: boolean;
    num_references: number;
}

export interface SpectrogramDoc {
    F: number;
    N: number;
    cols: number;
    hop_seconds: number;
    bin_hz: number;
    db_floor: number;
    // row-major, F rows by cols columns, in dB relative to the peak
    values: number[];
}

// Annotation document: one entry per annotated cell, with per-source
// weights that must sum to 1.
export type AnnotationBin = [number, number, number[]];

export interface AnnotationDoc {
    shape: [number, number];
    num_sources: number;
    bins: AnnotationBin[];
}

export interface JobProgress {
    iterations: number;
    elapsed_seconds: number;
    best_objective: number | null;
}

export interface JobResult {
    sources: string[];
    trace_csv: string;
    eval: {
        sdr: number[];
        sir: number[];
        sar: number[];
        avg_sdr: number;
        avg_sir: number;
        avg_sar: number;
    } | null;
}

export interface JobDoc {
    id: string;
    track_id: string;
    method: string;
    config: Record<string, unknown>;
    state: "queued" | "running" | "done" | "failed";
    progress: JobProgress;
    result: JobResult | null;
    error: string | null;
}

export interface SeparateParams {
    method: "lownuc" | "nmf";
    lambda?: number;
    alpha0?: number;
    rank?: number;
    budget_seconds?: number;
    num_sources?: number;
}

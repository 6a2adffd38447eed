"""Local HTTP service backing the annotation UI.

Tracks live in a flat data directory (one subdirectory per track under
``tracks/``); annotations are stored as the raw JSON bytes that were
uploaded so a GET returns them byte-identically. Separation jobs run on
a bounded worker pool and publish atomic progress snapshots, so polling
never observes a torn state and reads stay responsive while a job runs.

Endpoints
---------
POST /tracks                     WAV upload -> {"track_id": ...}
GET  /tracks                     track listing
GET  /tracks/{id}/spectrogram    log-magnitude grid for display
PUT  /tracks/{id}/annotations    annotation JSON -> 204
GET  /tracks/{id}/annotations    annotation JSON
POST /tracks/{id}/separate       {method, lambda, alpha0, rank,
                                  budget_seconds} -> {"job_id": ...}
GET  /jobs/{job_id}              job state snapshot
GET  /tracks/{id}/sources/{g}.wav  latest separated source (1-based)
GET  /jobs/{job_id}/trace.csv    solver trace
"""

from __future__ import annotations

import io
import json
import threading
import time
import uuid
import wave
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response

from .annotation import (
    AnnotationSet,
    annotations_from_json,
    compute_targets,
    validate,
)
from .audio_io import read_wav, resample, write_wav
from .errors import AnnosepError, InputError
from .evaluation import bss_eval
from .lownuc import LownucConfig, default_alpha0, solve
from .nmf import NmfConfig, solve_nmf
from .reconstruction import synthesize_sources, wiener_masks
from .spectral import StftParams, power_spectrogram, stft

__all__ = ["create_app"]


@dataclass
class Job:
    """Mutable job record; reads go through JobManager.snapshot()."""

    id: str
    track_id: str
    method: str
    config: dict
    state: str = "queued"
    progress: dict = field(
        default_factory=lambda: {
            "iterations": 0,
            "elapsed_seconds": 0.0,
            "best_objective": None,
        }
    )
    result: Optional[dict] = None
    error: Optional[str] = None


class TrackStore:
    """Disk layout: data_dir/tracks/<id>/{mixture.wav, annotations.json, ...}."""

    def __init__(self, data_dir: Path, params: StftParams):
        self.root = Path(data_dir)
        self.params = params
        (self.root / "tracks").mkdir(parents=True, exist_ok=True)

    def track_dir(self, track_id: str) -> Path:
        return self.root / "tracks" / track_id

    def require(self, track_id: str) -> Path:
        path = self.track_dir(track_id)
        if not (path / "mixture.wav").exists():
            raise HTTPException(status_code=404, detail=f"unknown track {track_id}")
        return path

    def list_tracks(self) -> list[dict]:
        out = []
        for path in sorted((self.root / "tracks").iterdir()):
            if not (path / "mixture.wav").exists():
                continue
            with wave.open(str(path / "mixture.wav"), "rb") as wf:
                duration = wf.getnframes() / wf.getframerate()
            refs = sorted(p.name for p in (path / "refs").glob("source*.wav")) if (
                path / "refs"
            ).exists() else []
            out.append(
                {
                    "track_id": path.name,
                    "duration_seconds": round(duration, 3),
                    "has_annotations": (path / "annotations.json").exists(),
                    "num_references": len(refs),
                }
            )
        return out

    def add_track(self, wav_bytes: bytes) -> str:
        try:
            with wave.open(io.BytesIO(wav_bytes), "rb") as wf:
                channels = wf.getnchannels()
                width = wf.getsampwidth()
                rate = wf.getframerate()
                frames = wf.readframes(wf.getnframes())
        except (wave.Error, EOFError) as exc:
            raise HTTPException(status_code=400, detail=f"not a WAV file: {exc}")
        if channels != 1 or width != 2:
            raise HTTPException(
                status_code=400, detail="expected mono 16-bit PCM WAV"
            )
        signal = np.frombuffer(frames, dtype="<i2").astype(np.float64) / 32768.0
        if signal.size == 0:
            raise HTTPException(status_code=400, detail="empty audio")
        if rate != self.params.sample_rate:
            signal = resample(signal, rate, self.params.sample_rate)
        track_id = uuid.uuid4().hex[:12]
        path = self.track_dir(track_id)
        path.mkdir(parents=True)
        write_wav(path / "mixture.wav", signal, self.params.sample_rate)
        return track_id

    def mixture(self, track_id: str) -> np.ndarray:
        signal, _rate = read_wav(self.require(track_id) / "mixture.wav")
        return signal

    def references(self, track_id: str) -> list[np.ndarray]:
        refs_dir = self.track_dir(track_id) / "refs"
        refs = []
        g = 1
        while (refs_dir / f"source{g}.wav").exists():
            signal, rate = read_wav(refs_dir / f"source{g}.wav")
            if rate != self.params.sample_rate:
                signal = resample(signal, rate, self.params.sample_rate)
            refs.append(signal)
            g += 1
        return refs


class JobManager:
    """Bounded worker pool plus a lock-guarded registry of job snapshots."""

    def __init__(self, max_workers: int = 1):
        self.executor = ThreadPoolExecutor(max_workers=max_workers)
        self.lock = threading.Lock()
        self.jobs: dict[str, Job] = {}

    def create(self, track_id: str, method: str, config: dict) -> Job:
        job = Job(id=uuid.uuid4().hex[:12], track_id=track_id, method=method,
                  config=config)
        with self.lock:
            self.jobs[job.id] = job
        return job

    def get(self, job_id: str) -> Job:
        with self.lock:
            job = self.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return job

    def snapshot(self, job_id: str) -> dict:
        with self.lock:
            job = self.jobs.get(job_id)
            if job is None:
                raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
            return {
                "id": job.id,
                "track_id": job.track_id,
                "method": job.method,
                "config": dict(job.config),
                "state": job.state,
                "progress": dict(job.progress),
                "result": None if job.result is None else dict(job.result),
                "error": job.error,
            }

    def update(self, job: Job, **fields) -> None:
        with self.lock:
            for key, value in fields.items():
                setattr(job, key, value)

    def set_progress(self, job: Job, iterations: int, elapsed: float,
                     best_objective: float) -> None:
        with self.lock:
            job.progress = {
                "iterations": iterations,
                "elapsed_seconds": elapsed,
                "best_objective": best_objective,
            }


def create_app(data_dir: str | Path, max_workers: int = 1) -> FastAPI:
    """Build the service around a data directory."""
    params = StftParams()
    store = TrackStore(Path(data_dir), params)
    manager = JobManager(max_workers=max_workers)
    app = FastAPI(title="annosep", version="0.1.0")

    @app.post("/tracks")
    async def upload_track(request: Request) -> dict:
        body = await request.body()
        track_id = store.add_track(body)
        return {"track_id": track_id}

    @app.get("/tracks")
    def list_tracks() -> dict:
        return {"tracks": store.list_tracks()}

    @app.get("/tracks/{track_id}/spectrogram")
    def spectrogram(track_id: str, max_cols: int = 0, db_floor: float = -60.0) -> dict:
        signal = store.mixture(track_id)
        spec = power_spectrogram(stft(signal, params))
        values = spec.values
        f_dim, n_dim = values.shape
        cols = n_dim if max_cols <= 0 else min(max_cols, n_dim)
        if cols < n_dim:
            # Max-pool columns so short transients stay visible.
            edges = np.linspace(0, n_dim, cols + 1).astype(int)
            pooled = np.stack(
                [values[:, a:b].max(axis=1) for a, b in zip(edges, edges[1:])],
                axis=1,
            )
        else:
            pooled = values
        peak = float(pooled.max())
        if peak <= 0.0:
            grid = np.full(pooled.shape, db_floor)
        else:
            with np.errstate(divide="ignore"):
                grid = 10.0 * np.log10(pooled / peak)
            grid = np.maximum(grid, db_floor)
        return {
            "F": f_dim,
            "N": n_dim,
            "cols": cols,
            "hop_seconds": params.hop / params.sample_rate,
            "bin_hz": params.sample_rate / params.window_length,
            "db_floor": db_floor,
            "values": [round(float(v), 2) for v in grid.reshape(-1)],
        }

    @app.put("/tracks/{track_id}/annotations", status_code=204)
    async def put_annotations(track_id: str, request: Request) -> Response:
        path = store.require(track_id)
        body = await request.body()
        try:
            ann = annotations_from_json(body.decode("utf-8"))
        except (UnicodeDecodeError, InputError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        problems = validate(ann)
        if problems:
            raise HTTPException(
                status_code=400,
                detail={"message": "invalid annotations", "violations": problems},
            )
        spec_shape = power_spectrogram(stft(store.mixture(track_id), params)).shape
        if ann.shape != spec_shape:
            raise HTTPException(
                status_code=400,
                detail=f"annotation grid {ann.shape} does not match spectrogram "
                f"{spec_shape}",
            )
        (path / "annotations.json").write_bytes(body)
        return Response(status_code=204)

    @app.get("/tracks/{track_id}/annotations")
    def get_annotations(track_id: str) -> Response:
        path = store.require(track_id) / "annotations.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="no annotations stored")
        return Response(content=path.read_bytes(), media_type="application/json")

    @app.post("/tracks/{track_id}/separate")
    async def separate(track_id: str, request: Request) -> dict:
        store.require(track_id)
        try:
            body = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as exc:
            raise HTTPException(status_code=400, detail=f"malformed JSON: {exc}")
        method = body.get("method", "lownuc")
        if method not in ("lownuc", "nmf"):
            raise HTTPException(
                status_code=400, detail="method must be 'lownuc' or 'nmf'"
            )
        config = {
            "method": method,
            "lambda": body.get("lambda"),
            "alpha0": body.get("alpha0"),
            "rank": int(body.get("rank", 4)),
            "budget_seconds": float(body.get("budget_seconds", 30.0)),
            "num_sources": int(body.get("num_sources", 2)),
        }
        job = manager.create(track_id, method, config)
        manager.executor.submit(_run_job, store, manager, job)
        return {"job_id": job.id}

    @app.get("/jobs/{job_id}")
    def job_state(job_id: str) -> dict:
        return manager.snapshot(job_id)

    @app.get("/jobs/{job_id}/trace.csv")
    def job_trace(job_id: str) -> Response:
        job = manager.get(job_id)
        path = store.track_dir(job.track_id) / "jobs" / job.id / "trace.csv"
        if not path.exists():
            raise HTTPException(status_code=404, detail="trace not available yet")
        return Response(content=path.read_bytes(), media_type="text/csv")

    @app.get("/tracks/{track_id}/sources/{g}.wav")
    def source_wav(track_id: str, g: int) -> Response:
        path = store.require(track_id) / "sources" / f"source{g}.wav"
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no separated source {g}")
        return Response(content=path.read_bytes(), media_type="audio/wav")

    return app


def _run_job(store: TrackStore, manager: JobManager, job: Job) -> None:
    start = time.perf_counter()
    manager.update(job, state="running")
    try:
        params = store.params
        signal = store.mixture(job.track_id)
        mixture_stft = stft(signal, params)
        mixture = power_spectrogram(mixture_stft)

        ann_path = store.track_dir(job.track_id) / "annotations.json"
        if ann_path.exists():
            ann = annotations_from_json(ann_path.read_text())
            if ann.shape != mixture.shape:
                raise InputError(
                    f"stored annotations {ann.shape} do not match spectrogram "
                    f"{mixture.shape}"
                )
        else:
            ann = AnnotationSet.empty(mixture.shape, job.config["num_sources"])
        targets = compute_targets(ann, mixture)

        def on_record(rec) -> None:
            manager.set_progress(
                job, rec.iteration, time.perf_counter() - start, rec.best_objective
            )

        budget = job.config["budget_seconds"]
        norm = float(np.linalg.norm(mixture.values))
        if job.method == "lownuc":
            lam = job.config["lambda"]
            cfg = LownucConfig(
                lam=0.1 * norm if lam is None else float(lam),
                alpha0=(
                    default_alpha0(mixture)
                    if job.config["alpha0"] is None
                    else float(job.config["alpha0"])
                ),
                max_iters=10_000_000,
                time_budget=budget,
                snapshot_every=0,
            )
            est, trace = solve(mixture, ann, cfg, on_record=on_record)
        else:
            lam = job.config["lambda"]
            cfg = NmfConfig(
                lam=1.0 if lam is None else float(lam),
                rank=job.config["rank"],
                iters_per_start=1_000_000,
                num_starts=3,
                seed=0,
                time_budget=budget,
                snapshot_every=0,
            )
            est, trace = solve_nmf(
                mixture, ann, targets, cfg, num_sources=ann.num_sources,
                on_record=on_record,
            )

        masks = wiener_masks(est)
        signals = synthesize_sources(masks, mixture_stft)

        track_dir = store.track_dir(job.track_id)
        sources_dir = track_dir / "sources"
        sources_dir.mkdir(exist_ok=True)
        source_urls = []
        for g, sig in enumerate(signals, start=1):
            write_wav(sources_dir / f"source{g}.wav", sig, params.sample_rate)
            source_urls.append(f"/tracks/{job.track_id}/sources/{g}.wav")

        job_dir = track_dir / "jobs" / job.id
        job_dir.mkdir(parents=True, exist_ok=True)
        (job_dir / "trace.csv").write_text(trace.to_csv())

        references = store.references(job.track_id)
        eval_doc = None
        if len(references) == len(signals):
            n = min(len(signal) for signal in references + signals)
            report = bss_eval(
                [s[:n] for s in signals],
                [r[:n] for r in references],
                metadata={"method": job.method, "config": dict(job.config)},
            )
            eval_doc = report.to_dict()

        result = {
            "sources": source_urls,
            "trace_csv": f"/jobs/{job.id}/trace.csv",
            "eval": eval_doc,
        }
        manager.update(job, state="done", result=result)
    except AnnosepError as exc:
        manager.update(job, state="failed", error=str(exc))
    except Exception as exc:  # pragma: no cover - defensive
        manager.update(job, state="failed", error=f"{type(exc).__name__}: {exc}")

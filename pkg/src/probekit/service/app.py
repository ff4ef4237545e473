"""FastAPI service wrapping the probing toolkit."""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse

from .. import __version__
from ..encoders import read_embeddings
from ..errors import ProbekitError
from ..pipeline import emit_reports, load_config, parse_config, run_matrix
from ..pipeline.cache import ArtifactCache
from ..pipeline.matrix import build_dataset, build_downstream_dataset, build_embeddings
from ..pipeline.results import ResultsStore, grid_from_rows
from ..stats import build_stability_report
from ..taskgen.dataset import sidecar_path
from .jobs import Job, JobManager
from .schemas import (
    AnalyzeRequest,
    AnalyzeResponse,
    ConfigRef,
    CrossClassifierRow,
    DatasetInfo,
    EmbeddingInfo,
    EncodeRequest,
    EncodeResponse,
    GenerateRequest,
    GenerateResponse,
    HealthResponse,
    JobInfo,
    JobSubmitted,
    MatrixRequest,
    MinAvg,
    MuRow,
    ReportRequest,
    ReportResponse,
    StabilitySummary,
)


def _resolve_config(ref: ConfigRef):
    if ref.config_path is not None:
        cfg = load_config(ref.config_path)
    else:
        cfg = parse_config(ref.config)
    if ref.seed is not None:
        cfg.seed = ref.seed
    if ref.out_dir is not None:
        cfg.out_dir = Path(ref.out_dir)
    return cfg


def _job_info(job: Job) -> JobInfo:
    return JobInfo(**dataclasses.asdict(job))


def create_app() -> FastAPI:
    app = FastAPI(title="probekit", version=__version__,
                  description="Probing-task construction, encoder evaluation, "
                              "and stability analytics")
    jobs = JobManager()

    @app.exception_handler(ProbekitError)
    async def probekit_error(request, exc: ProbekitError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/datasets/generate", response_model=GenerateResponse)
    def generate(req: GenerateRequest):
        cfg = _resolve_config(req)
        cache = ArtifactCache(cfg.cache_dir or cfg.out_dir / "cache")
        out = []
        for task_cfg in cfg.tasks:
            if req.tasks and task_cfg.task_name not in req.tasks:
                continue
            for language in task_cfg.languages:
                if req.languages and language not in req.languages:
                    continue
                path = build_dataset(cfg, task_cfg, language, cache)
                with open(sidecar_path(path), encoding="utf-8") as f:
                    meta = json.load(f)
                out.append(DatasetInfo(
                    language=language, task=task_cfg.task_name, path=str(path),
                    meta_path=str(sidecar_path(path)), size=meta["size"],
                    balance=meta["balance"], labels=meta["labels"],
                ))
        if not out:
            raise HTTPException(404, "no task/language matched the request")
        return GenerateResponse(datasets=out)

    @app.post("/embeddings/encode", response_model=EncodeResponse)
    def encode(req: EncodeRequest):
        cfg = _resolve_config(req)
        cache = ArtifactCache(cfg.cache_dir or cfg.out_dir / "cache")
        files = []
        units: list[tuple[str, str, Path, bool]] = []
        for task_cfg in cfg.tasks:
            if req.tasks and task_cfg.task_name not in req.tasks:
                continue
            for language in task_cfg.languages:
                if req.languages and language not in req.languages:
                    continue
                path = build_dataset(cfg, task_cfg, language, cache)
                units.append((task_cfg.task_name, language, path, False))
        for ds_cfg in cfg.downstream:
            if req.tasks and ds_cfg.id not in req.tasks:
                continue
            for language in ds_cfg.paths:
                if req.languages and language not in req.languages:
                    continue
                path = build_downstream_dataset(cfg, ds_cfg, language, cache)
                units.append((ds_cfg.id, language, path, ds_cfg.kind == "am"))
        for task_name, language, ds_path, with_topic in units:
            for enc in cfg.encoders:
                if req.encoders and enc.id not in req.encoders:
                    continue
                emb_path = build_embeddings(cfg, enc.id, ds_path, language,
                                            task_name, cache, with_topic=with_topic)
                matrix = read_embeddings(emb_path)
                files.append(EmbeddingInfo(
                    language=language, task=task_name, encoder=enc.id,
                    path=str(emb_path), rows=len(matrix.instance_ids), dim=matrix.dim,
                ))
        if not files:
            raise HTTPException(404, "no task/encoder matched the request")
        return EncodeResponse(files=files)

    @app.post("/jobs/matrix", response_model=JobSubmitted)
    def submit_matrix(req: MatrixRequest):
        cfg = _resolve_config(req)  # validate before accepting the job

        def runner(job: Job, update):
            def progress(done, total):
                update(completed_cells=done, total_cells=total)

            result = run_matrix(cfg, jobs=req.jobs, resume=req.resume,
                                only=req.only, progress=progress)
            update(
                failures=result.failures,
                results_csv=str(result.results_csv),
                out_dir=str(result.out_dir),
            )

        return JobSubmitted(job_id=jobs.submit(runner))

    @app.get("/jobs", response_model=list[JobInfo])
    def list_jobs():
        return [_job_info(j) for j in jobs.list()]

    @app.get("/jobs/{job_id}", response_model=JobInfo)
    def get_job(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            raise HTTPException(404, f"no such job {job_id}")
        return _job_info(job)

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze(req: AnalyzeRequest):
        store = ResultsStore(req.results_csv)
        rows = store.load()
        if not rows:
            raise HTTPException(404, f"no results in {req.results_csv}")
        grid = grid_from_rows(rows)
        downstream = set(req.downstream_tasks or [])
        probing_tasks = [t for t in grid.tasks if t not in downstream]
        sizes = req.probing_sizes or [
            s for s in grid.sizes
            if all(
                grid.has(lang, t, e, c, s)
                for lang in grid.languages for t in probing_tasks
                for e in grid.encoders for c in grid.classifiers
            )
        ]
        summaries = []
        skipped: dict[str, str] = {}
        if len(grid.encoders) < 3:
            skipped["stability"] = "needs at least 3 encoders"
        else:
            for language in req.languages or grid.languages:
                covered = [
                    t for t in probing_tasks
                    if all(
                        grid.has(language, t, e, c, s)
                        for e in grid.encoders for c in grid.classifiers for s in sizes
                    )
                ]
                if not covered or not sizes:
                    skipped[language] = "insufficient coverage"
                    continue
                report = build_stability_report(
                    grid.restrict(languages=[language], tasks=covered, sizes=sizes),
                    method=req.method, language=language,
                    p_max=req.p_max, closeness=req.closeness,
                )
                summaries.append(StabilitySummary(
                    language=language,
                    sizes=report.sizes,
                    classifiers=report.classifiers,
                    mu_table=[MuRow(classifier=c, size=s, mu=m)
                              for c, s, m in report.mu_table],
                    size_stability=report.size_stability,
                    cross_size_minavg={
                        c: MinAvg(min=mn, avg=avg)
                        for c, (mn, avg) in report.cross_size_minavg.items()
                    },
                    cross_classifier=[
                        CrossClassifierRow(classifier_a=c, classifier_b=d, min=mn, avg=avg)
                        for (c, d), (mn, avg) in report.cross_classifier.items()
                    ],
                    best_ranking_per_task={
                        task: list(rmax.order) for task, rmax in report.r_max.items()
                    },
                ))
        return AnalyzeResponse(method=req.method, languages=summaries, skipped=skipped)

    @app.post("/report", response_model=ReportResponse)
    def report(req: ReportRequest):
        store = ResultsStore(req.results_csv)
        rows = store.load()
        if not rows:
            raise HTTPException(404, f"no results in {req.results_csv}")
        grid = grid_from_rows(rows)
        index = emit_reports(
            grid, req.out_dir, method=req.method,
            probing_sizes=req.probing_sizes,
            downstream_tasks=req.downstream_tasks,
            profile_classifier=req.profile_classifier,
            profile_size=req.profile_size,
        )
        return ReportResponse(written=index["written"], skipped=index["skipped"])

    return app

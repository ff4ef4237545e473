"""In-memory background job registry for matrix runs."""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field


@dataclass
class Job:
    job_id: str
    status: str = "pending"  # pending | running | done | failed
    total_cells: int | None = None
    completed_cells: int | None = None
    failures: list = field(default_factory=list)
    error: str | None = None
    results_csv: str | None = None
    out_dir: str | None = None


class JobManager:
    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, runner) -> str:
        """Start runner(job, update) on a daemon thread; update re-publishes the job."""
        job = Job(job_id=uuid.uuid4().hex[:12])
        with self._lock:
            self._jobs[job.job_id] = job

        def update(**kwargs):
            with self._lock:
                for key, value in kwargs.items():
                    setattr(job, key, value)

        def target():
            update(status="running")
            try:
                runner(job, update)
                update(status="done")
            except Exception as exc:
                update(status="failed", error=str(exc))

        threading.Thread(target=target, daemon=True).start()
        return job.job_id

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def list(self) -> list[Job]:
        with self._lock:
            return list(self._jobs.values())

"""Job execution: a queue plus worker threads that run scoring batches.

One worker by default, since batches are CPU-bound; more can be configured.
Job state transitions live in the store; workers only move jobs forward
(queued -> running -> done/failed).
"""

from __future__ import annotations

import io
import queue
import threading

import numpy as np

from textscale import evaluate as ev
from textscale.service.store import Store, _now
from textscale.wordscores import TrainingSet, read_training_csv_file

_STOP = object()


class JobRunner:
    def __init__(self, store: Store, worker_count: int = 1):
        self.store = store
        self.worker_count = max(1, worker_count)
        self.queue: queue.Queue = queue.Queue()
        self.threads: list[threading.Thread] = []

    def start(self) -> None:
        for i in range(self.worker_count):
            thread = threading.Thread(target=self._work, name=f"job-worker-{i}", daemon=True)
            thread.start()
            self.threads.append(thread)

    def stop(self) -> None:
        for _ in self.threads:
            self.queue.put(_STOP)
        for thread in self.threads:
            thread.join(timeout=30)
        self.threads = []

    def submit(self, job_id: str) -> None:
        self.queue.put(job_id)

    def requeue_pending(self) -> None:
        """Re-enqueue jobs that were queued when the service last stopped."""
        for record in self.store.list_jobs():
            if record["state"] == "queued":
                self.submit(record["id"])

    def wait_idle(self, timeout: float = 60.0) -> None:
        """Block until every submitted job has been processed (for tests)."""
        import time

        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.queue.unfinished_tasks == 0:
                return
            time.sleep(0.02)
        raise TimeoutError("job queue did not drain in time")

    def _work(self) -> None:
        while True:
            item = self.queue.get()
            try:
                if item is _STOP:
                    return
                self._execute(item)
            finally:
                self.queue.task_done()

    def _execute(self, job_id: str) -> None:
        record = self.store.update_job(job_id, "running")
        try:
            table = run_job(self.store, record)
            digest = self.store.put_blob(table.to_csv_text())
            self.store.update_job(job_id, "done", result_hash=digest, finished=_now())
        except Exception as exc:
            self.store.update_job(job_id, "failed", error=str(exc), finished=_now())


def run_job(store: Store, record: dict) -> ev.ScoreTable:
    """Run one batch: resolve resources, build the training set, score."""
    matrix = store.load_corpus_matrix(record["corpus_id"])
    spec = ev.BatchSpec.from_dict(record["spec"])
    csv_text = store.training_set_csv(record["training_set_id"])
    years = set(record["train_years"]) if record.get("train_years") else None
    full = read_training_csv_file(io.StringIO(csv_text), years=years)
    in_matrix = set(matrix.doc_keys)
    kept = [(k, s) for k, s in zip(full.doc_keys, full.scores) if k in in_matrix]
    training = TrainingSet(doc_keys=[k for k, _ in kept],
                           scores=np.array([s for _, s in kept]))
    return ev.run_batch({spec.variant: matrix}, spec, training)

"""File-backed persistence for the scoring service.

Blobs (matrices, training CSVs, result tables) are content-addressed under
``objects/``; one JSON manifest records corpora, training sets and jobs.
Manifest writes are atomic (write-temp-then-rename) and serialized through a
lock, so concurrent API handlers cannot corrupt it. Stored content never
changes after it is written.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import threading
import uuid
from pathlib import Path

from textscale import corpus as corpus_mod

JOB_STATES = ("queued", "running", "done", "failed")
_ALLOWED_TRANSITIONS = {
    "queued": {"running"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}


class Store:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.objects = self.root / "objects"
        self.objects.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.root / "manifest.json"
        self._lock = threading.RLock()
        if not self.manifest_path.exists():
            self._write_manifest({"corpora": {}, "training_sets": {}, "jobs": {}})

    # -- manifest -----------------------------------------------------------

    def _read_manifest(self) -> dict:
        with open(self.manifest_path, encoding="utf-8") as fh:
            return json.load(fh)

    def _write_manifest(self, manifest: dict) -> None:
        tmp = self.manifest_path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1, sort_keys=True)
        os.replace(tmp, self.manifest_path)

    def _mutate(self, fn):
        with self._lock:
            manifest = self._read_manifest()
            result = fn(manifest)
            self._write_manifest(manifest)
            return result

    # -- blobs --------------------------------------------------------------

    def put_blob(self, text: str) -> str:
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        path = self.objects / digest
        if not path.exists():
            # unique temp name: concurrent writers of the same content race
            tmp = self.objects / f".{digest}.{uuid.uuid4().hex}.tmp"
            tmp.write_text(text, encoding="utf-8")
            os.replace(tmp, path)
        return digest

    def get_blob(self, digest: str) -> str:
        path = self.objects / digest
        if not path.exists():
            raise KeyError(f"unknown blob {digest}")
        return path.read_text(encoding="utf-8")

    # -- corpora ------------------------------------------------------------

    def add_corpus(self, name: str, matrix_text: str) -> dict:
        matrix = corpus_mod.loads_matrix(matrix_text)  # validates
        digest = self.put_blob(matrix_text)
        record = {
            "id": uuid.uuid4().hex[:12],
            "name": name,
            "hash": digest,
            "n_words": matrix.n_words,
            "n_docs": matrix.n_docs,
            "created": _now(),
        }
        self._mutate(lambda m: m["corpora"].__setitem__(record["id"], record))
        return record

    def list_corpora(self) -> list[dict]:
        return sorted(self._read_manifest()["corpora"].values(),
                      key=lambda r: r["created"])

    def get_corpus(self, corpus_id: str) -> dict:
        try:
            return self._read_manifest()["corpora"][corpus_id]
        except KeyError:
            raise KeyError(f"unknown corpus {corpus_id}") from None

    def load_corpus_matrix(self, corpus_id: str):
        record = self.get_corpus(corpus_id)
        return corpus_mod.loads_matrix(self.get_blob(record["hash"]))

    # -- training sets ------------------------------------------------------

    def add_training_set(self, name: str, csv_text: str) -> dict:
        rows = _parse_training_rows(csv_text)
        digest = self.put_blob(csv_text)
        record = {
            "id": uuid.uuid4().hex[:12],
            "name": name,
            "hash": digest,
            "n_rows": len(rows),
            "created": _now(),
        }
        self._mutate(lambda m: m["training_sets"].__setitem__(record["id"], record))
        return record

    def list_training_sets(self) -> list[dict]:
        return sorted(self._read_manifest()["training_sets"].values(),
                      key=lambda r: r["created"])

    def get_training_set(self, ts_id: str) -> dict:
        try:
            return self._read_manifest()["training_sets"][ts_id]
        except KeyError:
            raise KeyError(f"unknown training set {ts_id}") from None

    def training_set_csv(self, ts_id: str) -> str:
        return self.get_blob(self.get_training_set(ts_id)["hash"])

    def clone_training_set(self, ts_id: str, edits: dict, name: str | None = None) -> dict:
        """Create a new training set from an existing one plus edits.

        ``edits`` may contain ``set`` (list of {entity, year, score}; updates
        or adds rows) and ``remove`` (list of {entity, year}). The source set
        is never modified.
        """
        source = self.get_training_set(ts_id)
        rows = _parse_training_rows(self.get_blob(source["hash"]))
        table = {(r["entity"], r["year"]): r["score"] for r in rows}
        for item in edits.get("remove", []):
            table.pop((str(item["entity"]), int(item["year"])), None)
        for item in edits.get("set", []):
            score = float(item["score"])
            if not _finite(score):
                raise ValueError(f"non-finite score for {item['entity']},{item['year']}")
            table[(str(item["entity"]), int(item["year"]))] = score
        lines = ["entity,year,score"]
        for (entity, year), score in table.items():
            lines.append(f"{entity},{year},{score:.17g}")
        csv_text = "\n".join(lines) + "\n"
        return self.add_training_set(name or f"{source['name']} (edited)", csv_text)

    # -- jobs ---------------------------------------------------------------

    def create_job(self, corpus_id: str, training_set_id: str, spec: dict,
                   train_years=None) -> dict:
        self.get_corpus(corpus_id)
        self.get_training_set(training_set_id)
        record = {
            "id": uuid.uuid4().hex[:12],
            "state": "queued",
            "corpus_id": corpus_id,
            "training_set_id": training_set_id,
            "spec": dict(spec),
            "train_years": sorted(train_years) if train_years else None,
            "created": _now(),
            "finished": None,
            "result_hash": None,
            "error": None,
        }
        self._mutate(lambda m: m["jobs"].__setitem__(record["id"], record))
        return record

    def get_job(self, job_id: str) -> dict:
        try:
            return self._read_manifest()["jobs"][job_id]
        except KeyError:
            raise KeyError(f"unknown job {job_id}") from None

    def list_jobs(self) -> list[dict]:
        return sorted(self._read_manifest()["jobs"].values(),
                      key=lambda r: r["created"])

    def update_job(self, job_id: str, state: str, **fields) -> dict:
        if state not in JOB_STATES:
            raise ValueError(f"unknown job state {state}")

        def apply(manifest):
            try:
                record = manifest["jobs"][job_id]
            except KeyError:
                raise KeyError(f"unknown job {job_id}") from None
            if state != record["state"] and state not in _ALLOWED_TRANSITIONS[record["state"]]:
                raise ValueError(
                    f"illegal job transition {record['state']} -> {state}"
                )
            record["state"] = state
            record.update(fields)
            return dict(record)

        return self._mutate(apply)

    def job_scores_csv(self, job_id: str) -> str:
        record = self.get_job(job_id)
        if record["state"] != "done":
            raise ValueError(f"job {job_id} is {record['state']}, not done")
        return self.get_blob(record["result_hash"])


def _parse_training_rows(csv_text: str) -> list[dict]:
    """Validate structure and finiteness only; size/spread preconditions are
    engine concerns that surface when a job runs."""
    import csv as csv_lib

    reader = csv_lib.DictReader(io.StringIO(csv_text))
    required = {"entity", "year", "score"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise ValueError(f"training CSV must have columns {sorted(required)}")
    rows = []
    for row in reader:
        try:
            year = int(row["year"])
            score = float(row["score"])
        except (TypeError, ValueError):
            raise ValueError(f"malformed training row: {row}") from None
        if not _finite(score):
            raise ValueError(f"non-finite score for {row['entity']},{year}")
        rows.append({"entity": row["entity"], "year": year, "score": score})
    return rows


def _finite(x: float) -> bool:
    return x == x and abs(x) != float("inf")


def _now() -> str:
    from datetime import datetime, timezone

    return datetime.now(timezone.utc).isoformat(timespec="microseconds")

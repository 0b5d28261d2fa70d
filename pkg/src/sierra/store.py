"""Persistence: append-only binary series segments, an idempotency journal,
and JSON-lines record files with field-level encryption for PHI.

Layout under the data directory:

    series/<subject>/<channel>.seg   fixed 16-byte records after a 6-byte header
    journal.jsonl                    committed (device, seq_no) batch keys
    subjects.jsonl                   subject records, PHI values as envelopes
    questionnaires.jsonl             questionnaire sources (latest id wins)
    responses.jsonl                  answers; free-text values as envelopes

Segment record framing is length-checked on read, so a write torn by a crash
loses only the partial trailing record.
"""

from __future__ import annotations

import json
import struct
import threading
from dataclasses import dataclass
from pathlib import Path

from . import quest
from .core import Sample, SierraError, SubjectRecord, TimeSeries, validate_sample
from .crypto import EncryptedField, MissingMasterKey, decrypt_field, encrypt_field

SEGMENT_MAGIC = b"VSRA"
SEGMENT_VERSION = 1
SEGMENT_HEADER = SEGMENT_MAGIC + bytes([SEGMENT_VERSION, 0])
RECORD = struct.Struct("<qd")  # (t_ms: int64, value: float64), little-endian
MAX_BATCH = 10_000


class StoreClosed(SierraError):
    pass


class UnknownSubject(SierraError):
    pass


class UnknownChannel(SierraError):
    pass


class DuplicateSubject(SierraError):
    pass


class BatchTooLarge(SierraError):
    pass


class CorruptSegment(SierraError):
    pass


@dataclass(frozen=True)
class SampleBatch:
    device: str
    subject: str
    seq_no: int
    samples: tuple[Sample, ...]


@dataclass(frozen=True)
class IngestReceipt:
    accepted: int
    rejected: tuple[tuple[int, str], ...] = ()
    duplicate_batch: bool = False

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": [{"index": i, "reason": r} for i, r in self.rejected],
            "duplicate_batch": self.duplicate_batch,
        }


# ---------------------------------------------------------------------------
# segment files

def append_segment(path: Path, points: list[tuple[int, float]]) -> None:
    """Append records to a segment, creating it (with header) if needed.

    A torn tail from an earlier crash is truncated away first so new records
    never land misaligned.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    size = path.stat().st_size if path.exists() else 0
    header = len(SEGMENT_HEADER)
    if size >= 4 and path.open("rb").read(4) != SEGMENT_MAGIC:
        raise CorruptSegment(f"{path}: bad magic")
    with open(path, "ab") as f:
        if size < header:
            f.truncate(0)
            f.write(SEGMENT_HEADER)
        else:
            whole = header + (size - header) // RECORD.size * RECORD.size
            if whole != size:
                f.truncate(whole)
        for t_ms, value in points:
            f.write(RECORD.pack(t_ms, value))


def read_segment(path: Path) -> list[tuple[int, float]]:
    """Read all whole records in write order; a torn trailing record is dropped."""
    data = path.read_bytes()
    if len(data) < len(SEGMENT_HEADER):
        return []
    if data[:4] != SEGMENT_MAGIC:
        raise CorruptSegment(f"{path}: bad magic")
    body = data[len(SEGMENT_HEADER):]
    usable = len(body) - len(body) % RECORD.size
    return [RECORD.unpack_from(body, off) for off in range(0, usable, RECORD.size)]


class Store:
    """Single-node store. One writer per (subject, channel) is enforced with
    per-segment locks; readers need no coordination beyond file reads."""

    def __init__(self, data_dir: str | Path, master_key: bytes | None = None):
        self.data_dir = Path(data_dir)
        self.master_key = master_key
        self.data_ops = 0  # bumped by every public data operation; tests assert on it
        self._closed = False
        self._lock = threading.Lock()
        self._segment_locks: dict[tuple[str, str], threading.Lock] = {}
        self._subjects: dict[str, dict] = {}
        self._journal: set[tuple[str, int]] = set()
        self._questionnaires: dict[str, tuple[quest.QuestionnaireDef, str]] = {}
        self.data_dir.mkdir(parents=True, exist_ok=True)
        (self.data_dir / "series").mkdir(exist_ok=True)
        self._load()

    # -- loading ------------------------------------------------------------

    def _load(self) -> None:
        for line in self._read_lines("subjects.jsonl"):
            doc = json.loads(line)
            self._subjects[doc["id"]] = doc
        for line in self._read_lines("journal.jsonl"):
            doc = json.loads(line)
            self._journal.add((doc["device"], doc["seq_no"]))
        for line in self._read_lines("questionnaires.jsonl"):
            doc = json.loads(line)
            qdef = quest.parse_questionnaire(doc["source"])
            self._questionnaires[qdef.id] = (qdef, doc["source"])

    def _read_lines(self, name: str) -> list[str]:
        path = self.data_dir / name
        if not path.exists():
            return []
        return [l for l in path.read_text("utf-8").splitlines() if l.strip()]

    def _append_line(self, name: str, doc: dict) -> None:
        with open(self.data_dir / name, "a", encoding="utf-8") as f:
            f.write(json.dumps(doc) + "\n")

    # -- lifecycle ----------------------------------------------------------

    def close(self) -> None:
        self._closed = True

    def _check_open(self) -> None:
        if self._closed:
            raise StoreClosed("store is closed")

    def _touch(self) -> None:
        self._check_open()
        self.data_ops += 1

    def _segment_path(self, subject: str, channel: str) -> Path:
        return self.data_dir / "series" / subject / f"{channel}.seg"

    def _segment_lock(self, subject: str, channel: str) -> threading.Lock:
        with self._lock:
            return self._segment_locks.setdefault((subject, channel), threading.Lock())

    # -- subjects -----------------------------------------------------------

    def put_subject(self, rec: SubjectRecord) -> str:
        self._touch()
        if self.master_key is None:
            raise MissingMasterKey("cannot persist subject records without a master key")
        with self._lock:
            if rec.id in self._subjects:
                raise DuplicateSubject(rec.id)
            doc = {
                "id": rec.id,
                "cohort": rec.cohort,
                "created_at": rec.created_at,
                "phi": {
                    path: encrypt_field(f"subject/{rec.id}/phi/{path}", value, self.master_key).to_json()
                    for path, value in rec.phi.items()
                },
            }
            self._subjects[rec.id] = doc
            self._append_line("subjects.jsonl", doc)
        return rec.id

    def get_subject(self, subject_id: str) -> SubjectRecord:
        self._touch()
        doc = self._subjects.get(subject_id)
        if doc is None:
            raise UnknownSubject(subject_id)
        if doc["phi"] and self.master_key is None:
            raise MissingMasterKey("cannot decrypt subject PHI without a master key")
        phi = {
            path: decrypt_field(
                EncryptedField.from_json(env), self.master_key, f"subject/{subject_id}/phi/{path}"
            )
            for path, env in doc["phi"].items()
        }
        return SubjectRecord(id=doc["id"], cohort=doc["cohort"], phi=phi, created_at=doc["created_at"])

    def has_subject(self, subject_id: str) -> bool:
        return subject_id in self._subjects

    def list_subjects(self) -> list[str]:
        self._touch()
        return sorted(self._subjects)

    # -- ingestion ----------------------------------------------------------

    def ingest_batch(self, batch: SampleBatch) -> IngestReceipt:
        self._touch()
        if not batch.samples:
            raise ValueError("batch must be nonempty")
        if len(batch.samples) > MAX_BATCH:
            raise BatchTooLarge(f"{len(batch.samples)} samples exceeds {MAX_BATCH}")
        if batch.subject not in self._subjects:
            raise UnknownSubject(batch.subject)

        key = (batch.device, batch.seq_no)
        with self._lock:
            if key in self._journal:
                return IngestReceipt(accepted=0, duplicate_batch=True)
            # Reserve before writing so a concurrent replay cannot double-append.
            self._journal.add(key)

        accepted: dict[str, list[tuple[int, float]]] = {}
        rejected: list[tuple[int, str]] = []
        for idx, sample in enumerate(batch.samples):
            try:
                validate_sample(sample)
            except SierraError as exc:
                rejected.append((idx, type(exc).__name__))
                continue
            accepted.setdefault(sample.channel, []).append((sample.t_ms, sample.value))

        for channel, points in accepted.items():
            with self._segment_lock(batch.subject, channel):
                append_segment(self._segment_path(batch.subject, channel), points)

        with self._lock:
            self._append_line("journal.jsonl", {"device": batch.device, "seq_no": batch.seq_no})
        n_accepted = sum(len(p) for p in accepted.values())
        return IngestReceipt(accepted=n_accepted, rejected=tuple(rejected))

    # -- queries ------------------------------------------------------------

    def query_series(self, subject: str, channel: str, t0_ms: int, t1_ms: int) -> TimeSeries:
        """All stored points with t0 <= t < t1, sorted, duplicates collapsed
        to the last-written value. Empty result is not an error."""
        self._touch()
        if t0_ms > t1_ms:
            raise ValueError(f"t0 {t0_ms} > t1 {t1_ms}")
        if subject not in self._subjects:
            raise UnknownSubject(subject)
        path = self._segment_path(subject, channel)
        if not path.exists():
            raise UnknownChannel(f"{subject}/{channel}")
        latest: dict[int, float] = {}
        for t_ms, value in read_segment(path):
            if t0_ms <= t_ms < t1_ms:
                latest[t_ms] = value
        points = tuple(sorted(latest.items()))
        return TimeSeries(subject=subject, channel=channel, points=points)

    def channels(self, subject: str) -> list[str]:
        self._touch()
        if subject not in self._subjects:
            raise UnknownSubject(subject)
        root = self.data_dir / "series" / subject
        if not root.exists():
            return []
        return sorted(p.stem for p in root.glob("*.seg"))

    # -- questionnaires and responses ----------------------------------------

    def save_questionnaire(self, source: str) -> quest.QuestionnaireDef:
        """Parse and persist DSL source; reloading an id replaces it."""
        self._touch()
        qdef = quest.parse_questionnaire(source)
        with self._lock:
            self._questionnaires[qdef.id] = (qdef, source)
            self._append_line("questionnaires.jsonl", {"id": qdef.id, "source": source})
        return qdef

    def get_questionnaire(self, qid: str) -> quest.QuestionnaireDef:
        self._touch()
        entry = self._questionnaires.get(qid)
        if entry is None:
            raise KeyError(qid)
        return entry[0]

    def list_questionnaires(self) -> list[quest.QuestionnaireDef]:
        self._touch()
        return [qdef for qdef, _ in sorted(self._questionnaires.values(), key=lambda e: e[0].id)]

    def save_response(self, rs: quest.ResponseSet, respondent: str = "") -> None:
        """Persist a validated response; free-text answers may carry PHI,
        so they go through the same envelope as subject fields."""
        self._touch()
        answers: dict[str, object] = {}
        for iid, v in rs.answers.items():
            if isinstance(v, str):
                if self.master_key is None:
                    raise MissingMasterKey("cannot persist free-text answers without a master key")
                aad = f"response/{rs.questionnaire_id}/{rs.subject}/{iid}"
                answers[iid] = {"enc": encrypt_field(aad, v, self.master_key).to_json()}
            else:
                answers[iid] = v
        doc = {
            "questionnaire_id": rs.questionnaire_id,
            "version": rs.version,
            "subject": rs.subject,
            "answered_at": rs.answered_at,
            "respondent": respondent,
            "answers": answers,
        }
        with self._lock:
            self._append_line("responses.jsonl", doc)

    def list_responses(self, qid: str, subject: str | None = None) -> list[quest.ResponseSet]:
        self._touch()
        out = []
        for line in self._read_lines("responses.jsonl"):
            doc = json.loads(line)
            if doc["questionnaire_id"] != qid:
                continue
            if subject is not None and doc["subject"] != subject:
                continue
            answers: dict[str, int | str] = {}
            for iid, v in doc["answers"].items():
                if isinstance(v, dict) and "enc" in v:
                    aad = f"response/{qid}/{doc['subject']}/{iid}"
                    answers[iid] = decrypt_field(
                        EncryptedField.from_json(v["enc"]), self.master_key, aad
                    )
                else:
                    answers[iid] = v
            out.append(
                quest.ResponseSet(
                    questionnaire_id=doc["questionnaire_id"],
                    version=doc["version"],
                    subject=doc["subject"],
                    answered_at=doc["answered_at"],
                    answers=answers,
                )
            )
        return out

"""HTTP composition layer: one JSON-over-HTTP service binding ingestion,
questionnaires, the visualization portfolio, the ML toolkit, and auth.

Every response body is ``{"ok": true, "data": ...}`` or
``{"ok": false, "error": {"code", "message", ...}}``. Every route except
/healthz and /api/v1/auth/login checks access before touching the store.
Training runs as background jobs so request latency stays bounded.
"""

from __future__ import annotations

import json
import socket as socketlib
import threading
import time
import uuid
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
import uvicorn
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import quest
from .auth import (
    AuthFailed,
    AuthGuard,
    DEFAULT_TTL_MS,
    DuplicateUser,
    Session,
    WeakPassword,
    check_access,
)
from .core import Sample, SierraError, SubjectRecord, ValidationError
from .crypto import MASTER_KEY_ENV, BadMasterKey, MissingMasterKey, load_master_key
from .ml import data as ml_data
from .ml import network
from .ml.metrics import EmptyMatrix, LabelOutOfRange, confusion_matrix
from .ml.metrics import metrics as compute_metrics
from .quest import NoScorableItems, ParseError, ResponseError
from .store import (
    BatchTooLarge,
    DuplicateSubject,
    SampleBatch,
    Store,
    StoreClosed,
    UnknownChannel,
    UnknownSubject,
)
from .viz import BadParams, DuplicatePluginId, PluginRegistry, UnknownPlugin, builtin_registry

API = "/api/v1"


class ConfigError(SierraError):
    pass


class PortInUse(SierraError):
    pass


class ApiError(SierraError):
    def __init__(self, status: int, code: str, message: str, **extra):
        super().__init__(message)
        self.status = status
        self.code = code
        self.extra = extra


@dataclass(frozen=True)
class ServiceConfig:
    addr: str = "127.0.0.1:8760"
    data_dir: str | Path = "data"
    session_ttl_ms: int = DEFAULT_TTL_MS
    device_keys: dict[str, str] = dc_field(default_factory=dict)
    master_key_env: str = MASTER_KEY_ENV

    def host_port(self) -> tuple[str, int]:
        host, _, port = self.addr.rpartition(":")
        return host or "127.0.0.1", int(port)


# ---------------------------------------------------------------------------
# training jobs

@dataclass
class TrainJob:
    id: str
    state: str = "queued"  # queued | running | done | failed
    config: dict = dc_field(default_factory=dict)
    history: list[float] = dc_field(default_factory=list)
    final_loss: float | None = None
    train_accuracy: float | None = None
    test_accuracy: float | None = None
    confusion: list[list[int]] | None = None
    confusion_metrics: dict | None = None
    error: str | None = None


class JobManager:
    """In-process training jobs; one thread per job, disjoint models."""

    def __init__(self):
        self._jobs: dict[str, TrainJob] = {}
        self._lock = threading.Lock()

    def get(self, job_id: str) -> TrainJob:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise ApiError(404, "unknown_job", f"no job {job_id!r}")
        return job

    def submit(self, dataset: ml_data.Dataset, spec: dict) -> TrainJob:
        layers = [int(v) for v in spec["layers"]]
        if layers and layers[0] != dataset.features.shape[1]:
            raise ValidationError(
                f"first layer must match the {dataset.features.shape[1]} dataset features"
            )
        if dataset.task == "classification" and layers and layers[-1] != dataset.n_classes:
            raise ValidationError(f"last layer must match the {dataset.n_classes} classes")
        model = network.init_mlp(
            layers, spec.get("activation", "tanh"), dataset.task, int(spec.get("seed", 0))
        )
        cfg = network.TrainConfig(
            learning_rate=float(spec.get("learning_rate", 0.1)),
            epochs=int(spec.get("epochs", 100)),
            batch_size=int(spec.get("batch_size", 32)),
            momentum=float(spec.get("momentum", 0.9)),
            seed=int(spec.get("seed", 0)),
        )
        test_fraction = float(spec.get("test_fraction", 0.25))
        if not 0 <= test_fraction < 1:
            raise ValidationError("test_fraction must be in [0, 1)")
        job = TrainJob(id=uuid.uuid4().hex[:12], config={**spec, "layers": layers})
        with self._lock:
            self._jobs[job.id] = job
        thread = threading.Thread(
            target=self._run, args=(job, model, dataset, cfg, test_fraction), daemon=True
        )
        thread.start()
        return job

    def _run(self, job, model, dataset, cfg, test_fraction):
        job.state = "running"
        try:
            n = dataset.features.shape[0]
            rng = np.random.default_rng(cfg.seed)
            perm = rng.permutation(n)
            n_test = int(round(test_fraction * n))
            test_idx, train_idx = perm[:n_test], perm[n_test:]
            x_train, y_train = dataset.features[train_idx], dataset.labels[train_idx]
            trained, history = network.train(model, x_train, y_train, cfg)
            job.history = history
            job.final_loss = history[-1]
            if dataset.task == "classification":
                pred_train = network.predict(trained, x_train)
                job.train_accuracy = float((pred_train == y_train).mean())
                eval_idx = test_idx if n_test else train_idx
                x_eval, y_eval = dataset.features[eval_idx], dataset.labels[eval_idx]
                pred = network.predict(trained, x_eval)
                k = dataset.n_classes
                cm = confusion_matrix(y_eval, pred, k)
                job.confusion = cm.tolist()
                job.confusion_metrics = compute_metrics(cm)
                if n_test:
                    job.test_accuracy = float((pred == y_eval).mean())
            job.state = "done"
        except Exception as exc:  # failure is a job state, not a crashed thread
            job.state = "failed"
            job.error = str(exc)


class DatasetStore:
    """Uploaded CSVs under <data_dir>/ml, reloaded lazily by id."""

    def __init__(self, root: Path):
        self.root = root
        self.root.mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, ml_data.Dataset] = {}
        self._lock = threading.Lock()

    def put(self, text: str, task: str) -> tuple[str, ml_data.Dataset]:
        dataset = ml_data.load_csv(text, task)
        ds_id = "ds-" + uuid.uuid4().hex[:10]
        (self.root / f"{ds_id}.csv").write_text(text, encoding="utf-8")
        (self.root / f"{ds_id}.json").write_text(json.dumps({"task": task}), encoding="utf-8")
        with self._lock:
            self._cache[ds_id] = dataset
        return ds_id, dataset

    def get(self, ds_id: str) -> ml_data.Dataset:
        with self._lock:
            if ds_id in self._cache:
                return self._cache[ds_id]
        csv_path = self.root / f"{ds_id}.csv"
        meta_path = self.root / f"{ds_id}.json"
        if not csv_path.exists() or not meta_path.exists():
            raise ApiError(404, "unknown_dataset", f"no dataset {ds_id!r}")
        task = json.loads(meta_path.read_text("utf-8"))["task"]
        dataset = ml_data.load_csv(csv_path.read_text("utf-8"), task)
        with self._lock:
            self._cache[ds_id] = dataset
        return dataset


# ---------------------------------------------------------------------------
# error mapping

STATUS_BY_ERROR: list[tuple[type, int, str]] = [
    (AuthFailed, 401, "auth_failed"),
    (ParseError, 400, "parse_error"),
    (ResponseError, 400, "invalid_response"),
    (BadParams, 400, "bad_params"),
    (NoScorableItems, 400, "no_scorable_items"),
    (BatchTooLarge, 400, "batch_too_large"),
    (ml_data.CsvFormatError, 400, "bad_csv"),
    (network.BadArchitecture, 400, "bad_architecture"),
    (network.ShapeMismatch, 400, "shape_mismatch"),
    (network.NonFiniteInput, 400, "non_finite_input"),
    (LabelOutOfRange, 400, "label_out_of_range"),
    (EmptyMatrix, 400, "empty_matrix"),
    (ValidationError, 400, "validation"),
    (WeakPassword, 400, "weak_password"),
    (quest.OutOfRange, 400, "out_of_range"),
    (UnknownSubject, 404, "unknown_subject"),
    (UnknownChannel, 404, "unknown_channel"),
    (UnknownPlugin, 404, "unknown_plugin"),
    (DuplicateSubject, 409, "duplicate_subject"),
    (DuplicateUser, 409, "duplicate_user"),
    (DuplicatePluginId, 409, "duplicate_plugin"),
    (StoreClosed, 503, "store_closed"),
    (MissingMasterKey, 500, "missing_master_key"),
]


def _fail(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"ok": False, "error": {"code": code, "message": message, **extra}},
    )


def _ok(data, status: int = 200) -> JSONResponse:
    return JSONResponse(status_code=status, content={"ok": True, "data": data})


def _error_response(exc: Exception) -> JSONResponse:
    if isinstance(exc, ApiError):
        return _fail(exc.status, exc.code, str(exc), **exc.extra)
    for etype, status, code in STATUS_BY_ERROR:
        if isinstance(exc, etype):
            extra = {}
            if isinstance(exc, ParseError):
                extra["line"] = exc.line
            if isinstance(exc, (ResponseError, BadParams)):
                extra["issues"] = [{"item": i, "reason": r} for i, r in exc.issues]
            return _fail(status, code, str(exc), **extra)
    if isinstance(exc, ValueError):
        return _fail(400, "validation", str(exc))
    return _fail(500, "internal", str(exc))


# ---------------------------------------------------------------------------
# app assembly

def create_app(
    store: Store,
    registry: PluginRegistry,
    guard: AuthGuard,
    jobs: JobManager,
    datasets: DatasetStore,
    device_keys: dict[str, str],
) -> FastAPI:
    app = FastAPI(title="sierra", docs_url=None, redoc_url=None, openapi_url=None)

    @app.exception_handler(SierraError)
    async def on_domain_error(request: Request, exc: SierraError):
        return _error_response(exc)

    @app.exception_handler(ValueError)
    async def on_value_error(request: Request, exc: ValueError):
        return _error_response(exc)

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        return _fail(exc.status_code, "http_error", str(exc.detail))

    @app.exception_handler(RequestValidationError)
    async def on_request_error(request: Request, exc: RequestValidationError):
        return _fail(400, "validation", "malformed request")

    def bearer_token(request: Request) -> str | None:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            return header[7:].strip()
        return None

    def require_session(request: Request) -> Session:
        session = guard.session(bearer_token(request))
        if session is None:
            raise ApiError(401, "unauthorized", "missing, invalid, or expired token")
        return session

    def enforce(session: Session, action: str, resource: str | None = None) -> None:
        decision = check_access(session, action, resource)
        if not decision:
            raise ApiError(403, "forbidden", decision.reason)

    def require_access(request: Request, action: str, resource: str | None = None) -> Session:
        """Access check first; nothing may touch the store before this passes."""
        session = require_session(request)
        enforce(session, action, resource)
        return session

    async def json_body(request: Request) -> dict:
        raw = await request.body()
        try:
            doc = json.loads(raw) if raw else {}
        except json.JSONDecodeError:
            raise ApiError(400, "validation", "request body is not valid JSON")
        if not isinstance(doc, dict):
            raise ApiError(400, "validation", "request body must be a JSON object")
        return doc

    def need(doc: dict, key: str):
        if key not in doc:
            raise ApiError(400, "validation", f"missing field {key!r}")
        return doc[key]

    def query_int(request: Request, key: str) -> int:
        raw = request.query_params.get(key)
        if raw is None:
            raise ApiError(400, "validation", f"missing query parameter {key!r}")
        try:
            return int(raw)
        except ValueError:
            raise ApiError(400, "validation", f"query parameter {key!r} must be an integer")

    # -- health ---------------------------------------------------------------

    @app.get("/healthz")
    async def healthz():
        return _ok("ok")

    # -- auth -----------------------------------------------------------------

    @app.post(f"{API}/auth/login")
    async def login(request: Request):
        doc = await json_body(request)
        session = guard.authenticate(str(need(doc, "username")), str(need(doc, "password")))
        return _ok({
            "token": session.token,
            "username": session.username,
            "role": session.role,
            "linked_subject": session.linked_subject,
            "expires_at": session.expires_at,
        })

    @app.post(f"{API}/auth/logout")
    async def logout(request: Request):
        token = bearer_token(request)
        if guard.session(token) is None:
            raise ApiError(401, "unauthorized", "missing, invalid, or expired token")
        guard.logout(token)
        return _ok({"logged_out": True})

    # -- subjects ---------------------------------------------------------------

    @app.post(f"{API}/subjects")
    async def create_subject(request: Request):
        require_access(request, "create_subject")
        doc = await json_body(request)
        rec = SubjectRecord(
            id=str(need(doc, "id")),
            cohort=str(doc.get("cohort", "")),
            phi={str(k): str(v) for k, v in doc.get("phi", {}).items()},
            created_at=int(doc.get("created_at", time.time() * 1000)),
        )
        if not rec.id or "/" in rec.id or "\\" in rec.id or rec.id in (".", ".."):
            raise ApiError(400, "validation", "subject id must be a plain identifier")
        store.put_subject(rec)
        return _ok({"id": rec.id}, status=201)

    @app.get(f"{API}/subjects/{{subject_id}}")
    async def get_subject(request: Request, subject_id: str):
        require_access(request, "read_subject", subject_id)
        rec = store.get_subject(subject_id)
        return _ok({
            "id": rec.id,
            "cohort": rec.cohort,
            "phi": rec.phi,
            "created_at": rec.created_at,
        })

    # -- ingestion (device-key authenticated) -----------------------------------

    @app.post(f"{API}/ingest")
    async def ingest(request: Request):
        key = request.headers.get("x-device-key")
        if key is None:
            raise ApiError(401, "unauthorized", "missing X-Device-Key header")
        raw = await request.body()
        try:
            doc = json.loads(raw)  # parses NaN/Infinity literals; validation rejects them
        except json.JSONDecodeError:
            raise ApiError(400, "validation", "request body is not valid JSON")
        if not isinstance(doc, dict):
            raise ApiError(400, "validation", "request body must be a JSON object")
        device = str(doc.get("device_id", ""))
        if not device or device_keys.get(device) != key:
            raise ApiError(401, "unauthorized", "unknown device or bad device key")
        entries = need(doc, "samples")
        if not isinstance(entries, list) or not all(isinstance(s, dict) for s in entries):
            raise ApiError(400, "validation", "'samples' must be a list of objects")
        samples = tuple(
            Sample(channel=s.get("channel"), t_ms=s.get("t_ms"), value=s.get("value"))
            for s in entries
        )
        batch = SampleBatch(
            device=device,
            subject=str(need(doc, "subject_id")),
            seq_no=int(need(doc, "seq_no")),
            samples=samples,
        )
        return _ok(store.ingest_batch(batch).to_json())

    # -- series -----------------------------------------------------------------

    @app.get(f"{API}/series")
    async def series(request: Request):
        session = require_session(request)
        subject = request.query_params.get("subject")
        if not subject:
            raise ApiError(400, "validation", "missing query parameter 'subject'")
        enforce(session, "read_series", subject)
        channel = request.query_params.get("channel")
        if not channel:
            raise ApiError(400, "validation", "missing query parameter 'channel'")
        ts = store.query_series(subject, channel, query_int(request, "t0"), query_int(request, "t1"))
        return _ok({
            "subject": ts.subject,
            "channel": ts.channel,
            "points": [[t, v] for t, v in ts.points],
        })

    # -- questionnaires -----------------------------------------------------------

    @app.post(f"{API}/questionnaires")
    async def load_questionnaire(request: Request):
        require_access(request, "load_questionnaire")
        source = (await request.body()).decode("utf-8")
        qdef = store.save_questionnaire(source)
        return _ok({"id": qdef.id, "version": qdef.version, "n_items": len(qdef.items)}, status=201)

    @app.get(f"{API}/questionnaires")
    async def list_questionnaires(request: Request):
        require_access(request, "read_questionnaire")
        return _ok([
            {"id": q.id, "version": q.version, "n_items": len(q.items), "score_mode": q.score_mode}
            for q in store.list_questionnaires()
        ])

    @app.get(f"{API}/questionnaires/{{qid}}/form")
    async def questionnaire_form(request: Request, qid: str):
        require_access(request, "read_questionnaire")
        try:
            qdef = store.get_questionnaire(qid)
        except KeyError:
            raise ApiError(404, "unknown_questionnaire", f"no questionnaire {qid!r}")
        return _ok(quest.emit_form_spec(qdef))

    @app.post(f"{API}/questionnaires/{{qid}}/responses")
    async def submit_response(request: Request, qid: str):
        session = require_session(request)
        doc = await json_body(request)
        subject = str(need(doc, "subject"))
        enforce(session, "respond_questionnaire", subject)
        try:
            qdef = store.get_questionnaire(qid)
        except KeyError:
            raise ApiError(404, "unknown_questionnaire", f"no questionnaire {qid!r}")
        answers = need(doc, "answers")
        if not isinstance(answers, dict):
            raise ApiError(400, "validation", "'answers' must be an object")
        rs = quest.validate_response(
            qdef, subject, answers, answered_at=int(doc.get("answered_at", time.time() * 1000))
        )
        store.save_response(rs, respondent=session.username)
        report = quest.score_response(qdef, rs) if any(
            it.kind == "likert" and it.id in rs.answers for it in qdef.items
        ) else None
        return _ok({
            "stored": True,
            "score": None if report is None else {
                "total": report.total,
                "n_scored": report.n_scored,
            },
        }, status=201)

    @app.get(f"{API}/questionnaires/{{qid}}/scores")
    async def questionnaire_scores(request: Request, qid: str):
        session = require_session(request)
        subject = request.query_params.get("subject")
        if not subject:
            raise ApiError(400, "validation", "missing query parameter 'subject'")
        enforce(session, "read_scores", subject)
        try:
            qdef = store.get_questionnaire(qid)
        except KeyError:
            raise ApiError(404, "unknown_questionnaire", f"no questionnaire {qid!r}")
        reports = []
        for rs in store.list_responses(qid, subject):
            try:
                rep = quest.score_response(qdef, rs)
            except NoScorableItems:
                continue
            reports.append({
                "subject": rs.subject,
                "answered_at": rs.answered_at,
                "total": rep.total,
                "n_scored": rep.n_scored,
                "per_item": rep.per_item,
            })
        return _ok(reports)

    # -- visualization portfolio -----------------------------------------------

    @app.get(f"{API}/portfolio")
    async def portfolio(request: Request):
        require_access(request, "read_portfolio")
        return _ok([d.to_json() for d in registry.list_portfolio()])

    @app.get(f"{API}/viz/{{plugin_id}}/data")
    async def viz_data(request: Request, plugin_id: str):
        session = require_session(request)
        params = dict(request.query_params)
        subject = params.get("subject")
        if not subject:
            raise ApiError(400, "validation", "missing query parameter 'subject'")
        enforce(session, "build_viz", subject)
        stream = registry.build_data_stream(plugin_id, params, store)
        return _ok(stream.to_json())

    # -- ML toolkit ---------------------------------------------------------------

    @app.post(f"{API}/ml/datasets")
    async def upload_dataset(request: Request):
        require_access(request, "manage_ml")
        task = request.query_params.get("task", "classification")
        if task not in ("classification", "regression"):
            raise ApiError(400, "validation", "task must be classification or regression")
        text = (await request.body()).decode("utf-8")
        ds_id, dataset = datasets.put(text, task)
        out = {
            "dataset_id": ds_id,
            "rows": int(dataset.features.shape[0]),
            "features": list(dataset.feature_names),
            "task": task,
        }
        if task == "classification":
            out["classes"] = dataset.n_classes
        return _ok(out, status=201)

    @app.post(f"{API}/ml/train")
    async def start_training(request: Request):
        require_access(request, "manage_ml")
        doc = await json_body(request)
        dataset = datasets.get(str(need(doc, "dataset_id")))
        spec = {k: v for k, v in doc.items() if k != "dataset_id"}
        need(doc, "layers")
        job = jobs.submit(dataset, spec)
        return _ok({"job_id": job.id, "state": job.state}, status=202)

    @app.get(f"{API}/ml/jobs/{{job_id}}")
    async def job_status(request: Request, job_id: str):
        require_access(request, "manage_ml")
        job = jobs.get(job_id)
        return _ok({
            "id": job.id,
            "state": job.state,
            "config": job.config,
            "final_loss": job.final_loss,
            "history": job.history,
            "train_accuracy": job.train_accuracy,
            "test_accuracy": job.test_accuracy,
            "error": job.error,
        })

    @app.get(f"{API}/ml/jobs/{{job_id}}/confusion")
    async def job_confusion(request: Request, job_id: str):
        require_access(request, "manage_ml")
        job = jobs.get(job_id)
        if job.state in ("queued", "running"):
            raise ApiError(409, "job_not_finished", f"job is {job.state}")
        if job.state == "failed":
            raise ApiError(409, "job_failed", job.error or "training failed")
        if job.confusion is None:
            raise ApiError(409, "no_confusion", "job has no confusion matrix (regression task)")
        return _ok({"matrix": job.confusion, "metrics": job.confusion_metrics})

    return app


# ---------------------------------------------------------------------------
# service handle

class ServiceHandle:
    """A composed service plus its shared state; bind with start()."""

    def __init__(self, cfg: ServiceConfig, app, store, registry, guard, jobs, datasets):
        self.cfg = cfg
        self.app = app
        self.store = store
        self.registry = registry
        self.guard = guard
        self.jobs = jobs
        self.datasets = datasets
        self._server: uvicorn.Server | None = None
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        host, port = self.cfg.host_port()
        sock = socketlib.socket(socketlib.AF_INET, socketlib.SOCK_STREAM)
        try:
            sock.bind((host, port))
        except OSError as exc:
            sock.close()
            raise PortInUse(f"cannot bind {host}:{port}: {exc}") from exc
        sock.listen(128)
        config = uvicorn.Config(self.app, log_level="warning", access_log=False)
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(
            target=self._server.run, kwargs={"sockets": [sock]}, daemon=True
        )
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise ConfigError("server failed to start within 10s")
            if not self._thread.is_alive():
                raise PortInUse(f"server thread died binding {host}:{port}")
            time.sleep(0.02)

    def stop(self) -> None:
        if self._server is not None:
            self._server.should_exit = True
        if self._thread is not None:
            self._thread.join(timeout=10)
        self.store.close()


def compose_service(cfg: ServiceConfig) -> ServiceHandle:
    """Build the full service: store, plugin registry, auth, jobs, routes.

    Refuses to start without a master key; PHI endpoints are always enabled.
    """
    data_dir = Path(cfg.data_dir)
    try:
        data_dir.mkdir(parents=True, exist_ok=True)
        probe = data_dir / ".writable"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"data directory {data_dir} is not writable: {exc}") from exc
    try:
        master_key = load_master_key(cfg.master_key_env)
    except (MissingMasterKey, BadMasterKey) as exc:
        raise ConfigError(str(exc)) from exc

    store = Store(data_dir, master_key=master_key)
    registry = builtin_registry()
    guard = AuthGuard(data_dir / "users.jsonl", session_ttl_ms=cfg.session_ttl_ms)
    jobs = JobManager()
    datasets = DatasetStore(data_dir / "ml")
    app = create_app(store, registry, guard, jobs, datasets, dict(cfg.device_keys))
    return ServiceHandle(cfg, app, store, registry, guard, jobs, datasets)

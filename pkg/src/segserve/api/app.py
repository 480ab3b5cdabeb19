"""HTTP surface: registration, login, task submission, diagnosis, task
listing, and safe result download.

Every authenticated route requires ``Authorization: Bearer <token>``;
domain errors map onto a fixed status/code table and serialize as
``{"error": code, "message": text}``. Submission is asynchronous (202 +
task id, clients poll); diagnosis is synchronous.
"""

from __future__ import annotations

from contextlib import asynccontextmanager
from datetime import timezone

from fastapi import Depends, FastAPI, File, Form, Request, Response, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..auth import AuthService
from ..config import ServiceConfig
from ..errors import (
    AuthFailed,
    DegenerateLabels,
    DimensionMismatch,
    IllegalTransition,
    InvalidCategory,
    InvalidInput,
    NotFound,
    NotOwner,
    PayloadTooLarge,
    PersistError,
    ResultNotReady,
    SegServeError,
    TokenInvalid,
    UnsupportedFormat,
    UsernameTaken,
    WeakPassword,
)
from ..fusion import FusionStrategy
from ..orchestrator import Orchestrator
from ..pipelines import WeightProvider, build_pipeline, run_diagnosis
from ..records import SEGMENTATION_CATEGORIES, SafetyTag, TaskRecord, TaskState
from ..raster import sniff_format
from ..storage import Store
from . import schemas

_STATUS_BY_ERROR: dict[type[SegServeError], int] = {
    InvalidInput: 400,
    DimensionMismatch: 400,
    DegenerateLabels: 400,
    UnsupportedFormat: 400,
    InvalidCategory: 400,
    WeakPassword: 400,
    TokenInvalid: 400,
    AuthFailed: 401,
    NotOwner: 403,
    NotFound: 404,
    UsernameTaken: 409,
    ResultNotReady: 409,
    PayloadTooLarge: 413,
    IllegalTransition: 500,
    PersistError: 500,
}


def _status_for(exc: SegServeError) -> int:
    for cls in type(exc).__mro__:
        if cls in _STATUS_BY_ERROR:
            return _STATUS_BY_ERROR[cls]
    return 500


def create_app(config: ServiceConfig) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        config.data_root.mkdir(parents=True, exist_ok=True)
        store = Store(config.db_path)
        provider = WeightProvider(config)
        orchestrator = Orchestrator(
            store,
            config.data_root,
            build_pipeline(config, provider),
            capacity=config.queue_capacity,
        )
        orchestrator.start(workers=config.workers)
        app.state.store = store
        app.state.auth = AuthService(store)
        app.state.orchestrator = orchestrator
        app.state.provider = provider
        app.state.config = config
        try:
            yield
        finally:
            orchestrator.stop()
            store.close()

    app = FastAPI(title="segserve", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SegServeError)
    async def domain_error(_request: Request, exc: SegServeError) -> JSONResponse:
        return JSONResponse(
            status_code=_status_for(exc),
            content={"error": exc.code, "message": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error(
        _request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        errors = exc.errors()
        if errors:
            loc = ".".join(str(part) for part in errors[0].get("loc", ()))
            message = f"{loc}: {errors[0].get('msg', 'invalid')}"
        else:
            message = "invalid request body"
        return JSONResponse(
            status_code=400,
            content={"error": "invalid_input", "message": message},
        )

    def auth_service(request: Request) -> AuthService:
        return request.app.state.auth

    def orchestrator_of(request: Request) -> Orchestrator:
        return request.app.state.orchestrator

    def current_user(request: Request) -> int:
        header = request.headers.get("Authorization", "")
        scheme, _, token = header.partition(" ")
        if scheme.lower() != "bearer" or not token:
            raise AuthFailed("missing bearer token")
        return request.app.state.auth.validate(token.strip())

    async def read_limited(upload: UploadFile, limit: int) -> bytes:
        data = await upload.read(limit + 1)
        if len(data) > limit:
            raise PayloadTooLarge(f"upload exceeds {limit} bytes")
        return data

    def task_detail(record: TaskRecord) -> schemas.TaskDetail:
        return schemas.TaskDetail(
            task_id=record.id,
            category=record.category,
            submitted_at=record.submitted_at.astimezone(timezone.utc),
            state=record.state.value,
            safety=record.safety.value,
            result_ready=(
                record.state is TaskState.DONE
                and record.safety is SafetyTag.SAFE
            ),
            error=record.error,
        )

    @app.post("/api/register", response_model=schemas.RegisterResponse,
              status_code=201)
    def register(
        body: schemas.RegisterRequest,
        auth: AuthService = Depends(auth_service),
    ) -> schemas.RegisterResponse:
        user = auth.register(body.username, body.password)
        return schemas.RegisterResponse(user_id=user.user_id)

    @app.post("/api/login", response_model=schemas.LoginResponse)
    def login(
        body: schemas.LoginRequest,
        auth: AuthService = Depends(auth_service),
    ) -> schemas.LoginResponse:
        session = auth.authenticate(body.username, body.password)
        return schemas.LoginResponse(
            token=session.token, expires_at=session.expires_at
        )

    @app.post("/api/tasks", response_model=schemas.TaskSubmitResponse,
              status_code=202)
    async def submit_task(
        request: Request,
        category: str = Form(...),
        file: UploadFile = File(...),
        user_id: int = Depends(current_user),
        orch: Orchestrator = Depends(orchestrator_of),
    ) -> schemas.TaskSubmitResponse:
        if category not in SEGMENTATION_CATEGORIES:
            raise InvalidCategory(
                f"category must be one of {', '.join(SEGMENTATION_CATEGORIES)}"
            )
        payload = await read_limited(file, request.app.state.config.upload_limit)
        sniff_format(payload)  # cheap magic check; full decode happens in the worker
        input_ref = orch.store_input(payload, file.filename or "input.bin")
        task_id = orch.submit(user_id, category, input_ref)
        return schemas.TaskSubmitResponse(task_id=task_id)

    @app.post("/api/diagnose", response_model=schemas.DiagnoseResponse)
    async def diagnose_pair(
        request: Request,
        image_f: UploadFile = File(...),
        image_o: UploadFile = File(...),
        strategy: str = Form(...),
        lam: float | None = Form(None, alias="lambda"),
        _user_id: int = Depends(current_user),
    ) -> schemas.DiagnoseResponse:
        limit = request.app.state.config.upload_limit
        payload_f = await read_limited(image_f, limit)
        payload_o = await read_limited(image_o, limit)
        result = run_diagnosis(
            payload_f,
            payload_o,
            FusionStrategy.parse(strategy),
            lam,
            request.app.state.provider,
            request.app.state.config.class_names,
        )
        return schemas.DiagnoseResponse(**result)

    @app.get("/api/tasks", response_model=list[schemas.TaskSummary])
    def list_tasks(
        user_id: int = Depends(current_user),
        orch: Orchestrator = Depends(orchestrator_of),
    ) -> list[schemas.TaskSummary]:
        return [
            schemas.TaskSummary(
                task_id=r.id,
                category=r.category,
                submitted_at=r.submitted_at.astimezone(timezone.utc),
                state=r.state.value,
            )
            for r in orch.list_tasks(user_id)
        ]

    def owned_task(orch: Orchestrator, task_id: str, user_id: int) -> TaskRecord:
        record = orch.query_status(task_id)
        if record.owner != user_id:
            raise NotOwner(f"task {task_id} belongs to another user")
        return record

    @app.get("/api/tasks/{task_id}", response_model=schemas.TaskDetail)
    def task_status(
        task_id: str,
        user_id: int = Depends(current_user),
        orch: Orchestrator = Depends(orchestrator_of),
    ) -> schemas.TaskDetail:
        return task_detail(owned_task(orch, task_id, user_id))

    @app.get("/api/tasks/{task_id}/result")
    def task_result(
        task_id: str,
        user_id: int = Depends(current_user),
        orch: Orchestrator = Depends(orchestrator_of),
    ) -> Response:
        owned_task(orch, task_id, user_id)
        filename, payload = orch.open_result(task_id)
        media = "application/octet-stream"
        if filename.endswith(".pgm"):
            media = "image/x-portable-graymap"
        elif filename.endswith(".json"):
            media = "application/json"
        return Response(
            content=payload,
            media_type=media,
            headers={"Content-Disposition": f'attachment; filename="{filename}"'},
        )

    @app.post("/api/password-reset", response_model=schemas.ResetResponse)
    def password_reset(
        body: schemas.ResetRequest,
        auth: AuthService = Depends(auth_service),
    ) -> schemas.ResetResponse:
        token = auth.reset_password(body.username)
        return schemas.ResetResponse(
            reset_token=token.token, expires_at=token.expires_at
        )

    @app.post("/api/password-reset/confirm", status_code=204)
    def password_reset_confirm(
        body: schemas.ResetConfirmRequest,
        auth: AuthService = Depends(auth_service),
    ) -> Response:
        auth.redeem_reset(body.token, body.new_password)
        return Response(status_code=204)

    return app

"""JSON REST API over the engine.

Every route returns JSON; failures use one envelope shape,
``{"error": {"code": ..., "message": ...}}``, so clients never parse
free-form text.  Reading is public; submitting stamps and managing
schedules require a session token (``Authorization: Bearer <token>``)
from a confirmed account.  Responses never include password digests,
private keys or the server secret.
"""

from __future__ import annotations

from typing import Optional

from fastapi import Depends, FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .engine import AuthError, Engine, UpstreamError
from .ingest import MalformedUrlError
from .store import (
    NotFound,
    ScheduleMode,
    UserAccount,
    ValidationError,
)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


class RegisterBody(BaseModel):
    username: str
    email: str
    password: str


class ConfirmBody(BaseModel):
    token: str


class LoginBody(BaseModel):
    username: str
    password: str


class StampBody(BaseModel):
    url: str
    post_title: Optional[str] = None
    via_country: Optional[str] = None


class ScheduleBody(BaseModel):
    url: str
    frequency_days: int = Field(..., description="days between runs, 1..30")
    mode: str = ScheduleMode.RESTAMP.value
    post_title: Optional[str] = None
    email: Optional[str] = None
    country: Optional[str] = None


class BlockCheckBody(BaseModel):
    url: str
    countries: Optional[list[str]] = None


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="webstamp", docs_url=None, redoc_url=None)

    # -- error envelope ------------------------------------------------------

    @app.exception_handler(AuthError)
    async def _auth_error(request: Request, exc: AuthError):
        return _error(401, exc.code, str(exc))

    @app.exception_handler(NotFound)
    async def _not_found(request: Request, exc: NotFound):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(ValidationError)
    async def _validation(request: Request, exc: ValidationError):
        return _error(400, "invalid", str(exc))

    @app.exception_handler(MalformedUrlError)
    async def _bad_url(request: Request, exc: MalformedUrlError):
        return _error(400, "bad_url", str(exc))

    @app.exception_handler(UpstreamError)
    async def _upstream(request: Request, exc: UpstreamError):
        return _error(502, "upstream_failed", str(exc))

    @app.exception_handler(KeyError)
    async def _key_error(request: Request, exc: KeyError):
        return _error(400, "invalid", str(exc.args[0]) if exc.args else "bad reference")

    # -- auth plumbing ---------------------------------------------------------

    def client_ip(request: Request) -> str:
        return request.client.host if request.client else "unknown"

    def current_user(request: Request) -> UserAccount:
        header = request.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise AuthError("missing bearer token", code="missing_token")
        return engine.authenticate(header[len("Bearer "):].strip(), client_ip(request))

    def current_writer(request: Request) -> UserAccount:
        user = current_user(request)
        if not user.confirmed:
            raise AuthError("account is not confirmed", code="unconfirmed")
        if not user.can_write():
            raise AuthError("account may not write", code="forbidden")
        return user

    # -- auth routes -------------------------------------------------------------

    @app.post("/api/auth/register", status_code=201)
    def register(body: RegisterBody):
        user, _token = engine.register_user(body.username, body.email, body.password)
        # the confirm token travels by email (the queued notification),
        # never in this response
        return {"user": user.to_json()}

    @app.post("/api/auth/confirm")
    def confirm(body: ConfirmBody):
        user = engine.confirm_user(body.token)
        return {"user": user.to_json()}

    @app.post("/api/auth/login")
    def login(body: LoginBody, request: Request):
        token = engine.login(body.username, body.password, client_ip(request))
        user = engine.store.check_credentials(body.username, body.password)
        return {"token": token, "user": user.to_json()}

    # -- stamps ---------------------------------------------------------------------

    @app.post("/api/stamps", status_code=201)
    def submit_stamp(body: StampBody, user: UserAccount = Depends(current_writer)):
        receipt = engine.stamp_url(
            body.url,
            owner=user.id,
            post_title=body.post_title,
            via_country=body.via_country,
        )
        doc = receipt.to_json()
        doc["verify_url"] = f"/api/stamps/{receipt.record.id}/verify"
        return doc

    @app.get("/api/stamps")
    def search_stamps(
        query: str = Query(default=""),
        domain: Optional[str] = Query(default=None),
        page: int = Query(default=1, ge=1),
    ):
        result = engine.store.search(query, domain=domain, page=page)
        return {
            "results": [r.to_json() for r in result.records],
            "page": result.page,
            "pages": result.pages,
            "page_size": result.page_size,
            "total": result.total,
        }

    @app.get("/api/stamps/{stamp_id}")
    def stamp_detail(stamp_id: int):
        record = engine.store.get_stamp(stamp_id)
        versions = engine.store.versions_of(record.url)
        return {
            "record": record.to_json(),
            "canonical_text": engine.store.read_snapshot(record.snapshot_ref),
            "versions": [
                {"id": v.id, "stamped_at": v.core.to_json()["stamped_at"]}
                for v in versions
            ],
        }

    @app.get("/api/stamps/{stamp_id}/verify")
    def verify(stamp_id: int):
        report, receipt = engine.verify_record(stamp_id)
        return {"report": report.to_json(), "receipt": receipt}

    @app.get("/api/domains")
    def list_domains():
        return {"domains": engine.store.list_domains()}

    # -- comparison ---------------------------------------------------------------------

    @app.get("/api/compare")
    def compare(
        old: int = Query(...),
        new: Optional[str] = Query(default=None),
        country: Optional[str] = Query(default=None),
    ):
        if country:
            view = engine.compare_with_country(old, country)
        elif new == "current":
            view = engine.compare_with_current(old)
        elif new and new.isdigit():
            view = engine.compare_records(old, int(new))
        else:
            raise ValidationError(
                "compare needs new=<id>, new=current, or country=<code>"
            )
        return view.to_json()

    # -- schedules -------------------------------------------------------------------------

    @app.post("/api/schedules", status_code=201)
    def add_schedule(body: ScheduleBody, user: UserAccount = Depends(current_writer)):
        try:
            mode = ScheduleMode(body.mode)
        except ValueError:
            raise ValidationError(f"unknown schedule mode {body.mode!r}")
        task = engine.add_schedule(
            body.url,
            body.frequency_days,
            mode=mode,
            post_title=body.post_title,
            email=body.email,
            country=body.country,
            owner=user.id,
        )
        return task.to_json()

    @app.get("/api/schedules")
    def list_schedules(user: UserAccount = Depends(current_user)):
        return {"schedules": [t.to_json() for t in engine.store.list_schedules()]}

    @app.get("/api/schedules/{schedule_id}")
    def get_schedule(schedule_id: int, user: UserAccount = Depends(current_user)):
        return engine.store.get_schedule(schedule_id).to_json()

    @app.delete("/api/schedules/{schedule_id}")
    def delete_schedule(schedule_id: int, user: UserAccount = Depends(current_writer)):
        engine.store.delete_schedule(schedule_id)
        return {"deleted": schedule_id}

    # -- block checking ------------------------------------------------------------------------

    @app.post("/api/block-check")
    def block_check(body: BlockCheckBody):
        results = engine.block_check(body.url, countries=body.countries)
        return {"url": body.url, "results": [r.to_json() for r in results]}

    @app.get("/api/block-map")
    def block_map(url: str = Query(...)):
        results = engine.block_map(url)
        return {"url": url, "results": [r.to_json() for r in results]}

    # -- statistics -------------------------------------------------------------------------------

    @app.get("/api/stats/countries")
    def stats_countries():
        return {"countries": engine.store.stats_by_country()}

    return app

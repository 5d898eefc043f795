"""HTTP surface over the stack; every data read is scope-enforced.

Routes live under /api/v1. Ingest accepts the exposition text format and
honors the virtual-time header in test mode so scenario runs can compress
time. Query endpoints AND the caller's scope into each selector before it
reaches a store, so a user token cannot see outside its labels no matter
what it asks for.
"""

from __future__ import annotations

import os
from typing import Optional

from fastapi import Depends, FastAPI, Header, Query, Request, Response
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from obstack.alerting import AlertRule
from obstack.analytics import InsufficientData
from obstack.api.auth import (
    CredentialStore,
    Principal,
    Role,
    ScopeConflict,
    Unauthenticated,
    scope_selector,
)
from obstack.api.stack import Stack
from obstack.api.templates import validate_template
from obstack.core.clock import SettableClock
from obstack.core.errors import InvalidRange, ObstackError, ParseError
from obstack.core.selector import parse_selector
from obstack.core.wire import format_exposition
from obstack.metastore import EntityRecord
from obstack.tsdb import QuantileNeedsRaw

VIRTUAL_TIME_HEADER = "x-virtual-time-ms"

_BAD_REQUEST = (InvalidRange, ParseError, QuantileNeedsRaw, ValueError)


def create_app(stack: Stack, credentials: Optional[CredentialStore] = None) -> FastAPI:
    app = FastAPI(title="obstack", docs_url=None, redoc_url=None)
    creds = credentials or CredentialStore.from_env()

    def principal(authorization: Optional[str] = Header(default=None)) -> Principal:
        token = None
        if authorization and authorization.lower().startswith("bearer "):
            token = authorization[7:].strip()
        return creds.authorize(token)

    def admin_only(p: Principal = Depends(principal)) -> Principal:
        if p.role is not Role.ADMIN:
            raise ScopeConflict("administrator role required")
        return p

    @app.exception_handler(Unauthenticated)
    async def _unauth(request: Request, exc: Unauthenticated):
        return JSONResponse({"error": "Unauthenticated", "detail": str(exc)}, status_code=401)

    @app.exception_handler(ScopeConflict)
    async def _forbidden(request: Request, exc: ScopeConflict):
        return JSONResponse({"error": "ScopeConflict", "detail": str(exc)}, status_code=403)

    @app.exception_handler(ObstackError)
    async def _domain_error(request: Request, exc: ObstackError):
        status = 400 if isinstance(exc, _BAD_REQUEST) else 500
        return JSONResponse(
            {"error": type(exc).__name__, "detail": str(exc)}, status_code=status
        )

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse({"error": "ValueError", "detail": str(exc)}, status_code=400)

    # -- ingest (gateway surface) -----------------------------------------

    @app.post("/api/v1/ingest")
    async def ingest(request: Request) -> dict:
        if stack.settings.test_mode:
            virtual = request.headers.get(VIRTUAL_TIME_HEADER)
            if virtual and isinstance(stack.clock, SettableClock):
                stack.clock.set_ms(int(virtual))
        body = (await request.body()).decode("utf-8", errors="replace")
        source = dict(request.query_params)
        accepted, rejects = stack.gateway.ingest(body, source_labels=source)
        return {
            "accepted": accepted,
            "rejected": [{"line": line, "error": error} for line, error in rejects],
        }

    # -- queries ------------------------------------------------------------

    @app.get("/api/v1/query_range")
    def query_range(
        selector: str,
        start: int,
        end: int,
        step: int,
        agg: str = "raw",
        q: Optional[float] = None,
        p: Principal = Depends(principal),
    ) -> dict:
        agg, q = _parse_agg(agg, q)
        effective = scope_selector(p, parse_selector(selector))
        result = stack.tsdb.query_range(effective, start, end, step, agg, q=q)
        series = []
        for key, points in result:
            sid = stack.tsdb.series_id(key)
            meta = stack.tsdb.series_meta(sid) if sid is not None else {}
            series.append(
                {
                    "name": key.name,
                    "labels": key.label_map(),
                    "unit": meta.get("unit", "none"),
                    "points": [[ts, value] for ts, value in points],
                }
            )
        return {"series": series}

    @app.get("/api/v1/events")
    def events(
        selector: str = "",
        start: int = 0,
        end: int = 2**62,
        p: Principal = Depends(principal),
    ) -> dict:
        effective = scope_selector(p, parse_selector(selector))
        rows = stack.metastore.query_events(effective, (max(start, 0) or 1, end))
        return {
            "events": [
                {
                    "event_id": r.event_id,
                    "name": r.name,
                    "attributes": r.attributes,
                    "value": r.value,
                    "timestamp_ms": r.timestamp,
                }
                for r in rows
            ]
        }

    @app.get("/api/v1/summaries")
    def summaries(
        selector: Optional[str] = None,
        start: Optional[int] = None,
        end: Optional[int] = None,
        p: Principal = Depends(principal),
    ) -> dict:
        window = (start, end) if start is not None and end is not None else None
        rows = stack.metastore.query_summaries(selector_text=selector, window=window)
        if p.role is Role.USER:
            rows = [r for r in rows if _selector_within_scope(r.selector, p)]
        return {
            "summaries": [
                {
                    "summary_id": r.summary_id,
                    "selector": r.selector,
                    "window": list(r.window),
                    "stats": r.stats,
                    "produced_at": r.produced_at,
                }
                for r in rows
            ]
        }

    @app.get("/api/v1/anomalies")
    def anomalies(
        selector: str,
        start: int,
        end: int,
        window_points: Optional[int] = Query(default=None),
        threshold_k: Optional[float] = Query(default=None),
        p: Principal = Depends(principal),
    ) -> dict:
        from obstack.analytics import AnomalyParams

        effective = scope_selector(p, parse_selector(selector))
        params = stack.analytics.params
        if window_points is not None or threshold_k is not None:
            params = AnomalyParams(
                window_points=window_points or params.window_points,
                threshold_k=threshold_k or params.threshold_k,
            )
        spans = []
        for sid, key in stack.tsdb.series_matching(effective):
            try:
                found = stack.analytics.detect_anomalies(key, (start, end), params)
            except InsufficientData:
                continue
            for span in found:
                spans.append(
                    {
                        "name": key.name,
                        "labels": key.label_map(),
                        "start": span.start,
                        "end": span.end,
                        "onset": span.onset,
                        "peak_score": span.peak_score,
                    }
                )
        return {"spans": spans}

    # -- alert rules and instances ------------------------------------------

    @app.get("/api/v1/rules")
    def list_rules(p: Principal = Depends(admin_only)) -> dict:
        return {"rules": [r.to_dict() for r in stack.alerts.rules()]}

    default_eval_ms = int(stack.settings.default_eval_interval_seconds * 1000)

    @app.post("/api/v1/rules", status_code=201)
    async def create_rule(request: Request, p: Principal = Depends(admin_only)) -> dict:
        data = await request.json()
        data.setdefault("eval_interval_ms", default_eval_ms)
        rule = AlertRule.from_dict(data)
        stack.alerts.upsert_rule(rule)
        return rule.to_dict()

    @app.get("/api/v1/rules/{rule_id}")
    def get_rule(rule_id: str, p: Principal = Depends(admin_only)):
        rule = stack.alerts.get_rule(rule_id)
        if rule is None:
            return JSONResponse({"error": "NotFound"}, status_code=404)
        return rule.to_dict()

    @app.put("/api/v1/rules/{rule_id}")
    async def update_rule(rule_id: str, request: Request, p: Principal = Depends(admin_only)):
        data = await request.json()
        data["rule_id"] = rule_id
        data.setdefault("eval_interval_ms", default_eval_ms)
        rule = AlertRule.from_dict(data)
        stack.alerts.upsert_rule(rule)
        return rule.to_dict()

    @app.delete("/api/v1/rules/{rule_id}")
    def delete_rule(rule_id: str, p: Principal = Depends(admin_only)):
        if not stack.alerts.delete_rule(rule_id):
            return JSONResponse({"error": "NotFound"}, status_code=404)
        return {"deleted": rule_id}

    @app.get("/api/v1/alerts")
    def list_alerts(p: Principal = Depends(principal)) -> dict:
        instances = stack.alerts.instances()
        if p.role is Role.USER:
            scope = dict(p.scope)
            instances = [
                i for i in instances if all(i.labels.get(k) == v for k, v in scope.items())
            ]
        return {
            "alerts": [
                {
                    "fingerprint": format(i.fingerprint, "016x"),
                    "rule_id": i.rule_id,
                    "state": i.state.value,
                    "since_ms": i.since,
                    "value": i.last_value,
                    "labels": i.labels,
                }
                for i in instances
            ]
        }

    # -- dashboards and entities ---------------------------------------------

    @app.get("/api/v1/dashboards")
    def list_dashboards(p: Principal = Depends(principal)) -> dict:
        docs = stack.metastore.list_space("dashboard")
        return {"dashboards": [docs[k] for k in sorted(docs)]}

    @app.get("/api/v1/dashboards/{template_id}")
    def get_dashboard(template_id: str, p: Principal = Depends(principal)):
        doc = stack.metastore.get("dashboard", template_id)
        if doc is None:
            return JSONResponse({"error": "NotFound"}, status_code=404)
        return doc

    @app.post("/api/v1/dashboards", status_code=201)
    async def put_dashboard(request: Request, p: Principal = Depends(admin_only)) -> dict:
        doc = await request.json()
        validate_template(doc)
        stack.metastore.put("dashboard", doc["template_id"], doc)
        return doc

    @app.delete("/api/v1/dashboards/{template_id}")
    def delete_dashboard(template_id: str, p: Principal = Depends(admin_only)):
        if not stack.metastore.delete("dashboard", template_id):
            return JSONResponse({"error": "NotFound"}, status_code=404)
        return {"deleted": template_id}

    @app.get("/api/v1/entities")
    def list_entities(kind: Optional[str] = None, p: Principal = Depends(principal)) -> dict:
        rows = stack.metastore.list_entities(kind)
        if p.role is Role.USER:
            scope = dict(p.scope)
            rows = [r for r in rows if all(r.attributes.get(k) == v for k, v in scope.items())]
        return {
            "entities": [
                {
                    "entity_id": r.entity_id,
                    "kind": r.kind,
                    "attributes": r.attributes,
                    "created_at": r.created_at,
                    "updated_at": r.updated_at,
                }
                for r in rows
            ]
        }

    @app.post("/api/v1/entities", status_code=201)
    async def upsert_entity(request: Request, p: Principal = Depends(admin_only)) -> dict:
        data = await request.json()
        row = stack.metastore.upsert_entity(
            EntityRecord(
                entity_id=data.get("entity_id", ""),
                kind=data.get("kind", ""),
                attributes=dict(data.get("attributes", {})),
            )
        )
        return {
            "entity_id": row.entity_id,
            "kind": row.kind,
            "attributes": row.attributes,
            "created_at": row.created_at,
            "updated_at": row.updated_at,
        }

    # -- maintenance (admin) ---------------------------------------------------

    @app.post("/api/v1/admin/evaluate_alerts")
    def evaluate_alerts(p: Principal = Depends(admin_only)) -> dict:
        transitions = stack.alerts.evaluate_due()
        return {"transitions": len(transitions)}

    @app.post("/api/v1/admin/distill")
    def distill(p: Principal = Depends(admin_only)) -> dict:
        report = stack.analytics.distill_cycle()
        return {
            "series_distilled": report.series_distilled,
            "summaries_written": report.summaries_written,
            "raw_cleared": report.raw_cleared,
            "rollups_cleared": report.rollups_cleared,
        }

    # -- operational surface -----------------------------------------------------

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/metrics")
    def self_metrics() -> Response:
        samples = stack.registry.samples(stack.clock.now_ms())
        return PlainTextResponse(format_exposition(samples))

    ui_dir = stack.settings.ui_dir or _default_ui_dir()
    if stack.settings.components.get("dashboard", True) and ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _default_ui_dir() -> Optional[str]:
    """Built dashboard assets when running from a source checkout."""
    root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.dirname(
        os.path.abspath(__file__)))))
    candidate = os.path.join(root, "frontend", "dist")
    return candidate if os.path.isdir(candidate) else None


def _parse_agg(agg: str, q: Optional[float]):
    """Accept both agg=quantile&q=0.99 and agg=quantile(0.99)."""
    if agg.startswith("quantile(") and agg.endswith(")"):
        return "quantile", float(agg[len("quantile(") : -1])
    return agg, q


def _selector_within_scope(selector_text: str, principal: Principal) -> bool:
    try:
        matchers = dict(parse_selector(selector_text).matchers)
    except ObstackError:
        return False
    return all(matchers.get(k) == v for k, v in principal.scope)

"""FastAPI application: retrieval, cart recommendation, sheets, and scores.

The catalog and index are loaded once at startup and shared read-only
across requests; the only mutable state is the append-only score store,
whose writes are serialized through a lock.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles

from .. import ohseval, personalize, retrieval
from ..catalog import Cart, Catalog, load_embeddings, load_manifest
from ..errors import DataError
from .schemas import (
    AggregateResponse,
    CartRecommendRequest,
    ItemResponse,
    RecommendRequest,
    RecommendResponse,
    ScoredItem,
    ScoreRecordModel,
    ScoresAccepted,
)

_SHEET_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")


@dataclass
class ServiceConfig:
    """Paths and listen address for one service instance."""

    manifest: Path
    embeddings: Path | None = None
    index: Path | None = None
    sheets_dir: Path | None = None
    scores_path: Path | None = None
    ui_dir: Path | None = None
    host: str = "127.0.0.1"
    port: int = 8000


class _ScoreStore:
    """Append-only JSONL store of validated score records."""

    def __init__(self, path: Path):
        self.path = path
        self._lock = threading.Lock()

    def append(self, record_dict: dict) -> None:
        line = json.dumps(record_dict)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")

    def records_for(self, sheet_id: str) -> list[ohseval.ScoreRecord]:
        if not self.path.exists():
            return []
        records = []
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                if obj.get("sheet_id") == sheet_id:
                    records.append(ohseval.record_from_dict(obj))
        return records


def create_app(config: ServiceConfig) -> FastAPI:
    catalog: Catalog = load_manifest(config.manifest)
    if config.embeddings is not None:
        load_embeddings(config.embeddings, catalog)
    if config.index is not None:
        index = retrieval.load_index(config.index)
    elif config.embeddings is not None:
        index = retrieval.build_index(catalog)
    else:
        raise DataError("service needs an embeddings file or a prebuilt index")
    store = _ScoreStore(config.scores_path) if config.scores_path else None

    app = FastAPI(title="grec", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def _malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.exception_handler(DataError)
    async def _data_error(request: Request, exc: DataError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.get("/health", response_class=PlainTextResponse)
    def health() -> str:
        return "ok"

    @app.get("/items/{item_id}", response_model=ItemResponse)
    def get_item(item_id: str) -> ItemResponse:
        if item_id not in catalog:
            raise HTTPException(status_code=404, detail=f"unknown item {item_id!r}")
        item = catalog.item(item_id)
        return ItemResponse(
            id=item.id,
            image=item.image_ref,
            labels=catalog.label_names(item),
            split=item.split,
            has_embedding=item.embedding is not None,
        )

    @app.post("/recommend", response_model=RecommendResponse)
    def recommend(request: RecommendRequest) -> RecommendResponse:
        if (request.item_id is None) == (request.embedding is None):
            raise HTTPException(
                status_code=400, detail="provide exactly one of item_id or embedding"
            )
        if request.item_id is not None:
            if request.item_id not in index:
                raise HTTPException(
                    status_code=404, detail=f"unknown item {request.item_id!r}"
                )
            query = index.vector(request.item_id)
        else:
            query = request.embedding
        try:
            ranked = retrieval.top_k(query, index, request.k, exclude=set(request.exclude))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return RecommendResponse(results=[ScoredItem(id=i, score=s) for i, s in ranked])

    @app.post("/cart/recommend", response_model=RecommendResponse)
    def cart_recommend(request: CartRecommendRequest) -> RecommendResponse:
        for entry in request.cart.items:
            if entry.id not in catalog:
                raise HTTPException(status_code=404, detail=f"unknown item {entry.id!r}")
        cart = Cart(
            user_id=request.cart.user_id,
            entries=tuple((e.id, e.rating) for e in request.cart.items),
        )
        ranked = personalize.recommend_for_cart(cart, catalog, index, request.k)
        return RecommendResponse(results=[ScoredItem(id=i, score=s) for i, s in ranked])

    def _load_sheet(sheet_id: str) -> ohseval.EvaluationSheet:
        if config.sheets_dir is None or not _SHEET_ID_RE.match(sheet_id):
            raise HTTPException(status_code=404, detail=f"unknown sheet {sheet_id!r}")
        path = Path(config.sheets_dir) / f"{sheet_id}.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"unknown sheet {sheet_id!r}")
        return ohseval.load_sheet(path)

    @app.get("/sheets/{sheet_id}")
    def get_sheet(sheet_id: str) -> dict:
        return ohseval.sheet_to_dict(_load_sheet(sheet_id))

    @app.post("/sheets/{sheet_id}/scores", response_model=ScoresAccepted)
    def post_scores(sheet_id: str, payload: ScoreRecordModel):
        sheet = _load_sheet(sheet_id)
        record = ohseval.record_from_dict(payload.model_dump())
        violations = ohseval.validate_scores(sheet, record)
        if violations:
            return JSONResponse(status_code=422, content={"violations": violations})
        if store is None:
            raise HTTPException(status_code=400, detail="service has no score store")
        normalized = ohseval.ScoreRecord(
            sheet_id=record.sheet_id,
            scorer_id=record.scorer_id,
            entries=tuple(
                ohseval.ScoreEntry(e.query_id, e.system, e.criterion, int(e.score))
                for e in record.entries
            ),
        )
        store.append(ohseval.record_to_dict(normalized))
        return ScoresAccepted(entries=len(record.entries))

    @app.get("/sheets/{sheet_id}/aggregate", response_model=AggregateResponse)
    def aggregate_sheet(sheet_id: str, weights: str | None = None) -> AggregateResponse:
        sheet = _load_sheet(sheet_id)
        parsed_weights = None
        if weights is not None:
            try:
                parsed_weights = {str(k): float(v) for k, v in json.loads(weights).items()}
            except (json.JSONDecodeError, AttributeError, TypeError, ValueError) as exc:
                raise HTTPException(
                    status_code=400, detail=f"weights must be a JSON object: {exc}"
                ) from exc
        records = store.records_for(sheet_id) if store else []
        result = ohseval.aggregate(sheet, records, parsed_weights)
        return AggregateResponse(
            systems=list(result.systems),
            criteria=list(result.criteria),
            cells={s: dict(row) for s, row in result.cells.items()},
            ohs=dict(result.ohs),
            gaps=[list(gap) for gap in result.gaps],
            weights=dict(result.weights),
        )

    if config.ui_dir is not None and Path(config.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app

"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ScoredItem(BaseModel):
    id: str
    score: float


class RecommendRequest(BaseModel):
    """Query by indexed item id, or by a raw embedding vector."""

    item_id: str | None = None
    embedding: list[float] | None = None
    k: int = Field(default=8, ge=1)
    exclude: list[str] = Field(default_factory=list)


class RecommendResponse(BaseModel):
    results: list[ScoredItem]


class CartEntryModel(BaseModel):
    id: str
    rating: float = Field(ge=1, le=5)


class CartModel(BaseModel):
    user_id: str
    items: list[CartEntryModel] = Field(min_length=1)


class CartRecommendRequest(BaseModel):
    cart: CartModel
    k: int = Field(default=8, ge=1)


class ItemResponse(BaseModel):
    id: str
    image: str
    labels: list[str]
    split: str | None = None
    has_embedding: bool


class ScoreEntryModel(BaseModel):
    query_id: str
    system: str
    criterion: str
    # Deliberately loose: range and integrality violations must surface as a
    # 422 violation list from the score validator, not a parse failure.
    score: float


class ScoreRecordModel(BaseModel):
    sheet_id: str
    scorer_id: str
    entries: list[ScoreEntryModel]


class ScoresAccepted(BaseModel):
    status: str = "accepted"
    entries: int


class ViolationsResponse(BaseModel):
    violations: list[str]


class AggregateResponse(BaseModel):
    systems: list[str]
    criteria: list[str]
    cells: dict[str, dict[str, float | None]]
    ohs: dict[str, float | None]
    gaps: list[list[str]]
    weights: dict[str, float]


class HealthResponse(BaseModel):
    status: str

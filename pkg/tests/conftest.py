from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from grec.catalog import Catalog, CatalogItem, LabelVocabulary


def make_catalog(vectors: dict[str, list[float]], labels: tuple[str, ...] = ("x",)) -> Catalog:
    """Catalog with every item carrying label 0 and the given embedding."""
    vocabulary = LabelVocabulary(labels, tuple(1.0 for _ in labels))
    items = [
        CatalogItem(
            id=item_id,
            image_ref=f"images/{item_id}.png",
            labels=frozenset({0}),
            embedding=np.asarray(vec, dtype=np.float32),
        )
        for item_id, vec in vectors.items()
    ]
    return Catalog(vocabulary=vocabulary, items=items)


def write_manifest(path: Path, rows: list[dict], frequencies: dict | None = None) -> Path:
    lines = [json.dumps(row) for row in rows]
    if frequencies is not None:
        lines.append(json.dumps({"__frequencies__": frequencies}))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def three_item_manifest(tmp_path: Path) -> Path:
    rows = [
        {"id": "A", "image": "a.png", "labels": ["shirt"]},
        {"id": "B", "image": "b.png", "labels": ["shirt", "red"]},
        {"id": "C", "image": "c.png", "labels": ["red"]},
    ]
    return write_manifest(tmp_path / "manifest.jsonl", rows)

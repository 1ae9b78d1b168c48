"""Item catalog: label vocabulary, JSONL manifests, embedding files, carts.

The catalog is the bridge that lets any external model feed the system:
items are declared in a JSON Lines manifest, and their feature vectors are
ingested from a binary ``EMB1`` file (or a CSV fallback). Catalogs are
immutable after ingestion and safe to share across threads.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

EMB_MAGIC = b"EMB1"
IDX_MAGIC = b"IDX1"

_SPLITS = ("train", "val", "test")
FREQUENCY_OVERRIDE_KEY = "__frequencies__"


@dataclass(frozen=True)
class LabelVocabulary:
    """Ordered label set with per-label relative frequencies in (0, 1]."""

    labels: tuple[str, ...]
    frequencies: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.labels:
            raise ValueError("vocabulary must contain at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("vocabulary labels must be unique")
        if len(self.frequencies) != len(self.labels):
            raise ValueError("labels and frequencies must have equal length")
        for name, f in zip(self.labels, self.frequencies):
            if not (0.0 < f <= 1.0):
                raise ValueError(f"frequency of label {name!r} must be in (0, 1], got {f}")

    def __len__(self) -> int:
        return len(self.labels)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown label {label!r}") from None


@dataclass
class CatalogItem:
    """One shop item: id, image path, label indices, optional embedding."""

    id: str
    image_ref: str
    labels: frozenset[int]
    split: str | None = None
    embedding: np.ndarray | None = None


@dataclass
class Catalog:
    """Items plus their vocabulary, in manifest order."""

    vocabulary: LabelVocabulary
    items: list[CatalogItem]
    _by_id: dict[str, CatalogItem] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._by_id = {}
        n = len(self.vocabulary)
        for item in self.items:
            if item.id in self._by_id:
                raise ValueError(f"duplicate item id {item.id!r}")
            if any(i < 0 or i >= n for i in item.labels):
                raise ValueError(f"item {item.id!r} has a label index out of range")
            self._by_id[item.id] = item

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def item(self, item_id: str) -> CatalogItem:
        try:
            return self._by_id[item_id]
        except KeyError:
            raise DataError(f"unknown item id {item_id!r}") from None

    def label_names(self, item: CatalogItem) -> list[str]:
        return [self.vocabulary.labels[i] for i in sorted(item.labels)]

    @property
    def dimension(self) -> int | None:
        for item in self.items:
            if item.embedding is not None:
                return int(item.embedding.shape[0])
        return None


@dataclass(frozen=True)
class Cart:
    """A user's rated purchases. Ratings follow the 1-5 review scale."""

    user_id: str
    entries: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("cart must contain at least one entry")
        for item_id, rating in self.entries:
            if not (1.0 <= float(rating) <= 5.0):
                raise ValueError(
                    f"rating for {item_id!r} must be in [1, 5], got {rating}"
                )

    @property
    def item_ids(self) -> tuple[str, ...]:
        return tuple(item_id for item_id, _ in self.entries)


def load_manifest(path: str | Path) -> Catalog:
    """Parse a JSON Lines manifest into a catalog with computed frequencies.

    Each line is ``{"id", "image", "labels", "split"?}``. A trailing
    ``{"__frequencies__": {...}}`` object overrides the computed per-label
    relative frequencies.
    """
    path = Path(path)
    raw_items: list[tuple[str, str, list[str], str | None]] = []
    label_order: list[str] = []
    label_pos: dict[str, int] = {}
    seen_ids: set[str] = set()
    override: dict[str, float] | None = None

    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc

    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{line_no}: malformed manifest line: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise DataError(f"{path}:{line_no}: manifest line must be a JSON object")

        if FREQUENCY_OVERRIDE_KEY in obj:
            if override is not None:
                raise DataError(f"{path}:{line_no}: multiple frequency override lines")
            block = obj[FREQUENCY_OVERRIDE_KEY]
            if not isinstance(block, dict):
                raise DataError(f"{path}:{line_no}: frequency override must be an object")
            override = {str(k): float(v) for k, v in block.items()}
            continue

        try:
            item_id = obj["id"]
            image = obj["image"]
            labels = obj["labels"]
        except KeyError as exc:
            raise DataError(f"{path}:{line_no}: missing required key {exc.args[0]!r}") from exc
        if not isinstance(item_id, str) or not isinstance(image, str):
            raise DataError(f"{path}:{line_no}: 'id' and 'image' must be strings")
        if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
            raise DataError(f"{path}:{line_no}: 'labels' must be a list of strings")
        split = obj.get("split")
        if split is not None and split not in _SPLITS:
            raise DataError(f"{path}:{line_no}: split must be one of {_SPLITS}")
        if item_id in seen_ids:
            raise DataError(f"{path}:{line_no}: duplicate item id {item_id!r}")
        seen_ids.add(item_id)

        for name in labels:
            if name not in label_pos:
                label_pos[name] = len(label_order)
                label_order.append(name)
        raw_items.append((item_id, image, labels, split))

    if not raw_items:
        raise DataError(f"empty catalog: no items in {path}")

    counts = [0] * len(label_order)
    items: list[CatalogItem] = []
    for item_id, image, labels, split in raw_items:
        indices = frozenset(label_pos[name] for name in labels)
        for i in indices:
            counts[i] += 1
        items.append(CatalogItem(id=item_id, image_ref=image, labels=indices, split=split))

    total = len(raw_items)
    frequencies = [c / total for c in counts]
    if override is not None:
        for name, value in override.items():
            if name not in label_pos:
                raise DataError(f"frequency override references unknown label {name!r}")
            if not (0.0 < value <= 1.0):
                raise DataError(f"frequency override for {name!r} must be in (0, 1], got {value}")
            frequencies[label_pos[name]] = value

    vocabulary = LabelVocabulary(tuple(label_order), tuple(frequencies))
    return Catalog(vocabulary=vocabulary, items=items)


def save_manifest(catalog: Catalog, path: str | Path) -> None:
    """Write the catalog back to JSONL, preserving frequencies exactly."""
    path = Path(path)
    lines = []
    for item in catalog.items:
        obj: dict = {
            "id": item.id,
            "image": item.image_ref,
            "labels": catalog.label_names(item),
        }
        if item.split is not None:
            obj["split"] = item.split
        lines.append(json.dumps(obj))
    freqs = dict(zip(catalog.vocabulary.labels, catalog.vocabulary.frequencies))
    lines.append(json.dumps({FREQUENCY_OVERRIDE_KEY: freqs}))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# --- binary vector files -------------------------------------------------
#
# Layout (shared by EMB1 embedding files and IDX1 index files):
#   magic (4 bytes) | u32 LE dimension D | u32 LE count N |
#   N x (u32 LE id byte length, UTF-8 id, D x f32 LE values)


def write_vector_records(
    path: str | Path, magic: bytes, ids: list[str], matrix: np.ndarray
) -> None:
    if len(magic) != 4:
        raise ValueError("magic must be 4 bytes")
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError("matrix must be N x D with one row per id")
    n, d = matrix.shape
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", d, n))
        for row_id, row in zip(ids, matrix):
            encoded = row_id.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(row.tobytes())


def read_vector_records(path: str | Path, magic: bytes) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    def take(offset: int, count: int) -> bytes:
        if offset + count > len(data):
            raise DataError(f"truncated file {path}: expected {count} bytes at offset {offset}")
        return data[offset : offset + count]

    found = take(0, 4)
    if found != magic:
        raise DataError(
            f"{path}: bad magic {found!r}, expected {magic.decode('ascii')!r}"
        )
    d, n = struct.unpack("<II", take(4, 8))
    offset = 12
    ids: list[str] = []
    rows = np.empty((n, d), dtype="<f4")
    for i in range(n):
        (id_len,) = struct.unpack("<I", take(offset, 4))
        offset += 4
        try:
            row_id = take(offset, id_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"{path}: record {i} has a non-UTF-8 id") from exc
        offset += id_len
        vec = np.frombuffer(take(offset, 4 * d), dtype="<f4")
        offset += 4 * d
        ids.append(row_id)
        rows[i] = vec
    if offset != len(data):
        raise DataError(f"{path}: {len(data) - offset} trailing bytes after {n} records")
    return ids, rows


def _load_embeddings_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty embedding CSV") from None
        if len(header) != 2 or header[0] != "id" or not header[1].startswith("dim="):
            raise DataError(f"{path}: CSV header must be 'id,dim=D'")
        try:
            d = int(header[1].split("=", 1)[1])
        except ValueError:
            raise DataError(f"{path}: bad dimension in CSV header {header[1]!r}") from None
        if d <= 0:
            raise DataError(f"{path}: dimension must be positive, got {d}")
        ids: list[str] = []
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise DataError(
                    f"{path}:{line_no}: dimension mismatch: {len(row) - 1} values, expected {d}"
                )
            try:
                values = [float(x) for x in row[1:]]
            except ValueError:
                raise DataError(f"{path}:{line_no}: non-numeric embedding value") from None
            ids.append(row[0])
            rows.append(values)
    matrix = np.asarray(rows, dtype="<f4").reshape(len(ids), d)
    return ids, matrix


def load_embeddings(
    path: str | Path, catalog: Catalog, *, on_unknown: str = "fail"
) -> Catalog:
    """Attach vectors from an EMB1 (or CSV) file to catalog items.

    ``on_unknown`` controls records whose id is not in the catalog:
    ``"fail"`` (default) raises, ``"skip"`` ignores them.
    """
    if on_unknown not in ("fail", "skip"):
        raise ValueError("on_unknown must be 'fail' or 'skip'")
    path = Path(path)
    try:
        with path.open("rb") as fh:
            head = fh.read(4)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    if head == EMB_MAGIC:
        ids, matrix = read_vector_records(path, EMB_MAGIC)
    elif head == IDX_MAGIC:
        raise DataError(f"{path} is an IDX1 index file, not an EMB1 embedding file")
    else:
        ids, matrix = _load_embeddings_csv(path)

    if not np.all(np.isfinite(matrix)):
        raise DataError(f"{path}: embeddings contain non-finite values")

    d = matrix.shape[1]
    existing = catalog.dimension
    if existing is not None and existing != d:
        raise DataError(
            f"dimension mismatch: catalog has {existing}-dim embeddings, file has {d}"
        )
    seen: set[str] = set()
    for row_id, row in zip(ids, matrix):
        if row_id in seen:
            raise DataError(f"{path}: duplicate embedding record for id {row_id!r}")
        seen.add(row_id)
        if row_id not in catalog:
            if on_unknown == "fail":
                raise DataError(f"{path}: embedding record for unknown item {row_id!r}")
            continue
        catalog.item(row_id).embedding = row.copy()
    return catalog


def write_embeddings(catalog: Catalog, path: str | Path) -> None:
    """Write all item embeddings as an EMB1 file, in catalog order."""
    ids: list[str] = []
    rows: list[np.ndarray] = []
    d: int | None = None
    for item in catalog.items:
        if item.embedding is None:
            raise DataError(f"item {item.id!r} has no embedding")
        vec = np.asarray(item.embedding, dtype="<f4").ravel()
        if d is None:
            d = vec.shape[0]
        elif vec.shape[0] != d:
            raise DataError(
                f"item {item.id!r} has a {vec.shape[0]}-dim embedding, expected {d}"
            )
        ids.append(item.id)
        rows.append(vec)
    matrix = np.vstack(rows) if rows else np.empty((0, 0), dtype="<f4")
    write_vector_records(path, EMB_MAGIC, ids, matrix)


def load_cart(path: str | Path) -> Cart:
    """Load ``{"user_id", "items": [{"id", "rating"}]}`` from a JSON file."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read cart {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed cart JSON: {exc.msg}") from exc
    return cart_from_dict(obj)


def cart_from_dict(obj: dict) -> Cart:
    if not isinstance(obj, dict) or "user_id" not in obj or "items" not in obj:
        raise DataError("cart must be an object with 'user_id' and 'items'")
    entries = []
    for entry in obj["items"]:
        try:
            entries.append((str(entry["id"]), float(entry["rating"])))
        except (TypeError, KeyError, ValueError):
            raise DataError(f"bad cart entry {entry!r}: need 'id' and numeric 'rating'") from None
    try:
        return Cart(user_id=str(obj["user_id"]), entries=tuple(entries))
    except ValueError as exc:
        raise DataError(str(exc)) from exc

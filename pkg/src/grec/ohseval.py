"""Objective-guided human scoring of recommender systems.

Human scorers rate each system's top-10 results per query on a set of
weighted criteria (0-10 hit scores). Scores become percentages, criterion
percentages combine into one weighted objective-guided human score (OHS)
per system, and systems render side by side with best/worst marks per row.

Everything here is pure over immutable values; only the append-only score
store in the service layer mutates anything.
"""

from __future__ import annotations

import json
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError

MAX_RESULTS = 10
SCORE_MIN = 0
SCORE_MAX = 10
_DOMAINS = ("shop", "street")
OHS_ROW = "OHS"


@dataclass(frozen=True)
class Criterion:
    name: str
    weight: float
    description: str = ""

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("criterion name must be nonempty")
        if self.weight < 0:
            raise ValueError(f"criterion {self.name!r} weight must be nonnegative")


# Default criteria for fashion recommendation sheets. Weights start uniform;
# evaluators retune them to the goal of the system under test. Variety works
# against the other criteria by design: novel results score high on it and
# low elsewhere.
DEFAULT_CRITERIA: tuple[Criterion, ...] = (
    Criterion("Category", 1.0, "Results in the query's main category (top, bottom, footwear, jewelry, ...)."),
    Criterion("Subtype", 1.0, "Results matching the finer type within the category (boots vs. heels vs. slippers)."),
    Criterion("Fabric/Texture", 1.0, "Results sharing the dominant fabric or surface look (denim, leather, shiny, smooth)."),
    Criterion("Color", 1.0, "Results sharing the query's dominant color."),
    Criterion("Variety", 1.0, "Results bringing something new: a different category, subtype, or color."),
    Criterion("Details", 1.0, "Results keeping fine details such as necklines, zippers, pockets, or prints."),
    Criterion("Shape Difference", 1.0, "Results breaking from the query's outline: other angles, perspectives, rotations, or flips."),
)


@dataclass(frozen=True)
class SheetQuery:
    query_id: str
    image: str
    domain: str  # "shop" | "street"
    results: Mapping[str, tuple[str, ...]]  # system -> top-k item ids

    def __post_init__(self) -> None:
        if self.domain not in _DOMAINS:
            raise ValueError(f"query {self.query_id!r}: domain must be one of {_DOMAINS}")
        for system, ids in self.results.items():
            if len(ids) > MAX_RESULTS:
                raise ValueError(
                    f"query {self.query_id!r}: system {system!r} has more than "
                    f"{MAX_RESULTS} results"
                )


@dataclass(frozen=True)
class EvaluationSheet:
    sheet_id: str
    criteria: tuple[Criterion, ...]
    systems: tuple[str, ...]
    queries: tuple[SheetQuery, ...]

    def __post_init__(self) -> None:
        names = [c.name for c in self.criteria]
        if not names or len(set(names)) != len(names):
            raise ValueError("criteria must be nonempty with unique names")
        if not any(c.weight > 0 for c in self.criteria):
            raise ValueError("at least one criterion weight must be positive")
        if len(set(self.systems)) != len(self.systems) or not self.systems:
            raise ValueError("systems must be nonempty and unique")
        qids = [q.query_id for q in self.queries]
        if len(set(qids)) != len(qids):
            raise ValueError("query ids must be unique")
        for q in self.queries:
            missing = [s for s in self.systems if s not in q.results]
            if missing:
                raise ValueError(
                    f"query {q.query_id!r} lacks results for systems {missing}"
                )

    def criterion_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.criteria)

    def default_weights(self) -> dict[str, float]:
        return {c.name: c.weight for c in self.criteria}


@dataclass(frozen=True)
class ScoreEntry:
    query_id: str
    system: str
    criterion: str
    score: int  # integral 0-10 once validated


@dataclass(frozen=True)
class ScoreRecord:
    sheet_id: str
    scorer_id: str
    entries: tuple[ScoreEntry, ...]


ResultSource = Mapping[str, Sequence[str]] | Callable[[str], Sequence[str]]


def make_sheet(
    sheet_id: str,
    queries: Sequence[tuple[str, str, str]],
    systems: Mapping[str, ResultSource],
    k: int = MAX_RESULTS,
    criteria: Sequence[Criterion] = DEFAULT_CRITERIA,
) -> EvaluationSheet:
    """Build a sheet from (query_id, image, domain) triples and result sources.

    Each system maps query ids to ranked result lists, either as a mapping
    or as a callable; lists longer than k are truncated. A missing result
    set is an error naming the system and query.
    """
    if not (1 <= k <= MAX_RESULTS):
        raise ValueError(f"k must be in [1, {MAX_RESULTS}]")
    sheet_queries = []
    for query_id, image, domain in queries:
        results: dict[str, tuple[str, ...]] = {}
        for system, source in systems.items():
            if callable(source):
                ranked = source(query_id)
            else:
                ranked = source.get(query_id)
            if ranked is None:
                raise DataError(
                    f"system {system!r} has no results for query {query_id!r}"
                )
            results[system] = tuple(ranked[:k])
        sheet_queries.append(
            SheetQuery(query_id=query_id, image=image, domain=domain, results=results)
        )
    try:
        return EvaluationSheet(
            sheet_id=sheet_id,
            criteria=tuple(criteria),
            systems=tuple(systems.keys()),
            queries=tuple(sheet_queries),
        )
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def sheet_to_dict(sheet: EvaluationSheet) -> dict:
    return {
        "sheet_id": sheet.sheet_id,
        "criteria": [
            {"name": c.name, "weight": c.weight, "description": c.description}
            for c in sheet.criteria
        ],
        "systems": list(sheet.systems),
        "queries": [
            {
                "query_id": q.query_id,
                "image": q.image,
                "domain": q.domain,
                "results": {s: list(ids) for s, ids in q.results.items()},
            }
            for q in sheet.queries
        ],
    }


def sheet_from_dict(obj: dict) -> EvaluationSheet:
    try:
        criteria = tuple(
            Criterion(c["name"], float(c["weight"]), str(c.get("description", "")))
            for c in obj["criteria"]
        )
        queries = tuple(
            SheetQuery(
                query_id=str(q["query_id"]),
                image=str(q["image"]),
                domain=str(q["domain"]),
                results={s: tuple(ids) for s, ids in q["results"].items()},
            )
            for q in obj["queries"]
        )
        return EvaluationSheet(
            sheet_id=str(obj["sheet_id"]),
            criteria=criteria,
            systems=tuple(obj["systems"]),
            queries=queries,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad evaluation sheet: {exc}") from exc


def save_sheet(sheet: EvaluationSheet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(sheet_to_dict(sheet), indent=2), encoding="utf-8")


def load_sheet(path: str | Path) -> EvaluationSheet:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read sheet {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed sheet JSON: {exc.msg}") from exc
    return sheet_from_dict(obj)


def record_to_dict(record: ScoreRecord) -> dict:
    return {
        "sheet_id": record.sheet_id,
        "scorer_id": record.scorer_id,
        "entries": [
            {
                "query_id": e.query_id,
                "system": e.system,
                "criterion": e.criterion,
                "score": e.score,
            }
            for e in record.entries
        ],
    }


def record_from_dict(obj: dict) -> ScoreRecord:
    """Lenient construction; run validate_scores before trusting the record."""
    try:
        entries = tuple(
            ScoreEntry(
                query_id=str(e["query_id"]),
                system=str(e["system"]),
                criterion=str(e["criterion"]),
                score=e["score"],
            )
            for e in obj["entries"]
        )
        return ScoreRecord(
            sheet_id=str(obj["sheet_id"]),
            scorer_id=str(obj["scorer_id"]),
            entries=entries,
        )
    except (KeyError, TypeError) as exc:
        raise DataError(f"bad score record: {exc}") from exc


def validate_scores(sheet: EvaluationSheet, record: ScoreRecord) -> list[str]:
    """All contract violations in a score record; empty means valid.

    Checks sheet reference, known (query, system, criterion) triples,
    integral scores in [0, 10], and per-scorer uniqueness.
    """
    violations: list[str] = []
    if record.sheet_id != sheet.sheet_id:
        violations.append(
            f"sheet mismatch: record is for {record.sheet_id!r}, sheet is {sheet.sheet_id!r}"
        )
    if not record.entries:
        violations.append("record has no entries")
    known_queries = {q.query_id for q in sheet.queries}
    known_criteria = set(sheet.criterion_names())
    seen: set[tuple[str, str, str]] = set()
    for e in record.entries:
        where = f"({e.query_id}, {e.system}, {e.criterion})"
        if e.query_id not in known_queries:
            violations.append(f"{where}: unknown query {e.query_id!r}")
        if e.system not in sheet.systems:
            violations.append(f"{where}: unknown system {e.system!r}")
        if e.criterion not in known_criteria:
            violations.append(f"{where}: unknown criterion {e.criterion!r}")
        score = e.score
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            violations.append(f"{where}: score must be a number, got {score!r}")
        elif isinstance(score, float) and not score.is_integer():
            violations.append(f"{where}: non-integer score {score!r}")
        elif not (SCORE_MIN <= score <= SCORE_MAX):
            violations.append(
                f"{where}: score {score} out of range [{SCORE_MIN}, {SCORE_MAX}]"
            )
        key = (e.query_id, e.system, e.criterion)
        if key in seen:
            violations.append(f"{where}: duplicate entry")
        seen.add(key)
    return violations


def to_percentages(scores_by_scorer: Mapping[str, Sequence[float]]) -> float:
    """Scores (0-10) to a percentage: per-scorer mean first, then the mean
    over scorers, each scorer weighted equally regardless of query count."""
    if not scores_by_scorer:
        raise ValueError("no scores to convert")
    scorer_means = []
    for scorer, scores in scores_by_scorer.items():
        if not scores:
            raise ValueError(f"scorer {scorer!r} has no scores")
        scorer_means.append(sum(scores) / len(scores))
    return (sum(scorer_means) / len(scorer_means)) * 10.0


def ohs_score(percentages: Mapping[str, float], weights: Mapping[str, float]) -> float:
    """Weighted mean of per-criterion percentages: sum(w_c P_c) / sum(w_c)."""
    missing = [name for name in percentages if name not in weights]
    if missing:
        raise DataError(f"missing criterion weight for {missing}")
    if any(weights[name] < 0 for name in percentages):
        raise ValueError("criterion weights must be nonnegative")
    total = sum(weights[name] for name in percentages)
    if total <= 0:
        raise ValueError("criterion weights must not sum to zero")
    return sum(weights[name] * value for name, value in percentages.items()) / total


@dataclass(frozen=True)
class AggregateResult:
    systems: tuple[str, ...]
    criteria: tuple[str, ...]
    # cells[system][criterion] is a percentage, or None where no scores exist
    cells: Mapping[str, Mapping[str, float | None]]
    ohs: Mapping[str, float | None]
    gaps: tuple[tuple[str, str], ...]
    weights: Mapping[str, float]


def aggregate(
    sheet: EvaluationSheet,
    records: Sequence[ScoreRecord],
    weights: Mapping[str, float] | None = None,
) -> AggregateResult:
    """Per-criterion percentages and the final weighted score per system.

    Cells without any validated score are surfaced as gaps (None), never
    imputed; a system's OHS then reweights over its present criteria only.
    """
    if weights is None:
        weights = sheet.default_weights()
    missing = [name for name in sheet.criterion_names() if name not in weights]
    if missing:
        raise DataError(f"missing criterion weight for {missing}")
    if sum(weights[name] for name in sheet.criterion_names()) <= 0:
        raise DataError("criterion weights must not sum to zero")

    for record in records:
        violations = validate_scores(sheet, record)
        if violations:
            raise DataError(
                f"invalid score record from {record.scorer_id!r}: " + "; ".join(violations)
            )

    by_cell: dict[tuple[str, str], dict[str, list[float]]] = {}
    for record in records:
        for e in record.entries:
            cell = by_cell.setdefault((e.system, e.criterion), {})
            cell.setdefault(record.scorer_id, []).append(float(e.score))

    criteria = sheet.criterion_names()
    cells: dict[str, dict[str, float | None]] = {}
    ohs: dict[str, float | None] = {}
    gaps: list[tuple[str, str]] = []
    for system in sheet.systems:
        row: dict[str, float | None] = {}
        for name in criteria:
            scores = by_cell.get((system, name))
            if scores:
                row[name] = to_percentages(scores)
            else:
                row[name] = None
                gaps.append((system, name))
        cells[system] = row
        present = {name: value for name, value in row.items() if value is not None}
        if present and sum(weights[name] for name in present) > 0:
            ohs[system] = ohs_score(present, weights)
        else:
            ohs[system] = None
    return AggregateResult(
        systems=sheet.systems,
        criteria=criteria,
        cells=cells,
        ohs=ohs,
        gaps=tuple(gaps),
        weights=dict(weights),
    )


def aggregate_from_percentages(
    systems: Sequence[str],
    criteria: Sequence[str],
    cells: Mapping[str, Mapping[str, float]],
    weights: Mapping[str, float],
) -> AggregateResult:
    """Build an AggregateResult from already-computed criterion percentages."""
    full_cells: dict[str, dict[str, float | None]] = {}
    ohs: dict[str, float | None] = {}
    gaps: list[tuple[str, str]] = []
    for system in systems:
        row: dict[str, float | None] = {}
        for name in criteria:
            value = cells.get(system, {}).get(name)
            row[name] = value
            if value is None:
                gaps.append((system, name))
        full_cells[system] = row
        present = {name: v for name, v in row.items() if v is not None}
        ohs[system] = ohs_score(present, weights) if present else None
    return AggregateResult(
        systems=tuple(systems),
        criteria=tuple(criteria),
        cells=full_cells,
        ohs=ohs,
        gaps=tuple(gaps),
        weights=dict(weights),
    )


@dataclass(frozen=True)
class RowMarks:
    best: str | None = None
    worst: str | None = None
    tied_best: bool = False
    tied_worst: bool = False


@dataclass(frozen=True)
class ComparisonTable:
    systems: tuple[str, ...]
    rows: tuple[str, ...]  # criterion names plus the final OHS row
    values: Mapping[str, Mapping[str, float | None]]  # row -> system -> value
    marks: Mapping[str, RowMarks]


def render_comparison(result: AggregateResult) -> ComparisonTable:
    """Mark each row's max as best and min as worst.

    Ties go to the earlier column and set the tie flag; a single-system
    table carries no marks.
    """
    rows = result.criteria + (OHS_ROW,)
    values: dict[str, dict[str, float | None]] = {}
    marks: dict[str, RowMarks] = {}
    for row_name in rows:
        if row_name == OHS_ROW:
            row = {s: result.ohs[s] for s in result.systems}
        else:
            row = {s: result.cells[s][row_name] for s in result.systems}
        values[row_name] = row
        present = [(s, v) for s, v in row.items() if v is not None]
        if len(result.systems) < 2 or not present:
            marks[row_name] = RowMarks()
            continue
        best_value = max(v for _, v in present)
        worst_value = min(v for _, v in present)
        best = next(s for s, v in present if v == best_value)
        worst = next(s for s, v in present if v == worst_value)
        marks[row_name] = RowMarks(
            best=best,
            worst=worst,
            tied_best=sum(1 for _, v in present if v == best_value) > 1,
            tied_worst=sum(1 for _, v in present if v == worst_value) > 1,
        )
    return ComparisonTable(
        systems=result.systems, rows=rows, values=values, marks=marks
    )


def _format_cell(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def table_to_text(table: ComparisonTable) -> str:
    """Aligned UTF-8 table with *best* / *worst* affixes."""
    header = ["criterion", *table.systems]
    body: list[list[str]] = []
    for row_name in table.rows:
        cells = [row_name]
        mark = table.marks[row_name]
        for system in table.systems:
            text = _format_cell(table.values[row_name][system])
            if system == mark.best:
                text += " *best*"
            if system == mark.worst:
                text += " *worst*"
            cells.append(text)
        body.append(cells)
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = []
    for row in [header, *body]:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def table_to_csv(table: ComparisonTable) -> str:
    """CSV with one row per criterion and best/worst system columns."""
    lines = [",".join(["criterion", *table.systems, "best", "worst"])]
    for row_name in table.rows:
        mark = table.marks[row_name]
        best = (mark.best or "") + (" (tied)" if mark.tied_best else "")
        worst = (mark.worst or "") + (" (tied)" if mark.tied_worst else "")
        cells = [_format_cell(table.values[row_name][system]) for system in table.systems]
        name = '"' + row_name.replace('"', '""') + '"' if "," in row_name else row_name
        lines.append(",".join([name, *cells, best, worst]))
    return "\n".join(lines) + "\n"

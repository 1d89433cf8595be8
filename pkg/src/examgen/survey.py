"""Descriptive statistics for the 14-item, 5-point evaluation survey.

Responses are grouped by programming experience (under 1 year, 1-2,
2-3, 3+); an All row pools the raw responses rather than averaging the
group means. Cells render as "M.MM (S.SS)" with half-up rounding.

The standard deviation uses the sample divisor (n-1) by default; the
population divisor is available behind a flag since aggregate tables
cannot reveal which convention produced them.
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum
ITEM_COUNT = 14
SCALE_MIN, SCALE_MAX = 1, 5


class SurveyError(ValueError):
    pass


class EmptyInput(SurveyError):
    pass


class MalformedRow(SurveyError):
    pass


class ExperienceGroup(Enum):
    UNDER1 = "lt1"
    ONE_TO_TWO = "1-2"
    TWO_TO_THREE = "2-3"
    THREE_PLUS = "gt3"
    ALL = "all"  # computed aggregate; never a valid input label


INPUT_GROUPS = (
    ExperienceGroup.UNDER1,
    ExperienceGroup.ONE_TO_TWO,
    ExperienceGroup.TWO_TO_THREE,
    ExperienceGroup.THREE_PLUS,
)

GROUP_ORDER = INPUT_GROUPS + (ExperienceGroup.ALL,)

GROUP_LABELS = {
    ExperienceGroup.UNDER1: "<1 year",
    ExperienceGroup.ONE_TO_TWO: "1-2 years",
    ExperienceGroup.TWO_TO_THREE: "2-3 years",
    ExperienceGroup.THREE_PLUS: "3+ years",
    ExperienceGroup.ALL: "All",
}


@dataclass(frozen=True)
class LikertResponse:
    participant_id: str
    group: ExperienceGroup
    answers: tuple[int, ...]


@dataclass(frozen=True)
class StatsCell:
    mean: float
    sd: float
    n: int


@dataclass
class StatsTable:
    cells: dict[tuple[ExperienceGroup, int], StatsCell] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


def _check_row(row: LikertResponse) -> None:
    if row.group not in INPUT_GROUPS:
        raise MalformedRow(
            f"participant {row.participant_id}: group must be one of "
            f"{[g.value for g in INPUT_GROUPS]}, got {row.group.value}")
    if len(row.answers) != ITEM_COUNT:
        raise MalformedRow(
            f"participant {row.participant_id}: expected {ITEM_COUNT} answers, "
            f"got {len(row.answers)}")
    for i, value in enumerate(row.answers, start=1):
        if not (SCALE_MIN <= value <= SCALE_MAX):
            raise MalformedRow(
                f"participant {row.participant_id}: answer #{i} out of range: {value}")


def _cell(values: list[int], sample_sd: bool) -> StatsCell:
    n = len(values)
    mean = statistics.fmean(values)
    if n >= 2:
        sd = statistics.stdev(values) if sample_sd else statistics.pstdev(values)
    else:
        sd = 0.0
    return StatsCell(mean=mean, sd=sd, n=n)


def compute_stats(responses: list[LikertResponse], sample_sd: bool = True) -> StatsTable:
    """Per-group and pooled mean/SD for all 14 items.

    Raises EmptyInput on no rows and MalformedRow on bad answer counts,
    out-of-range values or an aggregate group label used as input.
    """
    if not responses:
        raise EmptyInput("no survey responses")
    for row in responses:
        _check_row(row)

    table = StatsTable()
    by_group: dict[ExperienceGroup, list[LikertResponse]] = {}
    for row in responses:
        by_group.setdefault(row.group, []).append(row)

    for item in range(1, ITEM_COUNT + 1):
        for group, rows in by_group.items():
            values = [row.answers[item - 1] for row in rows]
            cell = _cell(values, sample_sd)
            if cell.n == 1:
                table.notes.append(
                    f"group {group.value} item #{item}: n=1, sd reported as 0")
            table.cells[(group, item)] = cell
        pooled = [row.answers[item - 1] for row in responses]
        table.cells[(ExperienceGroup.ALL, item)] = _cell(pooled, sample_sd)
    return table


def format_cell_value(mean: float, sd: float) -> str:
    """Render one cell as "M.MM (S.SS)", half-up to two decimals."""
    def round2(value: float) -> str:
        return str(Decimal(str(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))

    return f"{round2(mean)} ({round2(sd)})"


def format_table(table: StatsTable, fmt: str = "text") -> str:
    """Render the stats table as aligned plain text or CSV.

    Rows follow the fixed group order (four experience groups, then
    All); columns are items #1..#14. Groups absent from the input show
    a dash.
    """
    header = ["Group"] + [f"#{i}" for i in range(1, ITEM_COUNT + 1)]
    rows: list[list[str]] = [header]
    for group in GROUP_ORDER:
        row = [GROUP_LABELS[group]]
        for item in range(1, ITEM_COUNT + 1):
            cell = table.cells.get((group, item))
            row.append(format_cell_value(cell.mean, cell.sd) if cell else "-")
        rows.append(row)

    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerows(rows)
        return buf.getvalue()
    if fmt != "text":
        raise ValueError(f"unknown table format: {fmt}")

    widths = [max(len(row[col]) for row in rows) for col in range(len(header))]
    lines = [
        "  ".join(cell.ljust(widths[col]) for col, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    return "\n".join(lines) + "\n"


def parse_responses_csv(content: str) -> list[LikertResponse]:
    """Read the response file: header participant_id,group,q1..q14."""
    reader = csv.DictReader(io.StringIO(content))
    expected = ["participant_id", "group"] + [f"q{i}" for i in range(1, ITEM_COUNT + 1)]
    if reader.fieldnames is None:
        raise EmptyInput("CSV input is empty")
    missing = [col for col in expected if col not in reader.fieldnames]
    if missing:
        raise MalformedRow(f"CSV header missing columns: {', '.join(missing)}")

    by_value = {g.value: g for g in INPUT_GROUPS}
    responses: list[LikertResponse] = []
    for lineno, record in enumerate(reader, start=2):
        group = by_value.get((record["group"] or "").strip())
        if group is None:
            raise MalformedRow(f"line {lineno}: unknown group '{record['group']}'")
        try:
            answers = tuple(int(record[f"q{i}"]) for i in range(1, ITEM_COUNT + 1))
        except (TypeError, ValueError):
            raise MalformedRow(f"line {lineno}: answers must be integers 1..5")
        responses.append(LikertResponse(
            participant_id=(record["participant_id"] or "").strip(),
            group=group,
            answers=answers,
        ))
    if not responses:
        raise EmptyInput("CSV contains no response rows")
    return responses


def load_responses_csv(path: str) -> list[LikertResponse]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_responses_csv(fh.read())

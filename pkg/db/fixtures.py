import csv
import logging
from pathlib import Path

from db.models import ChartLine, ChartRow
from src.errors import DataFileError, FixtureMismatchError

logger = logging.getLogger(__name__)

ROW_FIELDS = ["stem", "filtration", "label", "order", "color"]
LINE_FIELDS = ["kind", "source", "target"]


def row_sort_key(row: ChartRow):
    return (row.stem, row.filtration, row.label)


def line_sort_key(line: ChartLine):
    return (line.kind, line.source, line.target)


def _open_tsv(path: Path, fields: list[str]) -> list[dict]:
    if not path.exists():
        raise DataFileError(path, 0, "fixture file not found")
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f, delimiter="\t")
        if reader.fieldnames != fields:
            raise DataFileError(path, 1, f"header must be {fields}, got {reader.fieldnames}")
        return list(reader)


def read_rows(path: Path) -> list[ChartRow]:
    rows = []
    for line_no, raw in enumerate(_open_tsv(Path(path), ROW_FIELDS), start=2):
        try:
            rows.append(
                ChartRow(
                    stem=int(raw["stem"]),
                    filtration=int(raw["filtration"]),
                    label=raw["label"],
                    order=raw["order"],
                    color=raw["color"],
                )
            )
        except ValueError as e:
            raise DataFileError(path, line_no, str(e)) from None
    return sorted(rows, key=row_sort_key)


def read_lines(path: Path) -> list[ChartLine]:
    return sorted(
        (ChartLine(**raw) for raw in _open_tsv(Path(path), LINE_FIELDS)), key=line_sort_key
    )


def _row_text(row: ChartRow) -> str:
    return f"{row.filtration} {row.label} {row.order} {row.color}"


def compare_rows(name: str, expected: list[ChartRow], computed: list[ChartRow]):
    """Raise FixtureMismatchError with a degree-by-degree diff when the row sets differ."""
    want: dict[int, set[str]] = {}
    got: dict[int, set[str]] = {}
    for row in expected:
        want.setdefault(row.stem, set()).add(_row_text(row))
    for row in computed:
        got.setdefault(row.stem, set()).add(_row_text(row))

    diff = []
    for stem in sorted(set(want) | set(got)):
        missing = sorted(want.get(stem, set()) - got.get(stem, set()))
        extra = sorted(got.get(stem, set()) - want.get(stem, set()))
        for text in missing:
            diff.append(f"  {stem:>4}  - {text}")
        for text in extra:
            diff.append(f"  {stem:>4}  + {text}")
    if diff:
        raise FixtureMismatchError(name, diff)
    logger.info(f"Fixture {name}: {len(expected)} rows match")


def compare_lines(name: str, expected: list[ChartLine], computed: list[ChartLine]):
    want = {(x.kind, x.source, x.target) for x in expected}
    got = {(x.kind, x.source, x.target) for x in computed}
    diff = [f"  - {k} {s} -> {t}" for k, s, t in sorted(want - got)]
    diff += [f"  + {k} {s} -> {t}" for k, s, t in sorted(got - want)]
    if diff:
        raise FixtureMismatchError(name, diff)
    logger.info(f"Fixture {name}: {len(expected)} lines match")


def write_rows(path: Path, rows: list[ChartRow]):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=ROW_FIELDS, delimiter="\t", lineterminator="\n")
        writer.writeheader()
        for row in sorted(rows, key=row_sort_key):
            writer.writerow(row.model_dump())


def write_lines(path: Path, lines: list[ChartLine]):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=LINE_FIELDS, delimiter="\t", lineterminator="\n")
        writer.writeheader()
        for line in sorted(lines, key=line_sort_key):
            writer.writerow(line.model_dump())


PRODUCT_FIELDS = ["word", "expected"]
VERDICTS = ("nonzero-in-j2", "nonzero-in-tmf", "zero-in-j2", "unknown")


def read_product_words(path: Path) -> list[tuple[str, str]]:
    """(word, expected verdict) pairs; '#' rows are comments, an empty expected column means unchecked."""
    out = []
    for line_no, raw in enumerate(_open_tsv(Path(path), PRODUCT_FIELDS), start=2):
        word = (raw["word"] or "").strip()
        if not word or word.startswith("#"):
            continue
        expected = (raw["expected"] or "").strip()
        if expected and expected not in VERDICTS:
            raise DataFileError(path, line_no, f"unknown verdict {expected!r}")
        out.append((word, expected))
    return out

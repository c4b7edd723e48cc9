import logging
from pathlib import Path

from pydantic import ValidationError

from db.models import (
    FixtureDigest,
    FreeRule,
    ProductEntry,
    SphereEntry,
    TableFile,
    TorsionEntry,
    V1Exception,
)
from src.errors import DataFileError
from utils.labels import parse_monomial, strip_decorations

logger = logging.getLogger(__name__)

SECTIONS = ("TORSION", "FREE-RULE", "PRODUCTS", "V1-EXCEPTIONS", "SPHERE", "FIXTURE-DIGESTS")

# 섹션별 열 개수
_WIDTHS = {
    "TORSION": 4,
    "FREE-RULE": 4,
    "PRODUCTS": 4,
    "V1-EXCEPTIONS": 2,
    "SPHERE": 5,
    "FIXTURE-DIGESTS": 4,
}


def _int(path: Path, line_no: int, text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise DataFileError(path, line_no, f"{what} must be an integer, got {text!r}") from None


def _wild(path: Path, line_no: int, text: str, what: str):
    return None if text == "*" else _int(path, line_no, text, what)


def _check_label(path: Path, line_no: int, text: str):
    _, inner = strip_decorations(text)
    try:
        return parse_monomial(inner)
    except ValueError as e:
        raise DataFileError(path, line_no, str(e)) from None


def _parse_row(path: Path, section: str, line_no: int, cols: list[str]):
    if section == "TORSION":
        label, degree, order, filtration = cols
        key = _check_label(path, line_no, label)
        entry = TorsionEntry(
            label=label,
            degree=_int(path, line_no, degree, "degree"),
            order=_int(path, line_no, order, "order"),
            filtration=_int(path, line_no, filtration, "filtration"),
            line_no=line_no,
        )
        if key.degree != entry.degree:
            raise DataFileError(path, line_no, f"{label} has degree {key.degree}, row says {entry.degree}")
        if not 1 <= entry.degree <= 72:
            raise DataFileError(path, line_no, f"torsion seed must lie in degrees 1..72, got {entry.degree}")
        return entry
    if section == "FREE-RULE":
        a, b, c, e = cols
        return FreeRule(
            a=_wild(path, line_no, a, "a"),
            b=_wild(path, line_no, b, "b"),
            c_mod3=_wild(path, line_no, c, "c%3"),
            e=_int(path, line_no, e, "e"),
            line_no=line_no,
        )
    if section == "PRODUCTS":
        left, right, result, sign = cols
        for text in (left, right, result):
            _check_label(path, line_no, text)
        if sign not in ("+1", "-1", "1"):
            raise DataFileError(path, line_no, f"sign must be +1 or -1, got {sign!r}")
        return ProductEntry(left=left, right=right, result=result, sign=int(sign), line_no=line_no)
    if section == "V1-EXCEPTIONS":
        source, target = cols
        _check_label(path, line_no, source)
        if target != "0":
            _check_label(path, line_no, target)
        return V1Exception(source=source, target=None if target == "0" else target, line_no=line_no)
    if section == "SPHERE":
        label, degree, order, filtration, alias = cols
        return SphereEntry(
            label=label,
            degree=_int(path, line_no, degree, "degree"),
            order="free" if order == "free" else _int(path, line_no, order, "order"),
            filtration=_int(path, line_no, filtration, "filtration"),
            alias=alias,
            line_no=line_no,
        )
    name, file, first, last = cols
    return FixtureDigest(
        name=name,
        file=file,
        first=_int(path, line_no, first, "first"),
        last=_int(path, line_no, last, "last"),
        line_no=line_no,
    )


def read_table_file(path: Path) -> TableFile:
    """Parse data/tmf3.dat into its sections. Any malformed line raises DataFileError."""
    path = Path(path)
    if not path.exists():
        raise DataFileError(path, 0, "data file not found")

    version = None
    section = None
    rows: dict[str, list] = {name: [] for name in SECTIONS}
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section not in SECTIONS:
                    raise DataFileError(path, line_no, f"unknown section [{section}]")
                continue
            cols = line.split()
            if section is None:
                if cols[0] == "VERSION" and len(cols) == 2:
                    version = _int(path, line_no, cols[1], "VERSION")
                    continue
                raise DataFileError(path, line_no, "content before the first section")
            if len(cols) != _WIDTHS[section]:
                raise DataFileError(
                    path, line_no, f"[{section}] rows have {_WIDTHS[section]} columns, got {len(cols)}"
                )
            try:
                rows[section].append(_parse_row(path, section, line_no, cols))
            except ValidationError as e:
                raise DataFileError(path, line_no, str(e)) from None

    if version is None:
        raise DataFileError(path, 1, "missing VERSION line")
    table = TableFile(
        version=version,
        torsion=rows["TORSION"],
        free_rules=rows["FREE-RULE"],
        products=rows["PRODUCTS"],
        v1_exceptions=rows["V1-EXCEPTIONS"],
        sphere=rows["SPHERE"],
        fixtures=rows["FIXTURE-DIGESTS"],
    )
    logger.info(
        f"Loaded {path.name} v{version}: {len(table.torsion)} torsion seeds, "
        f"{len(table.products)} products, {len(table.v1_exceptions)} v1 entries, "
        f"{len(table.sphere)} sphere rows"
    )
    return table

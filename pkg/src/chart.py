import csv
import io
import logging
from pathlib import Path
from typing import Optional

from db.fixtures import LINE_FIELDS, ROW_FIELDS, compare_rows, line_sort_key, read_rows, row_sort_key
from db.models import ChartLine, ChartRow, ChartSpec, Summand
from src.detection import hurewicz_color
from src.errors import DegreeRangeError
from src.j2_assembly import J2Model, multiply_j2
from src.moore_les import QuotientModel, tmf_mod3_lines, tmf_mod3_rows
from utils.labels import split_coefficient
from utils.svg import SVG
from utils.valuation import order_to_exponent

logger = logging.getLogger(__name__)

# 그림 이름 -> (제목, 창, 최소 filtration, 모드)
FIGURES = {
    "figure1": ("π_* tmf/3", (0, 36), 0, "plain"),
    "figure2": ("π_* j² with synthetic filtration", (0, 40), 0, "provenance"),
    "figure3": ("Hurewicz image of j² in degrees 0 to 40", (0, 40), 0, "hurewicz"),
    "figure4": ("Hurewicz image of j² in degrees 74 to 112", (74, 112), 2, "hurewicz"),
    "figure5": ("Hurewicz image of j² in degrees 146 to 184", (146, 184), 2, "hurewicz"),
}
HUREWICZ_DIGESTS = ("hurewicz-74", "hurewicz-146")

STEP = 24.0  # stem / filtration 한 칸의 픽셀
LINE_COLORS = {"alpha": "black", "beta": "black", "v1": "orange"}


def order_text(s: Summand) -> str:
    return "free" if s.is_free else str(s.order)


def provenance_color(j2: J2Model, s: Summand) -> str:
    if s.provenance == "sphere-low":
        return "red" if j2.sphere.is_boundary(s.label) else "blue"
    return "red" if s.provenance == "boundary" else "blue"


def _check_window(window: tuple[int, int], max_degree: int):
    first, last = window
    if first > last:
        raise DegreeRangeError(f"empty window {first}..{last}")
    if last > max_degree:
        raise DegreeRangeError(f"window {first}..{last} exceeds max_degree {max_degree}")


def j2_rows(
    j2: J2Model,
    first: int,
    last: int,
    mode: str = "provenance",
    closure: Optional[set[str]] = None,
    min_filtration: int = 0,
) -> list[ChartRow]:
    if mode == "hurewicz" and closure is None:
        raise ValueError("hurewicz colouring needs the Hurewicz closure")
    rows = []
    for d in range(first, min(last, j2.max_degree) + 1):
        for s in j2.group.at(d):
            if s.filtration < min_filtration:
                continue
            if mode == "provenance":
                color = provenance_color(j2, s)
            elif mode == "hurewicz":
                color = hurewicz_color(d, s.label, closure)
            else:
                color = "black"
            rows.append(ChartRow(stem=d, filtration=s.filtration, label=s.label, order=order_text(s), color=color))
    return sorted(rows, key=row_sort_key)


def j2_lines(j2: J2Model, first: int, last: int, min_filtration: int = 0) -> list[ChartLine]:
    """α₁ and β₁ multiplications between summands inside the window."""
    lines = []
    for d in range(first, min(last, j2.max_degree) + 1):
        for s in j2.group.at(d):
            if s.filtration < min_filtration:
                continue
            for kind, factor, shift in (("alpha", "α", 3), ("beta", "β", 10)):
                if d + shift > min(last, j2.max_degree):
                    continue
                try:
                    product = multiply_j2(j2, s.label, factor)
                except ValueError:
                    # 일차결합 라벨은 곱을 계산하지 않음
                    continue
                if not product.is_nonzero:
                    continue
                scale, target = split_coefficient(product.label)
                t = j2.summand(target)
                if scale == 0 and t is not None and t.filtration >= min_filtration:
                    lines.append(ChartLine(kind=kind, source=s.label, target=target))
    return sorted(lines, key=line_sort_key)


def j2_chart(
    j2: J2Model,
    window: tuple[int, int],
    mode: str = "provenance",
    closure: Optional[set[str]] = None,
    min_filtration: int = 0,
    title: Optional[str] = None,
) -> ChartSpec:
    _check_window(window, j2.max_degree)
    first, last = window
    return ChartSpec(
        title=title or f"π_* j², degrees {first} to {last}",
        window=window,
        min_filtration=min_filtration,
        mode=mode,
        rows=j2_rows(j2, first, last, mode, closure, min_filtration),
        lines=j2_lines(j2, first, last, min_filtration),
    )


def tmf_mod3_chart(model: QuotientModel, window: tuple[int, int], title: Optional[str] = None) -> ChartSpec:
    _check_window(window, model.max_degree)
    first, last = window
    return ChartSpec(
        title=title or f"π_* {model.name}, degrees {first} to {last}",
        window=window,
        mode="plain",
        rows=sorted(tmf_mod3_rows(model, first, last), key=row_sort_key),
        lines=sorted(tmf_mod3_lines(model, first, last), key=line_sort_key),
    )


def figure_chart(name: str, j2: J2Model, closure: Optional[set[str]] = None) -> ChartSpec:
    title, window, min_filtration, mode = FIGURES[name]
    if name == "figure1":
        return tmf_mod3_chart(j2.tmf_mod3, window, title)
    return j2_chart(j2, window, mode, closure, min_filtration, title)


# ── emission ──


def _tsv(fields: list[str], records: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields, delimiter="\t", lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(record)
    return buf.getvalue()


def _glyph(svg: SVG, x: float, y: float, row: ChartRow):
    if row.order == "free":
        h = 3.5
        svg.polygon([(x - h, y - h), (x + h, y - h), (x + h, y + h), (x - h, y + h)], row.color)
        return
    # Z/3^{n+1} -> 점 + n 개의 원
    n = order_to_exponent(int(row.order)) - 1
    svg.circle(x, y, 2.5, row.color, fill=True)
    for k in range(1, n + 1):
        svg.circle(x, y, 2.5 + 2.5 * k, row.color)


def _positions(spec: ChartSpec) -> dict[str, tuple[float, float]]:
    positions = {}
    cell: dict[tuple[int, int], int] = {}
    for row in spec.rows:
        k = cell.get((row.stem, row.filtration), 0)
        cell[(row.stem, row.filtration)] = k + 1
        positions[row.label] = (row.stem * STEP + 7.0 * k, -row.filtration * STEP)
    return positions


def _svg(spec: ChartSpec) -> str:
    svg = SVG()
    first, last = spec.window
    top = max([r.filtration for r in spec.rows], default=spec.min_filtration)
    base_y = -spec.min_filtration * STEP + STEP
    svg.text(first * STEP, -top * STEP - 2 * STEP, spec.title, color="black", size=12)
    svg.line([(first * STEP - STEP / 2, base_y), (last * STEP + STEP / 2, base_y)], color="grey", width=0.5)
    for stem in range(first, last + 1):
        if stem % 4 == 0:
            svg.text(stem * STEP - 4, base_y + 14, str(stem))

    positions = _positions(spec)
    for line in spec.lines:
        if line.source in positions and line.target in positions:
            svg.line([positions[line.source], positions[line.target]], color=LINE_COLORS.get(line.kind, "black"))
    for row in spec.rows:
        x, y = positions[row.label]
        _glyph(svg, x, y, row)
    return svg.render()


def emit_chart(spec: ChartSpec, fmt: str = "svg") -> str:
    """TSV rows (stem, filtration, label, order, color) or an SVG of the same rows."""
    if fmt == "tsv":
        return _tsv(ROW_FIELDS, [r.model_dump() for r in sorted(spec.rows, key=row_sort_key)])
    if fmt == "svg":
        return _svg(spec)
    raise ValueError(f"unknown chart format {fmt!r}")


def emit_chart_lines(spec: ChartSpec) -> str:
    return _tsv(LINE_FIELDS, [x.model_dump() for x in sorted(spec.lines, key=line_sort_key)])


def save_chart(spec: ChartSpec, out: Path, fmt: str = "svg") -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write(emit_chart(spec, fmt))
    logger.info(f"Chart saved: {out} ({len(spec.rows)} classes, {len(spec.lines)} lines)")
    return out


# ── fixtures ──


def check_j2_fixtures(j2: J2Model, fixtures_dir: Path, closure: Optional[set[str]] = None):
    """figure2 always; the Hurewicz windows once a closure is available and the model reaches them."""
    digests = {d.name: d for d in j2.tmf.data.fixtures}
    fig2 = digests.get("figure2")
    if fig2 is not None and j2.max_degree >= fig2.last:
        expected = read_rows(Path(fixtures_dir) / fig2.file)
        compare_rows(fig2.name, expected, j2_rows(j2, fig2.first, fig2.last, "provenance"))
    if closure is None:
        return
    for name in HUREWICZ_DIGESTS:
        digest = digests.get(name)
        if digest is None:
            continue
        if j2.max_degree < digest.last:
            logger.info(f"Fixture {name} skipped: max_degree {j2.max_degree} is below the window")
            continue
        expected = read_rows(Path(fixtures_dir) / digest.file)
        computed = j2_rows(j2, digest.first, digest.last, "hurewicz", closure, min_filtration=2)
        compare_rows(name, expected, computed)

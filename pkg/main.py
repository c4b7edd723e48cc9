"""
jtwo-hurewicz 명령행 도구

사용법:
  python main.py compute j2 --max-degree 200 --format tsv
  python main.py compute quotient --ideal 3,v1^1 --max-degree 150
  python main.py check hurewicz --format md --out data/exports/hurewicz.md
  python main.py check products
  python main.py verify paper --max-degree 600
  python main.py emit chart --figure figure4 --format svg --out figure4.svg

종료 코드: 0 성공, 1 사용법 오류, 2 fixture 불일치 / 검증 실패 / --strict 경고
"""
import argparse
import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

sys.path.insert(0, str(Path(__file__).parent))

from config.settings import Settings
from db.models import ChartRow, ChartSpec
from src.chart import FIGURES, emit_chart, figure_chart, j2_chart, order_text, provenance_color
from src.detection import periodicity_check
from src.errors import (
    DegreeRangeError,
    FixtureMismatchError,
    JTwoError,
    PeriodicityLiftError,
    SeamMismatchError,
    UsageError,
)
from src.j2_assembly import J2Model
from src.pipeline import Pipeline
from src.reporter import emit_report

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2

COMPUTE = ("tmf", "tmf-psi", "j2", "quotient")
CHECK = ("hurewicz", "products", "periodicity")


class WarningCounter(logging.Handler):
    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.count = 0

    def emit(self, record):
        self.count += 1


def setup_logging(settings: Settings) -> WarningCounter:
    log_dir = Path(settings.log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)
    counter = WarningCounter()
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
        handlers=[
            logging.StreamHandler(),
            logging.FileHandler(
                log_dir / f"jtwo_{datetime.now().strftime('%Y%m%d_%H%M')}.log",
                encoding="utf-8",
            ),
            counter,
        ],
        force=True,
    )
    logging.getLogger("sympy").setLevel(logging.WARNING)
    return counter


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="jtwo", description="π_* j² at p = 3: computation and verification")
    parser.add_argument("command", choices=["compute", "check", "verify", "emit"])
    parser.add_argument("target", help=f"compute: {'|'.join(COMPUTE)}; check: {'|'.join(CHECK)}; verify: paper; emit: chart")
    parser.add_argument("--max-degree", type=int, default=None, help="degree bound (default 600)")
    parser.add_argument("--data", type=Path, default=None, help="tmf data file (default $JTWO_DATA or data/tmf3.dat)")
    parser.add_argument("--ideal", default="3", help="3 | 9 | 27 | 3,v1^j")
    parser.add_argument("--format", choices=["svg", "tsv", "md"], default=None)
    parser.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    parser.add_argument("--strict", action="store_true", help="warnings are failures")
    parser.add_argument("--figure", choices=sorted(FIGURES), default="figure2", help="emit chart: which figure")
    parser.add_argument("--window", default=None, help="emit chart: FIRST:LAST instead of a figure window")
    return parser


def _write(text: str, out: Optional[Path]):
    if out is None:
        sys.stdout.write(text)
        return
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def _group_spec(group, title: str, j2: Optional[J2Model] = None) -> ChartSpec:
    """Every summand of the group; coloured by provenance when it belongs to a j² model, black otherwise."""
    rows = [
        ChartRow(
            stem=d,
            filtration=s.filtration,
            label=s.label,
            order=order_text(s),
            color=provenance_color(j2, s) if j2 is not None else "black",
        )
        for d in sorted(group.degrees)
        for s in group.at(d)
    ]
    mode = "plain" if j2 is None else "provenance"
    return ChartSpec(title=title, window=(0, group.max_degree), mode=mode, rows=rows)


def _compute(pipeline: Pipeline, target: str, args) -> str:
    fmt = args.format or "tsv"
    if fmt == "md":
        raise UsageError("compute writes svg or tsv")
    top = args.max_degree if args.max_degree is not None else pipeline.settings.max_degree
    j2 = None
    if target == "tmf":
        group = pipeline.table(top).group()
    elif target == "quotient":
        group = pipeline.quotient(args.ideal, top).group
    else:
        j2 = pipeline.j2(top)
        group = j2.fiber if target == "tmf-psi" else j2.group
    return emit_chart(_group_spec(group, f"π_* {group.name}", j2), fmt)


def _check(pipeline: Pipeline, target: str, args) -> tuple[str, bool]:
    fmt = args.format or "md"
    if target == "hurewicz":
        records, _ = pipeline.hurewicz(args.max_degree)
        return emit_report(records, registry=pipeline.registry), True
    if target == "products":
        verdicts = pipeline.products(args.max_degree)
        ok = not pipeline.product_mismatches(verdicts)
        return emit_report([], verdicts, title="j² product verdicts"), ok
    checks = periodicity_check(pipeline.j2(args.max_degree))
    ok = all(c.passed for c in checks)
    if fmt == "tsv":
        lines = ["check\tpassed\tdetail"] + [f"{c.name}\t{c.passed}\t{c.detail}" for c in checks]
        return "\n".join(lines) + "\n", ok
    return emit_report([], checks=checks, title="Δ⁶-periodicity of detectors"), ok


def _emit(pipeline: Pipeline, args) -> str:
    fmt = args.format or "svg"
    if fmt == "md":
        raise UsageError("charts are emitted as svg or tsv")
    j2 = pipeline.j2(args.max_degree)
    if args.window:
        try:
            first, last = (int(x) for x in args.window.split(":"))
        except ValueError:
            raise UsageError(f"--window must be FIRST:LAST, got {args.window!r}") from None
        spec = j2_chart(j2, (first, last))
    else:
        mode = FIGURES[args.figure][3]
        closure = pipeline.hurewicz(args.max_degree)[1] if mode == "hurewicz" else None
        spec = figure_chart(args.figure, j2, closure)
    return emit_chart(spec, fmt)


def cli(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"strict": args.strict}
    if args.data is not None:
        overrides["data_path"] = args.data
    settings = Settings(**overrides)
    counter = setup_logging(settings)
    logger = logging.getLogger("main")
    pipeline = Pipeline(settings)

    try:
        ok = True
        if args.command == "compute":
            if args.target not in COMPUTE:
                raise UsageError(f"compute target must be one of {COMPUTE}")
            text = _compute(pipeline, args.target, args)
        elif args.command == "check":
            if args.target not in CHECK:
                raise UsageError(f"check target must be one of {CHECK}")
            text, ok = _check(pipeline, args.target, args)
        elif args.command == "verify":
            if args.target != "paper":
                raise UsageError("verify target must be 'paper'")
            results = pipeline.verify_all(args.max_degree)
            failed = [r for r in results if not r.passed]
            ok = not failed
            text = emit_report([], checks=results, title="verification summary")
        else:
            if args.target != "chart":
                raise UsageError("emit target must be 'chart'")
            text = _emit(pipeline, args)
        _write(text, args.out)
    except (FixtureMismatchError, SeamMismatchError, PeriodicityLiftError) as e:
        logger.error(str(e))
        return EXIT_FAILED
    except (UsageError, DegreeRangeError) as e:
        logger.error(str(e))
        return EXIT_USAGE
    except (JTwoError, ValueError) as e:
        logger.error(str(e))
        return EXIT_FAILED

    if not ok:
        logger.error("verification failed")
        return EXIT_FAILED
    if settings.strict and counter.count:
        logger.error(f"--strict: {counter.count} warnings")
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(cli())

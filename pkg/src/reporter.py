import csv
import logging
from pathlib import Path
from typing import Optional

from config.settings import Settings
from db.models import CheckResult, DetectionRecord, ExistenceFlag, ProductVerdict
from src.detection import Registry

logger = logging.getLogger(__name__)

VERDICT_FIELDS = ["degree", "word", "verdict", "label", "route", "family", "reason"]
DETECTION_FIELDS = ["degree", "element", "family", "verdict", "label", "filtration", "citation"]


def _cell(value) -> str:
    if value is None:
        return ""
    return str(value).replace("|", "\\|")


def _table(header: list[str], rows: list[list]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(_cell(x) for x in row) + " |")
    return lines


def emit_report(
    records: list[DetectionRecord],
    verdicts: Optional[list[ProductVerdict]] = None,
    flags: Optional[list[ExistenceFlag]] = None,
    checks: Optional[list[CheckResult]] = None,
    registry: Optional[Registry] = None,
    title: str = "j² detection report",
) -> str:
    """Markdown tables of detection records and product verdicts, ordered by (degree, label)."""
    lines = [f"# {title}", "", "## Detection", ""]
    ordered = sorted(records, key=lambda r: (r.degree, r.label or "", r.element.name))
    lines += _table(
        ["degree", "element", "detector", "verdict", "filtration", "citation"],
        [[r.degree, r.element.name, r.label, r.verdict, r.filtration, r.citation] for r in ordered],
    )

    if verdicts is not None:
        lines += ["", "## Products", ""]
        ordered_v = sorted(verdicts, key=lambda v: (v.degree, v.word))
        lines += _table(
            ["degree", "word", "verdict", "label", "route", "reason"],
            [[v.degree, v.word, v.verdict, v.label, v.route, v.reason] for v in ordered_v],
        )

    if flags is not None:
        lines += ["", "## Existence", ""]
        lines += _table(
            ["family", "status", "representative", "citation"],
            [[f.family, f.status, f.representative, f.citation] for f in flags],
        )

    if checks is not None:
        failed = sum(1 for c in checks if not c.passed)
        lines += ["", f"## Checks ({len(checks) - failed} passed, {failed} failed)", ""]
        lines += _table(["check", "passed", "detail"], [[c.name, "yes" if c.passed else "no", c.detail] for c in checks])

    # 본문에 등장한 인용만
    if registry is not None:
        used = {r.citation for r in records if r.citation}
        used |= {f.citation for f in flags or [] if f.citation}
        used &= set(registry.citations)
        if used:
            lines += ["", "## Citations", ""]
            for anchor in sorted(used):
                lines.append(f"- `{anchor}`: \"{registry.quote(anchor)}\"")
    return "\n".join(lines) + "\n"


class ReportGenerator:
    def __init__(self, settings: Settings):
        self.settings = settings
        self.export_dir = Path(settings.export_dir)

    def save_report(self, name: str, text: str) -> Path:
        self.export_dir.mkdir(parents=True, exist_ok=True)
        path = self.export_dir / f"{name}.md"
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        logger.info(f"Report exported: {path}")
        return path

    def save_verdicts(self, name: str, verdicts: list[ProductVerdict]) -> Path:
        """Product verdicts as CSV, sorted by (degree, word)."""
        self.export_dir.mkdir(parents=True, exist_ok=True)
        path = self.export_dir / f"{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=VERDICT_FIELDS, lineterminator="\n")
            writer.writeheader()
            for v in sorted(verdicts, key=lambda v: (v.degree, v.word)):
                writer.writerow({k: getattr(v, k) for k in VERDICT_FIELDS})
        logger.info(f"CSV exported: {path} ({len(verdicts)} rows)")
        return path

    def save_detections(self, name: str, records: list[DetectionRecord]) -> Path:
        self.export_dir.mkdir(parents=True, exist_ok=True)
        path = self.export_dir / f"{name}.csv"
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=DETECTION_FIELDS, lineterminator="\n")
            writer.writeheader()
            for r in sorted(records, key=lambda r: (r.degree, r.label or "", r.element.name)):
                writer.writerow(
                    {
                        "degree": r.degree,
                        "element": r.element.name,
                        "family": r.element.family,
                        "verdict": r.verdict,
                        "label": r.label,
                        "filtration": r.filtration,
                        "citation": r.citation,
                    }
                )
        logger.info(f"CSV exported: {path} ({len(records)} rows)")
        return path

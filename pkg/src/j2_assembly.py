import logging
import math
from pathlib import Path
from typing import Optional

import yaml

from config.settings import Settings
from db.models import (
    CheckResult,
    ExtensionProblem,
    ExtensionRule,
    GradedGroup,
    J2Product,
    MonomialLabel,
    SphereEntry,
    Summand,
)
from src.adams_psi import compute_tmf_psi, psi_on_mod3
from src.errors import DataFileError, DegreeRangeError, RegistryCitationError, SeamMismatchError
from src.graded_core import ExtensionOracle, apply_extension_policy, scaled_label
from src.moore_les import J2_MOD3_FROM, QuotientModel, j2_mod3, mod3r
from src.tmf_table import TmfTable, load_tmf
from utils.labels import parse_monomial, render_monomial, split_coefficient, strip_decorations
from utils.valuation import PRIME, nu3

logger = logging.getLogger(__name__)

SPHERE_TOP = 22  # j² → τ≤22 S 가 23-connective
SEAM_DEGREES = (20, 21, 22)


# ── π_d S for d <= 22 ──


def _alias_key(alias: str) -> tuple[str, MonomialLabel]:
    decorations, inner = strip_decorations(alias)
    if decorations not in ([], ["∂"]):
        raise ValueError(f"alias must be a tmf class or ∂(tmf class), got {alias!r}")
    return ("boundary" if decorations else "ker-lift"), parse_monomial(inner)


class SphereTable:
    """π_d of the 3-local sphere for d <= 22, each class aliased to its tmf^ψ name."""

    def __init__(self, entries: list[SphereEntry], source: Optional[Path] = None):
        self.entries = entries
        self.source = source
        self.aliases: dict[str, str] = {}
        degrees: dict[int, list[Summand]] = {}
        for entry in entries:
            try:
                kind, key = _alias_key(entry.alias)
            except ValueError as e:
                raise DataFileError(source, entry.line_no, str(e)) from None
            if entry.degree > SPHERE_TOP:
                raise DataFileError(source, entry.line_no, f"sphere entries stop at degree {SPHERE_TOP}")
            if (entry.degree == 0) != (entry.order == "free"):
                raise DataFileError(source, entry.line_no, "only degree 0 carries a free summand")
            self.aliases[entry.label] = entry.alias
            degrees.setdefault(entry.degree, []).append(
                Summand(
                    label=entry.label,
                    order=entry.order,
                    degree=entry.degree,
                    filtration=entry.filtration,
                    provenance="sphere-low",
                    key=key,
                )
            )
        if len(degrees.get(0, [])) != 1:
            raise DataFileError(source, 0, "[SPHERE] needs exactly one class in degree 0")
        self.group = GradedGroup(name="S", degrees=degrees, max_degree=SPHERE_TOP)
        self.reverse = {alias: label for label, alias in self.aliases.items()}

    @classmethod
    def from_table(cls, table: TmfTable) -> "SphereTable":
        return cls(table.data.sphere, source=table.source)

    def is_boundary(self, label: str) -> bool:
        return self.aliases[label].startswith("∂")


class J2Model:
    """π_* j²: sphere classes through degree 22, π_* tmf^ψ from 23 on."""

    def __init__(
        self,
        group: GradedGroup,
        problems: list[ExtensionProblem],
        tmf: TmfTable,
        sphere: SphereTable,
        fiber: GradedGroup,
        tmf_mod3: Optional[QuotientModel] = None,
        quotient: Optional[QuotientModel] = None,
    ):
        self.group = group
        self.problems = problems
        self.tmf = tmf
        self.sphere = sphere
        self.fiber = fiber  # 이어 붙이기 전의 π_* tmf^ψ
        self.tmf_mod3 = tmf_mod3
        self.quotient = quotient  # j²/3
        self._index = {s.label: s for summands in group.degrees.values() for s in summands}

    @property
    def max_degree(self) -> int:
        return self.group.max_degree

    def summand(self, label: str) -> Optional[Summand]:
        return self._index.get(label)

    def alias(self, label: str) -> str:
        """tmf^ψ name of a class (sphere labels go through the alias column)."""
        return self.sphere.aliases.get(label, label)

    def display(self, degree: int, name: str) -> str:
        """Name a tmf^ψ class the way π_degree j² labels it."""
        if degree <= SPHERE_TOP:
            return self.sphere.reverse.get(name, name)
        return name

    def warnings(self) -> list[str]:
        return [p.warning for p in self.problems if p.warning]

    def __repr__(self) -> str:
        return f"J2Model(max_degree={self.max_degree}, problems={len(self.problems)})"


# ── extension rules ──


def load_extension_rules(path: Path) -> list[ExtensionRule]:
    path = Path(path)
    if not path.exists():
        logger.warning(f"Extension rules not found: {path}")
        return []
    with open(path, encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    citations = raw.get("citations", {})
    rules = []
    for item in raw.get("rules", []):
        rule = ExtensionRule(**item)
        if rule.citation not in citations:
            raise RegistryCitationError(f"extension rule {rule.name}: unknown citation {rule.citation!r}")
        rules.append(rule)
    logger.info(f"Loaded {len(rules)} extension rules from {path.name}")
    return rules


def resolve_extension_via_mod3(
    problem: ExtensionProblem, quotient: QuotientModel, group: GradedGroup
) -> tuple[str, Optional[list[int]]]:
    """Decide split vs maximal nonsplit by dim π_d(j²/3).

    dim π_d(j²/3) counts the cyclic summands of π_d j² plus the torsion summands
    of π_{d-1} j². Split gives s + q of the former, the maximal nonsplit
    extension (sub and quotient glued pairwise) gives max(s, q).
    """
    d = problem.degree
    s, q = len(problem.sub), len(problem.quotient)
    if not s or not q:
        return "split", None
    if d < J2_MOD3_FROM or d > quotient.max_degree:
        return "inconclusive", None

    t = group.torsion_count(d - 1)
    measured = quotient.dimension(d)
    split = s + q + t
    nonsplit = max(s, q) + t
    logger.info(f"π_{d}: dim j²/3 = {measured}, split {split}, nonsplit {nonsplit}")

    if measured == split and measured != nonsplit:
        return "split", None
    if measured == nonsplit and measured != split:
        subs = sorted((x.exponent for x in problem.sub), reverse=True)
        quots = sorted((x.exponent for x in problem.quotient), reverse=True)
        exponents = [a + b for a, b in zip(subs, quots)]
        exponents += subs[len(quots):] + quots[len(subs):]
        return "nonsplit", [PRIME**e for e in exponents]
    return "inconclusive", None


def make_oracle(quotient: QuotientModel, group: GradedGroup) -> ExtensionOracle:
    def oracle(problem: ExtensionProblem):
        return resolve_extension_via_mod3(problem, quotient, group)

    return oracle


# ── assembly ──


def _seam_signature(summands: list[Summand]) -> list[str]:
    return sorted(f"{s.order}@{s.filtration}" for s in summands)


def check_seam(sphere: SphereTable, fiber: GradedGroup):
    for d in SEAM_DEGREES:
        left = sphere.group.at(d)
        right = fiber.at(d)
        names_match = sorted(sphere.aliases[s.label] for s in left) == sorted(s.label for s in right)
        if _seam_signature(left) != _seam_signature(right) or not names_match:
            raise SeamMismatchError(
                d,
                [f"{s.label}={sphere.aliases[s.label]}:{s.order}@{s.filtration}" for s in left],
                [f"{s.label}:{s.order}@{s.filtration}" for s in right],
            )
    logger.info(f"Seam degrees {SEAM_DEGREES[0]}..{SEAM_DEGREES[-1]} agree")


def assemble_j2(
    max_degree: Optional[int] = None,
    settings: Optional[Settings] = None,
    table: Optional[TmfTable] = None,
    rules: Optional[list[ExtensionRule]] = None,
    check_fixtures: bool = True,
) -> J2Model:
    """π_d j² through max_degree with provenance and synthetic filtration."""
    settings = settings or Settings()
    max_degree = settings.max_degree if max_degree is None else max_degree
    if max_degree < SPHERE_TOP:
        raise DegreeRangeError(f"j² needs max_degree >= {SPHERE_TOP}, got {max_degree}")
    if table is None:
        table = load_tmf(max_degree + 1, settings.data_path, settings.fixtures_dir, check_fixtures)
    elif table.max_degree < max_degree + 1:
        raise DegreeRangeError(f"tmf table reaches {table.max_degree}, j² needs {max_degree + 1}")
    if rules is None:
        rules = load_extension_rules(settings.extensions_path)

    fiber, problems = compute_tmf_psi(table, max_degree, k=settings.psi_k)
    sphere = SphereTable.from_table(table)
    check_seam(sphere, fiber)

    tmf_mod3 = mod3r(table)
    psi = psi_on_mod3(table, tmf_mod3, k=settings.psi_k)
    quotient = j2_mod3(tmf_mod3, psi)

    upper = [p for p in problems if p.degree > SPHERE_TOP]
    resolved_fiber, resolved = apply_extension_policy(fiber, upper, rules, make_oracle(quotient, fiber))

    degrees = {d: list(sphere.group.at(d)) for d in range(SPHERE_TOP + 1) if sphere.group.at(d)}
    for d, summands in resolved_fiber.degrees.items():
        if d > SPHERE_TOP:
            degrees[d] = summands
    group = GradedGroup(name="j2", degrees=degrees, max_degree=max_degree)

    model = J2Model(group, resolved, table, sphere, fiber, tmf_mod3=tmf_mod3, quotient=quotient)
    quotient.ring = model
    nonsplit = sum(1 for p in resolved if p.resolution == "nonsplit")
    logger.info(
        f"j² assembled through degree {max_degree}: "
        f"{sum(len(v) for v in degrees.values())} summands, "
        f"{len(resolved)} extension problems ({nonsplit} nonsplit)"
    )

    if check_fixtures:
        from src.chart import check_j2_fixtures

        check_j2_fixtures(model, settings.fixtures_dir)
    return model


# ── products ──


class _Operand:
    def __init__(self, kind: str, key: MonomialLabel, scale: int, filtration: int):
        self.kind = kind  # ker-lift, boundary
        self.key = key
        self.scale = scale  # 3^scale 배
        self.filtration = filtration

    @property
    def degree(self) -> int:
        return self.key.degree - (1 if self.kind == "boundary" else 0)


def _operand(j2: J2Model, label: str) -> _Operand:
    scale, rest = split_coefficient(label)
    kind, key = _alias_key(j2.alias(rest))
    s = j2.summand(label) or j2.summand(rest)
    if s is not None:
        filtration = s.filtration
    else:
        filtration = j2.tmf.filtration(key) + (1 if kind == "boundary" else 0)
    return _Operand(kind, key, scale, filtration)


def _result(factors, degree, status, label=None, sign=1, reason=None) -> J2Product:
    return J2Product(factors=factors, degree=degree, status=status, label=label, sign=sign, reason=reason)


def _high_boundary(j2: J2Model, degree: int, filtration: int) -> bool:
    return any(s.provenance == "boundary" and s.filtration >= filtration for s in j2.group.at(degree))


def _step(j2: J2Model, x: _Operand, y: _Operand, factors: list[str]) -> tuple[Optional[_Operand], J2Product]:
    degree = x.degree + y.degree
    filtration = x.filtration + y.filtration
    present = [s.filtration for s in j2.group.at(degree)]
    if not present or filtration > max(present):
        return None, _result(factors, degree, "zero", reason="filtration")

    if x.kind == "boundary" and y.kind == "boundary":
        if _high_boundary(j2, degree, filtration):
            return None, _result(factors, degree, "unknown", reason="boundary·boundary")
        return None, _result(factors, degree, "zero", reason="boundary·boundary")

    kind = "boundary" if "boundary" in (x.kind, y.kind) else "ker-lift"
    product = j2.tmf.multiply(x.key, y.key)
    if product.is_zero:
        if product.table_default:
            return None, _result(factors, degree, "unknown", reason="table-default")
        if kind == "ker-lift" and _high_boundary(j2, degree, filtration):
            # α·f = 0 in tmf may still hit a boundary class of higher filtration
            return None, _result(factors, degree, "unknown", reason=f"{product.reason}; hidden extension possible")
        return None, _result(factors, degree, "zero", reason=product.reason)

    single = product.single()
    if single is None:
        return None, _result(factors, degree, "unknown", reason=f"sum of classes {product.label}")
    key, c = single
    name = render_monomial(key)
    base = f"∂({name})" if kind == "boundary" else name
    label = j2.display(degree, base)
    s = j2.summand(label)
    if s is None:
        return None, _result(factors, degree, "unknown", reason=f"{label} is not a summand of π_{degree} j²")

    coefficient = c * PRIME ** (x.scale + y.scale)
    if not s.is_free:
        coefficient %= s.order
        if coefficient == 0:
            return None, _result(factors, degree, "zero", reason="order")
    v = nu3(coefficient)
    unit = coefficient // PRIME**v
    sign = -1 if unit % PRIME == PRIME - 1 else 1
    out = _Operand(kind, key, v, s.filtration)
    return out, _result(factors, degree, "nonzero", label=scaled_label(v, label), sign=sign)


def multiply_j2(j2: J2Model, *labels: str) -> J2Product:
    """Product of j² classes by lifting to tmf; 'unknown' is a value, not an error.

    ker-lift · ker-lift is the tmf product, ker-lift · ∂(y) = ∂(x·y), and
    ∂x · ∂y vanishes unless a boundary class of high enough filtration sits
    in the target degree.
    """
    if not labels:
        raise ValueError("multiply_j2 needs at least one factor")
    operands = [_operand(j2, label) for label in labels]
    total = sum(op.degree for op in operands)
    if total > j2.max_degree:
        raise DegreeRangeError(f"product degree {total} exceeds max_degree {j2.max_degree}")

    current = operands[0]
    factors = list(labels)
    scale, rest = split_coefficient(labels[0])
    first = j2.display(current.degree, j2.alias(rest))
    if j2.summand(first) is None:
        return _result(factors, current.degree, "unknown", reason=f"{labels[0]} is not a summand of j²")
    result = _result(factors, current.degree, "nonzero", label=scaled_label(scale, first))
    sign = 1
    for op in operands[1:]:
        current, result = _step(j2, current, op, factors)
        if current is None:
            return result
        sign *= result.sign
    return result.model_copy(update={"sign": sign})


def filtration_one_report(j2: J2Model) -> list[CheckResult]:
    """Filtration-1 rank of π_d j² for d ≡ 3 mod 4 against ⌈d/24⌉."""
    results = []
    for d in range(3, j2.max_degree + 1, 4):
        count = sum(1 for s in j2.group.at(d) if s.filtration == 1)
        expected = math.ceil(d / 24)
        results.append(
            CheckResult(name=f"π_{d} filtration 1", passed=count == expected, detail=f"{count} vs {expected}")
        )
    failed = [r for r in results if not r.passed]
    if failed:
        logger.info(
            f"Filtration-1 rank differs from ⌈d/24⌉ in {len(failed)} degrees "
            f"(first: {failed[0].name}, {failed[0].detail})"
        )
    return results

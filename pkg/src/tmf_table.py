import logging
from pathlib import Path
from typing import TYPE_CHECKING, Optional, Union

from db.datafile import read_table_file
from db.models import CheckResult, GradedGroup, KoClass, MonomialLabel, Order, Summand, TableFile, TorsionEntry
from src.errors import DataFileError, DegreeRangeError
from utils.labels import parse_monomial, render_monomial
from utils.valuation import PRIME

if TYPE_CHECKING:
    from src.moore_les import QuotientModel

logger = logging.getLogger(__name__)

PERIOD = 72  # Δ³ 의 degree
SEED_TOP = 72

# 0 이 된 곱의 이유 (우선순위 낮은 것부터)
ZERO_REASONS = ("degree", "annihilator", "table-default")


class Element:
    """A linear combination of basis classes in a single degree.

    Coefficients are relative to the basis generator, so 3Δ counts as one.
    Torsion coefficients are kept modulo the class order.
    A zero element remembers why it is zero.
    """

    def __init__(
        self,
        degree: int,
        terms: Optional[dict[MonomialLabel, int]] = None,
        reason: Optional[str] = None,
    ):
        self.degree = degree
        self.terms = {k: v for k, v in (terms or {}).items() if v}
        if self.terms:
            self.reason = None
        else:
            self.reason = reason or "degree"

    @classmethod
    def of(cls, key: MonomialLabel, coefficient: int = 1) -> "Element":
        return cls(key.degree, {key: coefficient})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def table_default(self) -> bool:
        return self.reason == "table-default"

    def single(self) -> Optional[tuple[MonomialLabel, int]]:
        if len(self.terms) != 1:
            return None
        return next(iter(self.terms.items()))

    @property
    def label(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for key in sorted(self.terms, key=_sort_key):
            c = self.terms[key]
            name = render_monomial(key)
            if key.is_torsion and c == PRIME - 1:
                c = -1
            if c == 1:
                parts.append(name)
            elif c == -1:
                parts.append(f"-{name}")
            else:
                parts.append(f"{c}({name})" if name[:1].isdigit() else f"{c}{name}")
        return "+".join(parts).replace("+-", "-")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Element):
            return NotImplemented
        return self.degree == other.degree and self.terms == other.terms

    def __repr__(self) -> str:
        if self.is_zero:
            return f"Element(0 in degree {self.degree}, reason={self.reason})"
        return f"Element({self.label})"


def _sort_key(key: MonomialLabel):
    return (key.alpha, key.beta, key.c, key.b, key.a, key.e)


def _merge_reason(current: Optional[str], new: Optional[str]) -> Optional[str]:
    if new is None:
        return current
    if current is None:
        return new
    return max(current, new, key=ZERO_REASONS.index)


class TmfTable:
    """π_* tmf at p = 3 to max_degree, built from the curated seed in data/tmf3.dat."""

    def __init__(self, data: TableFile, max_degree: int, source: Optional[Path] = None):
        self.data = data
        self.max_degree = max_degree
        self.source = source
        self._seeds: dict[MonomialLabel, TorsionEntry] = {}
        self._products: dict[tuple[MonomialLabel, MonomialLabel], tuple[MonomialLabel, int]] = {}
        self._group: Optional[GradedGroup] = None
        # r -> tmf/3^r, mod3r 가 채움
        self.quotients: dict[int, "QuotientModel"] = {}
        self._load_seeds()
        self._load_products()
        self._check_free_rules()

    # ── data ──

    def _load_seeds(self):
        for entry in self.data.torsion:
            key = parse_monomial(entry.label)
            if key.e or key.a or key.b or not key.is_torsion or key.c >= 3:
                raise DataFileError(
                    self.source, entry.line_no, f"{entry.label}: seed must be α^iβ^jΔ^c with c < 3"
                )
            if key in self._seeds:
                raise DataFileError(self.source, entry.line_no, f"duplicate seed {entry.label}")
            self._seeds[key] = entry
        if not self._seeds:
            raise DataFileError(self.source, 0, "empty [TORSION] section")

    def _load_products(self):
        for entry in self.data.products:
            left, right, result = (parse_monomial(x) for x in (entry.left, entry.right, entry.result))
            for key, text in ((left, entry.left), (right, entry.right), (result, entry.result)):
                if key not in self._seeds:
                    raise DataFileError(self.source, entry.line_no, f"{text} is not a torsion seed")
            if left.degree + right.degree != result.degree:
                raise DataFileError(
                    self.source,
                    entry.line_no,
                    f"{entry.left}·{entry.right} has degree {left.degree + right.degree}, "
                    f"{entry.result} has degree {result.degree}",
                )
            self._products[(left, right)] = (result, entry.sign)

    def _check_free_rules(self):
        if not any(r.a is None and r.b is None and r.c_mod3 is None for r in self.data.free_rules):
            raise DataFileError(self.source, 0, "[FREE-RULE] needs a final '* * *' row")

    # ── basis ──

    def coefficient_exponent(self, a: int, b: int, c: int) -> int:
        for rule in self.data.free_rules:
            if rule.matches(a, b, c):
                return rule.e
        raise DataFileError(self.source, 0, f"no free rule for (a, b, c) = ({a}, {b}, {c})")

    def free_basis(self, d: int) -> list[MonomialLabel]:
        """Generators 3^e c4^a c6^b Δ^c (b <= 1) of the free part in degree d."""
        if d < 0 or d % 2:
            return []
        basis = []
        for c in range(d // 24 + 1):
            for b in (0, 1):
                rest = d - 24 * c - 12 * b
                if rest >= 0 and rest % 8 == 0:
                    a = rest // 8
                    basis.append(MonomialLabel(e=self.coefficient_exponent(a, b, c), a=a, b=b, c=c))
        return basis

    def seed_of(self, key: MonomialLabel) -> Optional[tuple[MonomialLabel, int]]:
        """Torsion key -> (seed, m) with key = seed·Δ^{3m}; None if key is not a torsion class."""
        if not key.is_torsion or key.e or key.a or key.b:
            return None
        m = key.c // 3
        seed = key.shift_delta(-3 * m)
        if seed not in self._seeds:
            return None
        return seed, m

    def torsion_at(self, d: int) -> list[MonomialLabel]:
        out = []
        for seed, entry in sorted(self._seeds.items(), key=lambda kv: (kv[1].degree, kv[1].label)):
            if d >= entry.degree and (d - entry.degree) % PERIOD == 0:
                out.append(seed.shift_delta(3 * ((d - entry.degree) // PERIOD)))
        return out

    def seeds(self) -> list[MonomialLabel]:
        return [k for k, _ in sorted(self._seeds.items(), key=lambda kv: kv[1].degree)]

    def filtration(self, key: MonomialLabel) -> int:
        found = self.seed_of(key)
        if found is None:
            return 0
        return self._seeds[found[0]].filtration

    def order(self, key: MonomialLabel) -> Order:
        found = self.seed_of(key)
        if found is None:
            return "free"
        return self._seeds[found[0]].order

    def name(self, key: MonomialLabel) -> str:
        return render_monomial(key)

    def summand(self, key: MonomialLabel) -> Summand:
        return Summand(
            label=self.name(key),
            order=self.order(key),
            degree=key.degree,
            filtration=self.filtration(key),
            provenance="tmf",
            key=key,
        )

    def group(self) -> GradedGroup:
        if self._group is None:
            degrees = {}
            for d in range(self.max_degree + 1):
                keys = self.free_basis(d) + self.torsion_at(d)
                if keys:
                    degrees[d] = [self.summand(k) for k in keys]
            self._group = GradedGroup(name="tmf", degrees=degrees, max_degree=self.max_degree)
        return self._group

    # ── products ──

    def _free_product(self, x: MonomialLabel, y: MonomialLabel) -> dict[MonomialLabel, int]:
        poly = {(x.a + y.a, x.b + y.b, x.c + y.c): PRIME ** (x.e + y.e)}
        # c6² = c4³ − 1728Δ
        while any(b >= 2 for (_, b, _) in poly):
            reduced: dict[tuple[int, int, int], int] = {}
            for (a, b, c), k in poly.items():
                if b >= 2:
                    for mono, coeff in (((a + 3, b - 2, c), k), ((a, b - 2, c + 1), -1728 * k)):
                        reduced[mono] = reduced.get(mono, 0) + coeff
                else:
                    reduced[(a, b, c)] = reduced.get((a, b, c), 0) + k
            poly = reduced

        terms: dict[MonomialLabel, int] = {}
        for (a, b, c), k in poly.items():
            if k == 0:
                continue
            e = self.coefficient_exponent(a, b, c)
            if k % PRIME**e:
                raise DataFileError(
                    self.source, 0, f"3^{e}·c4^{a}c6^{b}Δ^{c} does not divide {k}·c4^{a}c6^{b}Δ^{c}"
                )
            key = MonomialLabel(e=e, a=a, b=b, c=c)
            terms[key] = terms.get(key, 0) + k // PRIME**e
        return terms

    def _torsion_product(
        self, x: MonomialLabel, y: MonomialLabel
    ) -> tuple[Optional[MonomialLabel], int, Optional[str]]:
        word = MonomialLabel(alpha=x.alpha + y.alpha, beta=x.beta + y.beta, c=x.c + y.c)
        if self.seed_of(word) is not None:
            return word, 1, None
        sx, mx = self.seed_of(x)
        sy, my = self.seed_of(y)
        found = self._products.get((sx, sy)) or self._products.get((sy, sx))
        if found is not None:
            result, sign = found
            return result.shift_delta(3 * (mx + my)), sign, None
        reason = "table-default" if self.torsion_at(word.degree) else "degree"
        return None, 0, reason

    def _multiply_keys(
        self, x: MonomialLabel, y: MonomialLabel
    ) -> tuple[dict[MonomialLabel, int], Optional[str]]:
        if not x.is_torsion and not y.is_torsion:
            return self._free_product(x, y), None
        if x.is_torsion and y.is_torsion:
            key, sign, reason = self._torsion_product(x, y)
            return ({key: sign} if key is not None else {}), reason
        t, f = (x, y) if x.is_torsion else (y, x)
        if f.e == 0 and f.a == 0 and f.b == 0 and f.c % 3 == 0:
            return {t.shift_delta(f.c): 1}, None
        return {}, "annihilator"

    def multiply(
        self,
        x: Union[MonomialLabel, Element, str],
        y: Union[MonomialLabel, Element, str],
    ) -> Element:
        """Bilinear product; a zero result carries degree, annihilator or table-default."""
        x, y = self.element(x), self.element(y)
        degree = x.degree + y.degree
        if degree > self.max_degree:
            raise DegreeRangeError(f"product degree {degree} exceeds max_degree {self.max_degree}")
        if x.is_zero or y.is_zero:
            return Element(degree, reason=_merge_reason(x.reason, y.reason))

        terms: dict[MonomialLabel, int] = {}
        reason = None
        for kx, cx in x.terms.items():
            for ky, cy in y.terms.items():
                partial, why = self._multiply_keys(kx, ky)
                reason = _merge_reason(reason, why)
                for key, c in partial.items():
                    terms[key] = terms.get(key, 0) + c * cx * cy
        for key in list(terms):
            order = self.order(key)
            if order != "free":
                terms[key] %= order
        return Element(degree, terms, reason=reason)

    def element(self, x: Union[MonomialLabel, Element, str]) -> Element:
        if isinstance(x, Element):
            return x
        if isinstance(x, str):
            x = parse_monomial(x)
        if x.is_torsion and self.seed_of(x) is None:
            return Element(x.degree, reason="degree")
        return Element.of(x)

    # ── q-expansion ──

    def q_expansion(self, x: MonomialLabel) -> Optional[KoClass]:
        """3^e c4^a c6^b ↦ 3^e u^{2a+3b}; anything containing Δ or torsion maps to 0 (None)."""
        if x.is_torsion or x.c > 0:
            return None
        return KoClass(coefficient=PRIME**x.e, power=2 * x.a + 3 * x.b)

    def q_expansion_element(self, x: Element) -> Optional[KoClass]:
        total, power = 0, None
        for key, c in x.terms.items():
            image = self.q_expansion(key)
            if image is None:
                continue
            total += c * image.coefficient
            power = image.power
        if total == 0:
            return None
        return KoClass(coefficient=total, power=power)

    # ── checks ──

    def check_periodicity(self):
        """Δ³ must map the torsion of degree d injectively into degree d + 72."""
        delta3 = MonomialLabel(c=3)
        for d in range(1, self.max_degree - PERIOD + 1):
            for key in self.torsion_at(d):
                image = self.multiply(key, delta3)
                if image.is_zero or image.single() != (key.shift_delta(3), 1):
                    raise DataFileError(self.source, 0, f"Δ³·{self.name(key)} is not a torsion class")

    def check_associativity(self, max_total: int = 200) -> list[CheckResult]:
        """(xy)z = x(yz) over triples of ring generators and torsion seeds."""
        top = min(max_total, self.max_degree)
        generators = [
            MonomialLabel(a=1),
            MonomialLabel(b=1),
            MonomialLabel(e=self.coefficient_exponent(0, 0, 1), c=1),
            MonomialLabel(e=self.coefficient_exponent(0, 0, 3), c=3),
        ] + self.seeds()
        failures = []
        for x in generators:
            for y in generators:
                for z in generators:
                    if x.degree + y.degree + z.degree > top:
                        continue
                    left = self.multiply(self.multiply(x, y), z)
                    right = self.multiply(x, self.multiply(y, z))
                    if left != right:
                        failures.append(
                            CheckResult(
                                name=f"({self.name(x)}·{self.name(y)})·{self.name(z)}",
                                passed=False,
                                detail=f"{left} vs {right}",
                            )
                        )
        return failures

    def check_q_expansion(self, max_total: int = 200) -> list[CheckResult]:
        """q(x)·q(y) = q(xy) in π_* ko for free basis pairs of total degree <= max_total."""
        failures = []
        keys = [k for d in range(min(max_total, self.max_degree) + 1) for k in self.free_basis(d)]
        for i, x in enumerate(keys):
            for y in keys[i:]:
                if x.degree + y.degree > min(max_total, self.max_degree):
                    continue
                qx, qy = self.q_expansion(x), self.q_expansion(y)
                lhs = None if qx is None or qy is None else (qx.coefficient * qy.coefficient, qx.power + qy.power)
                image = self.q_expansion_element(self.multiply(x, y))
                rhs = None if image is None else (image.coefficient, image.power)
                if lhs != rhs:
                    failures.append(
                        CheckResult(name=f"q({self.name(x)}·{self.name(y)})", passed=False, detail=f"{lhs} vs {rhs}")
                    )
        return failures


def load_tmf(
    max_degree: int,
    data_path: Path,
    fixtures_dir: Optional[Path] = None,
    check_fixtures: bool = True,
) -> TmfTable:
    """Read the curated data file and expand it to max_degree.

    The [FIXTURE-DIGESTS] entries for tmf/3 (rows and v1/α/β lines) are checked here;
    a mismatch raises FixtureMismatchError with the per-degree diff.
    """
    data_path = Path(data_path)
    data = read_table_file(data_path)
    covered = {e.degree for e in data.torsion}
    if not covered or max(covered) > SEED_TOP:
        raise DataFileError(data_path, 0, f"torsion seed must cover degrees 1..{SEED_TOP}")
    table = TmfTable(data, max_degree, source=data_path)
    table.check_periodicity()
    logger.info(
        f"tmf table expanded to degree {max_degree}: "
        f"{sum(len(v) for v in table.group().degrees.values())} summands"
    )

    if check_fixtures:
        from src.moore_les import check_tmf_mod3_fixtures

        check_tmf_mod3_fixtures(table, fixtures_dir or data_path.parent / "fixtures")
    return table

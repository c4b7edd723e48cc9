import logging
import re
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Optional

import yaml

from config.settings import Settings
from db.models import (
    CheckResult,
    DetectionRecord,
    ExistenceFlag,
    FamilyElement,
    MonomialLabel,
    ProductVerdict,
    TodaFact,
)
from src.errors import FixtureMismatchError, RegistryCitationError, RegistryConflictError
from src.graded_core import scaled_label
from src.j2_assembly import J2Model, multiply_j2
from src.moore_les import FAILING_RESIDUES
from utils.labels import parse_monomial, render_monomial, split_coefficient, strip_decorations
from utils.valuation import nu3

logger = logging.getLogger(__name__)

BETA_PERIOD = 144  # Δ⁶
NONDETECTED_RESIDUES = (2, 98)  # mod 144
OPEN_RESIDUE, OPEN_FROM = 9, 153  # x_{153,3} 와 그 Δ⁶ 이동
BRACKET_SHIFT = 4  # 괄호 값의 차수 - 곱의 차수

_TOKEN_RE = re.compile(r"^(α|β)(\d+)(?:/(\d+))?(?:\^(\d+))?$")
_X_RE = re.compile(r"^x(\d+)(?:\^(\d+))?$")
_BRACKET_RE = re.compile(r"^⟨α1,α1,β(\d+)⟩$")


# ── names and degrees ──


def alpha_degree(i: int) -> int:
    return 4 * i - 1


def beta_degree(i: int, j: int = 1) -> int:
    return 16 * i - 4 * j - 2


def alpha_name(i: int, j: int = 1) -> str:
    return f"α{i}" if j == 1 else f"α{i}/{j}"


def beta_name(i: int, j: int = 1) -> str:
    return f"β{i}" if j == 1 else f"β{i}/{j}"


def _m(alpha: int = 0, beta: int = 0, c: int = 0) -> str:
    return render_monomial(MonomialLabel(alpha=alpha, beta=beta, c=c))


def _power(token: str, n: int) -> str:
    return token if n == 1 else f"{token}^{n}"


def _word(*parts: tuple[str, int]) -> str:
    return "·".join(_power(token, n) for token, n in parts if n)


def _expand(word: str) -> list[str]:
    """'α1·β1^2·β10' -> ['α1', 'β1', 'β1', 'β10']."""
    tokens = []
    for raw in word.replace(" ", "").split("·"):
        if not raw:
            continue
        m = re.match(r"^(.*[^\^])\^(\d+)$", raw) if not raw.startswith("⟨") else None
        if m and (_TOKEN_RE.match(raw) or _X_RE.match(raw)):
            tokens.extend([m.group(1)] * int(m.group(2)))
        else:
            tokens.append(raw)
    return tokens


def token_degree(token: str) -> int:
    m = _TOKEN_RE.match(token)
    if m:
        letter, i, j, n = m.group(1), int(m.group(2)), int(m.group(3) or 1), int(m.group(4) or 1)
        return n * (alpha_degree(i) if letter == "α" else beta_degree(i, j))
    m = _X_RE.match(token)
    if m:
        return int(m.group(1)) * int(m.group(2) or 1)
    m = _BRACKET_RE.match(token)
    if m:
        return beta_degree(int(m.group(1))) + 7
    raise ValueError(f"unknown family token {token!r}")


def word_degree(word: str) -> int:
    return sum(token_degree(t) for t in _expand(word))


# ── registry ──


class Registry:
    def __init__(
        self,
        facts: list[TodaFact],
        existence: list[ExistenceFlag],
        statements: list[dict],
        citations: dict[str, str],
    ):
        self.facts = facts
        self.existence = existence
        self.statements = statements
        self.citations = citations
        self._by_name = {f.name: f for f in facts}

    def fact(self, name: str) -> TodaFact:
        return self._by_name[name]

    def quote(self, anchor: str) -> str:
        return self.citations[anchor]


def load_registry(path: Optional[Path] = None) -> Registry:
    path = Path(path or Settings().registry_path)
    with open(path, encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    citations = raw.get("citations", {})

    def cited(kind: str, name: str, anchor: str):
        if anchor not in citations:
            raise RegistryCitationError(f"{kind} {name}: citation anchor {anchor!r} not found in {path.name}")

    facts = []
    seen = set()
    for item in raw.get("toda_facts", []):
        fact = TodaFact(**item)
        cited("Toda fact", fact.name, fact.citation)
        if fact.name in seen:
            raise RegistryConflictError(f"duplicate Toda fact {fact.name}")
        seen.add(fact.name)
        facts.append(fact)
    existence = []
    for item in raw.get("existence", []):
        flag = ExistenceFlag(**item)
        cited("existence flag", flag.family, flag.citation)
        existence.append(flag)
    statements = raw.get("facts", [])
    for item in statements:
        cited("fact", item.get("name", "?"), item.get("citation", ""))
    logger.info(f"Registry: {len(facts)} Toda facts, {len(existence)} existence flags, {len(statements)} facts")
    return Registry(facts, existence, statements, citations)


def toda_registry(path: Optional[Path] = None) -> list[TodaFact]:
    return load_registry(path).facts


# ── detectors ──


def _tmf_name(j2: J2Model, names: list[str]) -> Optional[str]:
    element = j2.tmf.element(names[0])
    for name in names[1:]:
        element = j2.tmf.multiply(element, name)
    single = element.single()
    if single is None:
        return None
    return render_monomial(single[0])


# family -> (t 에 대한 tmf 이름 목록, ∂ 여부, t = 0 의 차수)
PERIODIC_DETECTORS = {
    "β_{1+9t}": (lambda t: [_m(beta=1, c=6 * t)], False, 10),
    "β_{2+9t}": (lambda t: [_m(alpha=1, c=1 + 6 * t)], True, 26),
    "β_{5+9t}": (lambda t: [_m(alpha=1, c=3 + 6 * t)], True, 74),
    "β_{6+9t/3}": (lambda t: [_m(beta=1, c=3 + 6 * t)], False, 82),
    "x_{81+144t}": (lambda t: [_m(beta=1, c=3 + 6 * t)], True, 81),
    "α1β_{3+9t/3}": (lambda t: [_m(alpha=1, beta=1, c=1 + 6 * t)], False, 37),
    "α1β_{7+9t}": (lambda t: [_m(alpha=1, beta=1, c=4 + 6 * t)], False, 109),
}


def _token_detector(token: str) -> tuple[Optional[list[str]], bool, str]:
    """Token -> (tmf names, boundary?, note). None when no detector is catalogued."""
    m = _BRACKET_RE.match(token)
    if m:
        i = int(m.group(1))
        if i % 9 != 5:
            return None, False, f"⟨α1,α1,β{i}⟩ is not catalogued"
        return [_m(beta=1, c=3 + 6 * ((i - 5) // 9))], True, ""
    m = _X_RE.match(token)
    if m:
        d = int(m.group(1))
        if (d - 81) % BETA_PERIOD:
            return None, False, f"{token} is not catalogued"
        return [_m(beta=1, c=3 + 6 * ((d - 81) // BETA_PERIOD))], True, ""
    m = _TOKEN_RE.match(token)
    if not m:
        raise ValueError(f"unknown family token {token!r}")
    letter, i, j = m.group(1), int(m.group(2)), int(m.group(3) or 1)
    if letter == "α":
        if i == 1 and j == 1:
            return [_m(alpha=1)], False, ""
        return None, True, "alpha"
    t, r = divmod(i, 9)
    if j == 1 and r == 1:
        return [_m(beta=1, c=6 * t)], False, ""
    if j == 1 and r == 2:
        return [_m(alpha=1, c=1 + 6 * t)], True, ""
    if j == 1 and r == 5:
        return [_m(alpha=1, c=3 + 6 * t)], True, ""
    if j == 3 and r == 6:
        return [_m(beta=1, c=3 + 6 * t)], False, ""
    if (j == 3 and r == 3) or (j == 1 and r == 7):
        return None, False, f"{token} does not exist"
    return None, False, f"{token} has no catalogued detector"


def _alpha_label(i: int, j: int) -> tuple[str, str]:
    """(label with coefficient, base label) of the detector of α_{i/j}, i >= 2."""
    b = i % 2
    a = (i - 3 * b) // 2
    coefficient = nu3(i) + 1 - j
    base = f"∂({render_monomial(MonomialLabel(a=a, b=b))})"
    return scaled_label(coefficient, base), base


def _compound(tokens: list[str]) -> list[tuple[list[str], bool, str]]:
    """α1 paired with β_{3+9t/3} or β_{7+9t} is detected as one class."""
    tokens = list(tokens)
    out = []
    for token in list(tokens):
        m = _TOKEN_RE.match(token)
        if not m or m.group(1) != "β":
            continue
        i, j = int(m.group(2)), int(m.group(3) or 1)
        t, r = divmod(i, 9)
        if ((j == 3 and r == 3) or (j == 1 and r == 7)) and "α1" in tokens:
            tokens.remove(token)
            tokens.remove("α1")
            c = 1 + 6 * t if r == 3 else 4 + 6 * t
            out.append(([_m(alpha=1, beta=1, c=c)], False, ""))
    for token in tokens:
        m = _TOKEN_RE.match(token)
        if m and m.group(1) == "α" and not (int(m.group(2)) == 1 and int(m.group(3) or 1) == 1):
            i, j = int(m.group(2)), int(m.group(3) or 1)
            label, _ = _alpha_label(i, j)
            out.append(([label], True, "alpha"))
        else:
            out.append(_token_detector(token))
    return out


# ── α family ──


def alpha_family(i: int, j: Optional[int] = None, j2: Optional[J2Model] = None) -> DetectionRecord:
    """α_{i/j} is detected by 3^{ν₃(i)+1-j}∂(c4^a c6^b), i = 2a + 3b; α₁ by α in tmf."""
    if i < 1:
        raise ValueError(f"i must be >= 1, got {i}")
    top = nu3(i) + 1
    j = top if j is None else j
    if not 1 <= j <= top:
        raise ValueError(f"α_{i}/{j}: j must lie in 1..{top}")
    degree = alpha_degree(i)
    element = FamilyElement(
        name=alpha_name(i, j), kind="alpha", i=i, j=j, degree=degree, family="α_{a/ν3(a)+1}"
    )
    if i == 1:
        label, base, verdict = "α", "α", "detected-by-tmf"
    else:
        label, base = _alpha_label(i, j)
        verdict = "detected-by"
    filtration = None
    if j2 is not None:
        shown = j2.display(degree, base)
        s = j2.summand(shown)
        coefficient = split_coefficient(label)[0]
        if s is None or s.is_free or 3**coefficient >= s.order:
            raise FixtureMismatchError("alpha-family", [f"  {degree:>4}  {element.name}: {label} is zero in j²"])
        label = scaled_label(coefficient, shown)
        filtration = s.filtration
    return DetectionRecord(element=element, verdict=verdict, label=label, degree=degree, filtration=filtration)


# ── Hurewicz image ──


def _detected_family_elements(max_degree: int) -> list[tuple[FamilyElement, list[str], bool]]:
    out = []

    def add(word: str, family: str, names: list[str], boundary: bool, t: Optional[int] = None, kind=None):
        degree = word_degree(word)
        if degree > max_degree:
            return
        tokens = _expand(word)
        if kind is None:
            kind = "product" if len(tokens) > 1 else ("bracket" if tokens[0].startswith("x") else "beta")
        element = FamilyElement(name=word, kind=kind, t=t, factors=tokens, degree=degree, family=family)
        out.append((element, names, boundary))

    t = 0
    while 10 + BETA_PERIOD * t <= max_degree:
        b1, b2, b5 = beta_name(1 + 9 * t), beta_name(2 + 9 * t), beta_name(5 + 9 * t)
        b3, b6, b7 = beta_name(3 + 9 * t, 3), beta_name(6 + 9 * t, 3), beta_name(7 + 9 * t)
        x = f"x{81 + BETA_PERIOD * t}"
        for i, ell in ((0, 0), (1, 0), (0, 1), (0, 2)):
            add(_word(("α1", i), ("β1", ell), (b1, 1)), "α1^iβ1^ℓβ_{1+9t}",
                ["α"] * i + ["β"] * ell + [_m(beta=1, c=6 * t)], False, t)
            add(_word(("α1", i), ("β1", ell), (b6, 1)), "α1^iβ1^ℓβ_{6+9t/3}",
                ["α"] * i + ["β"] * ell + [_m(beta=1, c=3 + 6 * t)], False, t)
        add(_word(("α1", 1), (b3, 1)), "α1β_{3+9t/3}", [_m(alpha=1, beta=1, c=1 + 6 * t)], False, t)
        add(_word(("α1", 1), (b7, 1)), "α1β_{7+9t}", [_m(alpha=1, beta=1, c=4 + 6 * t)], False, t)
        for i in (0, 1):
            for j in (0, 1):
                add(_word(("α1", i), ("β1", j), (b2, 1)), "α1^iβ1^jβ_{2+9t}",
                    ["α"] * i + ["β"] * j + [_m(alpha=1, c=1 + 6 * t)], True, t)
            add(_word(("α1", i), ("β6/3", 1), (b2, 1)), "α1^iβ6/3β_{2+9t}",
                ["α"] * i + [_m(beta=1, c=3), _m(alpha=1, c=1 + 6 * t)], True, t)
            add(_word(("β1", i), (b5, 1)), "β1^jβ_{5+9t}", ["β"] * i + [_m(alpha=1, c=3 + 6 * t)], True, t)
            add(_word(("β6/3", i), (x, 1)), "β6/3^i⟨α1,α1,β_{5+9t}⟩",
                [_m(beta=1, c=3)] * i + [_m(beta=1, c=3 + 6 * t)], True, t)
        add(_word(("β6/3", 1), (b5, 1)), "β6/3β_{5+9t}", [_m(beta=1, c=3), _m(alpha=1, c=3 + 6 * t)], True, t)
        t += 1
    add("β1^0", "β1^ℓ", ["1"], False, kind="beta")
    for ell in (1, 2):
        add(_word(("β1", ell)), "β1^ℓ", ["β"] * ell, False, kind="beta" if ell == 1 else "product")
    return out


def family_catalog(max_degree: int) -> list[tuple[int, str]]:
    """(degree, name) of every family element expected in the Hurewicz image through max_degree."""
    out = []
    a = 1
    while alpha_degree(a) <= max_degree:
        out.append((alpha_degree(a), alpha_name(a, nu3(a) + 1)))
        a += 1
    out.extend((element.degree, element.name) for element, _, _ in _detected_family_elements(max_degree))
    return sorted(out)


def hurewicz_image(j2: J2Model, max_degree: Optional[int] = None) -> list[DetectionRecord]:
    """Every detected family element through max_degree with its j² detector, plus nondetections."""
    top = j2.max_degree if max_degree is None else min(max_degree, j2.max_degree)
    records: list[DetectionRecord] = []
    diff: list[str] = []

    a = 1
    while alpha_degree(a) <= top:
        records.append(alpha_family(a, j2=j2))
        a += 1

    for element, names, boundary in _detected_family_elements(top):
        inner = _tmf_name(j2, names) if names != ["1"] else "1"
        label = None
        if inner is not None:
            label = j2.display(element.degree, f"∂({inner})" if boundary else inner)
        s = j2.summand(label) if label else None
        if s is None:
            diff.append(f"  {element.degree:>4}  {element.name}: detector {label or names} is zero in j²")
            continue
        records.append(
            DetectionRecord(
                element=element,
                verdict="detected-by" if boundary else "detected-by-tmf",
                label=label,
                degree=element.degree,
                filtration=s.filtration,
            )
        )
    if diff:
        raise FixtureMismatchError("hurewicz-image", diff)

    if 23 <= top:
        records.append(
            DetectionRecord(
                element=FamilyElement(name="α1·β1^2", kind="product", factors=["α1", "β1", "β1"], degree=23),
                verdict="not-detected",
                degree=23,
                citation="alpha1-beta1-squared",
            )
        )
    for d in range(top + 1):
        r = d % BETA_PERIOD
        if r in NONDETECTED_RESIDUES or (r == OPEN_RESIDUE and d >= OPEN_FROM):
            for s in j2.group.at(d):
                if s.filtration < 2:
                    continue
                unknown = r == OPEN_RESIDUE
                records.append(
                    DetectionRecord(
                        element=FamilyElement(
                            name=f"x{d},{s.filtration}" if unknown else s.label,
                            kind="class",
                            degree=d,
                            existence="unknown" if unknown else "exists",
                        ),
                        verdict="unknown" if unknown else "not-detected",
                        label=s.label,
                        degree=d,
                        filtration=s.filtration,
                        citation="x153-open" if unknown else None,
                    )
                )

    licensed = [
        r for r in records
        if r.verdict.startswith("detected") and r.degree % BETA_PERIOD in NONDETECTED_RESIDUES
    ]
    if licensed:
        raise FixtureMismatchError(
            "nondetection", [f"  {r.degree:>4}  {r.element.name} detected by {r.label}" for r in licensed]
        )
    records.sort(key=lambda r: (r.degree, r.element.name))
    detected = sum(1 for r in records if r.verdict.startswith("detected"))
    logger.info(f"Hurewicz image through degree {top}: {detected} detected, {len(records) - detected} other records")
    return records


def hurewicz_closure(j2: J2Model, records: list[DetectionRecord]) -> set[str]:
    """Labels of j² classes reached by nonzero products of family detectors."""
    closure = {
        r.label for r in records
        if r.verdict.startswith("detected") and r.label and not split_coefficient(r.label)[0]
    }
    generators = []
    for label in sorted(closure):
        _, inner = strip_decorations(j2.alias(label))
        if parse_monomial(inner).is_torsion:
            generators.append(label)

    frontier = sorted(closure)
    while frontier:
        found = []
        for x in frontier:
            dx = j2.summand(x).degree
            for g in generators:
                if dx + j2.summand(g).degree > j2.max_degree:
                    continue
                product = multiply_j2(j2, x, g)
                if product.is_nonzero and product.label not in closure and not split_coefficient(product.label)[0]:
                    closure.add(product.label)
                    found.append(product.label)
        frontier = sorted(found)
    logger.info(f"Hurewicz closure: {len(closure)} classes from {len(generators)} torsion generators")
    return closure


def hurewicz_color(degree: int, label: str, closure: set[str]) -> str:
    if label in closure:
        return "orange"
    if degree % BETA_PERIOD == OPEN_RESIDUE and degree >= OPEN_FROM:
        return "green"
    return "black"


# ── products ──


def check_product(j2: J2Model, word: str) -> ProductVerdict:
    """Map each factor to its detector and multiply in j² (tmf for tmf-only words)."""
    degree = word_degree(word)
    tokens = _expand(word)
    labels = []
    all_tmf = True
    for names, boundary, note in _compound(tokens):
        if names is None:
            return ProductVerdict(word=word, verdict="unknown", degree=degree, reason=note)
        if note == "alpha":
            labels.append(names[0])
            all_tmf = False
            continue
        inner = _tmf_name(j2, names)
        if inner is None:
            return ProductVerdict(word=word, verdict="unknown", degree=degree, reason=f"{names} is not a single class")
        labels.append(f"∂({inner})" if boundary else inner)
        all_tmf = all_tmf and not boundary

    product = multiply_j2(j2, *labels)
    if product.status == "zero":
        return ProductVerdict(word=word, verdict="zero-in-j2", degree=degree, reason=product.reason)
    if product.status == "unknown":
        return ProductVerdict(word=word, verdict="unknown", degree=degree, reason=product.reason)
    verdict = "nonzero-in-tmf" if all_tmf else "nonzero-in-j2"
    return ProductVerdict(word=word, verdict=verdict, label=product.label, degree=degree)


def _shift_label(label: str, k: int) -> str:
    decorations, inner = strip_decorations(label)
    out = render_monomial(parse_monomial(inner).shift_delta(k))
    for decoration in reversed(decorations):
        out = f"{decoration}({out})"
    return out


def bracket_route(
    j2: J2Model, word: str, fact: TodaFact, closure: set[str], family: Optional[str] = None
) -> ProductVerdict:
    """A product that is zero in j² is nonzero in the sphere when its registry bracket

    lands on a nonzero class outside the Hurewicz image with vanishing indeterminacy.
    """
    direct = check_product(j2, word)
    direct = direct.model_copy(update={"family": family})
    if direct.is_nonzero:
        return direct
    value_degree = direct.degree + BRACKET_SHIFT
    n, rem = divmod(value_degree - fact.degree, fact.period or 1)
    if rem or n < 0 or (n and not fact.period):
        return direct.model_copy(update={"verdict": "unknown", "reason": f"{fact.name} does not reach degree {value_degree}"})
    value = _shift_label(fact.value, 6 * n)

    failures = []
    if direct.verdict != "zero-in-j2":
        failures.append(f"direct product is {direct.verdict}")
    if fact.model == "tmf":
        key = parse_monomial(value)
        if key.degree > j2.tmf.max_degree or (key.is_torsion and j2.tmf.seed_of(key) is None):
            failures.append(f"{value} is not a class of tmf")
        group_at = j2.tmf.group().at
    else:
        if j2.summand(value) is None:
            failures.append(f"{value} is not a class of j²")
        group_at = j2.group.at
    if value in closure:
        failures.append(f"{value} is in the Hurewicz image")
    period = fact.period or value_degree + 1
    for base in fact.vanishing_degrees:
        for d in range(base, value_degree + 1, period):
            if group_at(d):
                failures.append(f"π_{d} {fact.model} ≠ 0")
    for base in fact.alpha_torsion_degrees:
        for d in range(base, value_degree + 1, period):
            for s in j2.group.at(d):
                if multiply_j2(j2, "α", s.label).status != "zero":
                    failures.append(f"α1·{s.label} is not known to vanish")
    if failures:
        return direct.model_copy(
            update={"verdict": "unknown", "route": "bracket", "reason": "; ".join(failures)}
        )
    verdict = "nonzero-in-tmf" if fact.model == "tmf" else "nonzero-in-j2"
    return direct.model_copy(
        update={
            "verdict": verdict,
            "label": value,
            "route": "bracket",
            "reason": f"{fact.bracket} ∋ {value}, outside the Hurewicz image",
        }
    )


def _families(top: int, offset: int, period: int = BETA_PERIOD) -> list[int]:
    out = []
    k = 0
    while offset + period * k <= top:
        out.append(k)
        k += 1
    return out


def product_families_suite(
    j2: J2Model,
    max_degree: Optional[int] = None,
    registry: Optional[Registry] = None,
    closure: Optional[set[str]] = None,
) -> list[ProductVerdict]:
    """Every instance of the product families through max_degree, plus ⟨β_{5+9t}, α1, α1⟩."""
    top = j2.max_degree if max_degree is None else min(max_degree, j2.max_degree)
    registry = registry or load_registry()
    if closure is None:
        closure = hurewicz_closure(j2, hurewicz_image(j2, top))

    f1 = [beta_name(1 + 9 * s) for s in _families(top, 10)]
    f6 = [beta_name(6 + 9 * t, 3) for t in _families(top, 82)]
    pool = sorted(f1 + f6, key=token_degree)
    verdicts: list[ProductVerdict] = []

    def direct(word: str, family: str):
        if word_degree(word) <= top:
            verdicts.append(check_product(j2, word).model_copy(update={"family": family}))

    def bracket(word: str, family: str, fact: str):
        # 괄호 값이 모델 범위 안에 있어야 함
        if word_degree(word) + BRACKET_SHIFT <= j2.max_degree and word_degree(word) <= top:
            verdicts.append(bracket_route(j2, word, registry.fact(fact), closure, family))

    logger.info(
        "Stated exponent 6(Σs_a + Σ(t_b+3)) for four-fold F1/F6 products is replaced by the "
        "detector product β⁴Δ^(6Σs_a + Σ(3+6t_b))"
    )
    for combo in combinations_with_replacement(pool, 4):
        direct("·".join(combo), "∏ F1∪F6 (four factors)")
    for s in _families(top, 37):
        direct(f"α1·α1·{beta_name(3 + 9 * s, 3)}", "α1(α1β_{3+9s/3})")
    for s in _families(top, 109):
        direct(f"α1·α1·{beta_name(7 + 9 * s)}", "α1(α1β_{7+9s})")

    for s in _families(top, 10):
        for t in _families(top, 26):
            direct(f"α1·{beta_name(1 + 9 * s)}·{beta_name(2 + 9 * t)}", "α1β_{1+9s}β_{2+9t}")
            direct(f"α1·{beta_name(6 + 9 * s, 3)}·{beta_name(2 + 9 * t)}", "α1β_{6+9s/3}β_{2+9t}")
            direct(f"{beta_name(1 + 9 * s)}·{beta_name(5 + 9 * t)}", "β_{1+9s}β_{5+9t}")
            direct(f"{beta_name(6 + 9 * s, 3)}·{beta_name(5 + 9 * t)}", "β_{6+9s/3}β_{5+9t}")

    for w in _families(top, 81):
        x = f"⟨α1,α1,{beta_name(5 + 9 * w)}⟩"
        direct(f"α1·{x}", "α1⟨α1,α1,β_{5+9w}⟩")
        for combo in combinations_with_replacement(pool, 3):
            direct("·".join((x,) + combo), "⟨α1,α1,β_{5+9w}⟩ ∏ F1∪F6 (three factors)")
        if beta_degree(5 + 9 * w) + 7 <= top:
            juggled = check_product(j2, x)
            verdicts.append(
                juggled.model_copy(
                    update={
                        "word": f"⟨{beta_name(5 + 9 * w)},α1,α1⟩",
                        "family": "⟨β_{5+9t},α1,α1⟩",
                        "reason": "± ⟨α1,α1,β_{5+9t}⟩",
                    }
                )
            )

    for s in _families(top, 10):
        for t in _families(top, 82):
            bracket(f"α1·{beta_name(1 + 9 * s)}·{beta_name(6 + 9 * t, 3)}", "α1β_{1+9s}β_{6+9t/3}", "tmf-bracket")
    for w in _families(top, 74):
        for s in _families(top, 10):
            for t in range(s, len(_families(top, 10))):
                bracket(
                    f"{beta_name(1 + 9 * s)}·{beta_name(1 + 9 * t)}·{beta_name(5 + 9 * w)}",
                    "β_{1+9s}β_{1+9t}β_{5+9w}",
                    "j2-bracket",
                )
        for s in _families(top, 82):
            for t in range(s, len(_families(top, 82))):
                bracket(
                    f"{beta_name(6 + 9 * s, 3)}·{beta_name(6 + 9 * t, 3)}·{beta_name(5 + 9 * w)}",
                    "β_{6+9s/3}β_{6+9t/3}β_{5+9w}",
                    "j2-bracket",
                )

    verdicts.sort(key=lambda v: (v.degree, v.word))
    bad = [v for v in verdicts if not v.is_nonzero]
    logger.info(f"Product families through degree {top}: {len(verdicts)} instances, {len(bad)} not shown nonzero")
    for v in bad[:10]:
        logger.warning(f"  {v.degree:>4}  {v.word}: {v.verdict} ({v.reason})")
    return verdicts


def moore_reports(j2: J2Model, max_degree: Optional[int] = None) -> list[ProductVerdict]:
    """Products in π_* S/3 read off through ∂₀: ∂₀(x'·y) = x·y, so x·y ≠ 0 forces x'·y ≠ 0."""
    top = j2.max_degree if max_degree is None else min(max_degree, j2.max_degree)
    out: list[ProductVerdict] = []

    def report(moore_word: str, sphere_word: str, family: str):
        # β' 는 대응하는 β 보다 한 차수 위
        if word_degree(sphere_word) + 1 > top:
            return
        verdict = check_product(j2, sphere_word)
        out.append(
            verdict.model_copy(
                update={
                    "word": moore_word,
                    "degree": verdict.degree + 1,
                    "family": family,
                    "reason": f"∂₀ image {sphere_word}" + (f"; {verdict.reason}" if verdict.reason else ""),
                }
            )
        )

    for t in _families(top, 10):
        b1, b2, b6 = beta_name(1 + 9 * t), beta_name(2 + 9 * t), beta_name(6 + 9 * t, 3)
        b3, b7 = beta_name(3 + 9 * t, 3), beta_name(7 + 9 * t)
        report(f"α1·{b1}'", f"α1·{b1}", "α1·β'_{1+9t}")
        report(f"α1·{b2}'", f"α1·{b2}", "α1·β'_{2+9t}")
        report(f"α1·(α1{b3})'", f"α1·α1·{b3}", "α1·(α1β_{3+9t/3})'")
        report(f"α1·{b6}'", f"α1·{b6}", "α1·β'_{6+9t/3}")
        report(f"α1·(α1{b7})'", f"α1·α1·{b7}", "α1·(α1β_{7+9t})'")

    singles = []
    i = 1
    while beta_degree(i) <= top:
        if i % 9 in (1, 2, 5):
            singles.append(i)
        i += 1
    for s in singles:
        for t in singles:
            if (s % 9 == 1) or (t % 9 == 1):
                report(f"{beta_name(s)}'·{beta_name(t)}", f"{beta_name(s)}·{beta_name(t)}", "β'_sβ_t")
    for u in singles:
        for v in _families(top, 82):
            b6 = beta_name(6 + 9 * v, 3)
            report(f"{beta_name(u)}'·{b6}", f"{beta_name(u)}·{b6}", "β'_uβ_{6+9v/3}")
            report(f"{b6}'·{beta_name(u)}", f"{b6}·{beta_name(u)}", "β'_{6+9v/3}β_u")
    out.sort(key=lambda v: (v.degree, v.word))
    return out


def toda_relation_check(j2: J2Model, max_degree: Optional[int] = None) -> list[CheckResult]:
    """uv·β_s·β_t = st·β_u·β_v (s+t = u+v), compared as detector labels when both sides are nonzero."""
    top = j2.max_degree if max_degree is None else min(max_degree, j2.max_degree)
    indices = [i for i in range(1, top) if beta_degree(i) <= top and i % 9 in (1, 2, 5)]
    by_sum: dict[int, list[tuple[int, int]]] = {}
    for a in indices:
        for b in indices:
            if a <= b and beta_degree(a) + beta_degree(b) <= top:
                by_sum.setdefault(a + b, []).append((a, b))
    results = []
    for total, pairs in sorted(by_sum.items()):
        labels = {}
        for a, b in pairs:
            v = check_product(j2, f"{beta_name(a)}·{beta_name(b)}")
            if v.is_nonzero and (a * b) % 3:
                labels[(a, b)] = split_coefficient(v.label)[1]
        if len(set(labels.values())) > 1:
            results.append(CheckResult(name=f"β_sβ_t, s+t={total}", passed=False, detail=str(labels)))
        elif labels:
            results.append(CheckResult(name=f"β_sβ_t, s+t={total}", passed=True, detail=next(iter(labels.values()))))
    return results


# ── periodicity and catalogue ──


def periodicity_check(
    j2: J2Model, families: Optional[list[str]] = None, t_max: Optional[int] = None
) -> list[CheckResult]:
    """detector(x, t+1) = Δ⁶ · detector(x, t) for each periodic detected family."""
    results = []
    for name in families or list(PERIODIC_DETECTORS):
        names_of, boundary, base = PERIODIC_DETECTORS[name]
        t = 0
        while base + BETA_PERIOD * (t + 1) <= j2.max_degree and (t_max is None or t < t_max):
            current = _tmf_name(j2, names_of(t))
            shifted = _tmf_name(j2, [current, _m(c=6)]) if current else None
            expected = _tmf_name(j2, names_of(t + 1))
            wrap = (lambda x: f"∂({x})") if boundary else (lambda x: x)
            lhs, rhs = wrap(expected or "0"), wrap(shifted or "0")
            present = j2.summand(j2.display(base + BETA_PERIOD * (t + 1), lhs)) is not None
            results.append(
                CheckResult(
                    name=f"{name} t={t}→{t + 1}",
                    passed=lhs == rhs and present,
                    detail=f"{lhs} vs Δ⁶·{wrap(current or '0')} = {rhs}",
                )
            )
            t += 1
    failed = [r for r in results if not r.passed]
    for r in failed:
        logger.warning(f"Periodicity mismatch {r.name}: {r.detail}")
    return results


def nonexistence_and_status(
    registry: Optional[Registry] = None, max_degree: Optional[int] = None
) -> list[ExistenceFlag]:
    """Registry flags plus the divided β_{s3^n/j} classes no filtration ≤ 2 class of j² detects."""
    registry = registry or load_registry()
    top = max_degree if max_degree is not None else Settings().max_degree
    flags = list(registry.existence)
    s = 1
    while 16 * s * 27 - 4 - 2 <= top:
        if s % 3:
            n = 3
            while 16 * s * 3**n - 4 - 2 <= top:
                for j in range(1, n):
                    if j % 18 in FAILING_RESIDUES or beta_degree(s * 3**n, j) > top:
                        continue
                    flags.append(
                        ExistenceFlag(
                            family=beta_name(s * 3**n, j),
                            status="exists",
                            representative="not detected by classes of filtration ≤ 2",
                            citation="divided-nondetection",
                        )
                    )
                n += 1
        s += 1
    return flags

import re

from db.models import MonomialLabel

# 생성원 표기 순서: 계수, α, β, c4, c6, Δ
SYMBOL_ORDER = [("alpha", "α"), ("beta", "β"), ("a", "c4"), ("b", "c6"), ("c", "Δ")]
SYMBOL_FIELDS = {symbol: field for field, symbol in SYMBOL_ORDER}

# 장식 표기: bar = q0 상, tilde = ∂0 의 lift, ∂ = 경계, bar1/tilde1 = (3, v1^j) 몫
DECORATIONS = ("bar1", "tilde1", "bar", "tilde", "∂̄", "∂", "lift")

_COEFF_RE = re.compile(r"^3(?:\^(\d+))?")
_TOKEN_RE = re.compile(r"(α|β|c4|c6|Δ)(?:\^(\d+))?")
_WRAP_RE = re.compile(r"^(bar1|tilde1|bar|tilde|∂̄|∂|lift)\((.*)\)$")


def render_monomial(m: MonomialLabel, drop_coefficient: bool = False) -> str:
    """MonomialLabel -> canonical text, e.g. 'c4^2c6', '3Δ', 'αβΔ^4'."""
    parts = []
    if m.e and not drop_coefficient:
        parts.append("3" if m.e == 1 else f"3^{m.e}")
    for field, symbol in SYMBOL_ORDER:
        n = getattr(m, field)
        if n == 1:
            parts.append(symbol)
        elif n > 1:
            parts.append(f"{symbol}^{n}")
    return "".join(parts) or "1"


def parse_monomial(text: str) -> MonomialLabel:
    """Inverse of render_monomial. Raises ValueError on anything else."""
    raw = text.strip()
    if raw == "1":
        return MonomialLabel()
    fields = {"e": 0}
    rest = raw
    # '3Δ' 의 3 은 계수. 단독 '3' 은 허용하지 않음
    m = _COEFF_RE.match(rest)
    if m and len(rest) > m.end():
        fields["e"] = int(m.group(1) or 1)
        rest = rest[m.end():]
    pos = 0
    for token in _TOKEN_RE.finditer(rest):
        if token.start() != pos:
            raise ValueError(f"bad monomial: {text!r}")
        field = SYMBOL_FIELDS[token.group(1)]
        if field in fields:
            raise ValueError(f"repeated symbol in monomial: {text!r}")
        fields[field] = int(token.group(2) or 1)
        pos = token.end()
    if pos != len(rest) or pos == 0:
        raise ValueError(f"bad monomial: {text!r}")
    return MonomialLabel(**fields)


def decorate(decoration: str, inner: str) -> str:
    return f"{decoration}({inner})"


def strip_decorations(label: str) -> tuple[list[str], str]:
    """'bar1(bar(Δ^6))' -> (['bar1', 'bar'], 'Δ^6')."""
    decorations = []
    current = label.strip()
    while True:
        m = _WRAP_RE.match(current)
        if not m:
            return decorations, current
        decorations.append(m.group(1))
        current = m.group(2)


def split_coefficient(label: str) -> tuple[int, str]:
    """'3∂(c6)' -> (1, '∂(c6)'). Only a leading 3-power outside a decoration counts."""
    m = re.match(r"^3(?:\^(\d+))?(?=[∂a-z])", label)
    if not m:
        return 0, label
    return int(m.group(1) or 1), label[m.end():]

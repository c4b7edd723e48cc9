from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator

from utils.valuation import order_to_exponent

Order = Union[int, Literal["free"]]


class MonomialLabel(BaseModel):
    """3^e c4^a c6^b Δ^c times the torsion word α^alpha β^beta."""

    model_config = ConfigDict(frozen=True)

    e: int = 0
    a: int = 0
    b: int = 0
    c: int = 0
    alpha: int = 0
    beta: int = 0

    @property
    def degree(self) -> int:
        return 8 * self.a + 12 * self.b + 24 * self.c + 3 * self.alpha + 10 * self.beta

    @property
    def is_torsion(self) -> bool:
        return self.alpha > 0 or self.beta > 0

    @property
    def weight(self) -> int:
        # 모듈러 형식의 weight (degree 의 절반)
        return self.degree // 2

    def shift_delta(self, k: int) -> "MonomialLabel":
        return self.model_copy(update={"c": self.c + k})


class Summand(BaseModel):
    label: str
    order: Order = "free"  # "free" = 3-locally free rank 1, else 3^k
    degree: int
    filtration: int = 0
    provenance: str = "tmf"  # tmf, sphere-low, ker-lift, boundary, bar, tilde, bar1, tilde1
    key: Optional[MonomialLabel] = None  # 기반이 되는 tmf 단항식 (있으면)

    @field_validator("order")
    @classmethod
    def _order_is_power_of_three(cls, v):
        if v != "free":
            order_to_exponent(v)
        return v

    @field_validator("filtration")
    @classmethod
    def _filtration_nonnegative(cls, v):
        if v < 0:
            raise ValueError(f"filtration must be >= 0, got {v}")
        return v

    @property
    def is_free(self) -> bool:
        return self.order == "free"

    @property
    def exponent(self) -> Optional[int]:
        return None if self.is_free else order_to_exponent(self.order)


class GradedGroup(BaseModel):
    name: str = ""
    degrees: dict[int, list[Summand]] = {}
    max_degree: int

    _by_label: Optional[dict[str, Summand]] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_bounds_and_labels(self):
        seen: set[str] = set()
        for d, summands in self.degrees.items():
            if d > self.max_degree:
                raise ValueError(f"degree {d} exceeds max_degree {self.max_degree}")
            for s in summands:
                if s.label in seen:
                    raise ValueError(f"duplicate summand label {s.label!r}")
                seen.add(s.label)
        return self

    def at(self, d: int) -> list[Summand]:
        return self.degrees.get(d, [])

    def find(self, label: str) -> Optional[Summand]:
        # degrees 는 만든 뒤 바뀌지 않음
        if self._by_label is None:
            self._by_label = {s.label: s for summands in self.degrees.values() for s in summands}
        return self._by_label.get(label)

    def dimension(self, d: int) -> int:
        """Number of cyclic summands in degree d."""
        return len(self.at(d))

    def torsion_count(self, d: int) -> int:
        return sum(1 for s in self.at(d) if not s.is_free)


class GradedMorphism(BaseModel):
    """Blocks map source degree d to target degree d + degree_shift.

    A block is a list of rows, one per target summand, one column per source
    summand. Entries into a torsion summand of order 3^k are kept in [0, 3^k).
    """

    source: GradedGroup
    target: GradedGroup
    degree_shift: int = 0
    blocks: dict[int, list[list[int]]] = {}

    @model_validator(mode="after")
    def _canonical_entries(self):
        for d, rows in self.blocks.items():
            target = self.target.at(d + self.degree_shift)
            for i, row in enumerate(rows):
                order = target[i].order if i < len(target) else "free"
                if order != "free":
                    rows[i] = [x % order for x in row]
        return self

    def block(self, d: int) -> list[list[int]]:
        rows = self.blocks.get(d)
        if rows is not None:
            return rows
        n_src = len(self.source.at(d))
        n_tgt = len(self.target.at(d + self.degree_shift))
        return [[0] * n_src for _ in range(n_tgt)]

    def compose(self, first: "GradedMorphism") -> "GradedMorphism":
        """self ∘ first."""
        blocks = {}
        for d in first.source.degrees:
            a = first.block(d)
            b = self.block(d + first.degree_shift)
            n_src = len(first.source.at(d))
            blocks[d] = [
                [sum(b[i][k] * a[k][j] for k in range(len(a))) for j in range(n_src)]
                for i in range(len(b))
            ]
        return GradedMorphism(
            source=first.source,
            target=self.target,
            degree_shift=first.degree_shift + self.degree_shift,
            blocks=blocks,
        )


class ExtensionProblem(BaseModel):
    degree: int
    sub: list[Summand]  # coker 쪽 (경계 클래스)
    quotient: list[Summand]  # ker 쪽
    resolution: str = "unresolved"  # split, nonsplit, unresolved
    group: Optional[list[int]] = None  # nonsplit 일 때 결과 군의 차수 목록
    source: Optional[str] = None  # registry, oracle, default
    warning: Optional[str] = None

    @property
    def split_order_exponent(self) -> Optional[int]:
        total = 0
        for s in self.sub + self.quotient:
            if s.is_free:
                return None
            total += s.exponent
        return total


class ExtensionRule(BaseModel):
    name: str
    modulus: int
    residue: int
    min_degree: int = 0
    resolution: str  # split, nonsplit
    group: Optional[list[int]] = None  # nonsplit 결과 군의 차수 목록
    citation: str

    def matches(self, degree: int) -> bool:
        return degree >= self.min_degree and degree % self.modulus == self.residue % self.modulus


class FamilyElement(BaseModel):
    name: str  # e.g. "β_{6+9t/3}" 를 t 로 구체화한 "β6/3"
    kind: str  # alpha, beta, bracket, product
    i: Optional[int] = None
    j: Optional[int] = None
    t: Optional[int] = None
    factors: list[str] = []
    degree: int
    existence: str = "exists"  # exists, does-not-exist, unknown
    notes: Optional[str] = None
    family: Optional[str] = None  # 곱 패밀리 이름


class TodaFact(BaseModel):
    name: str
    bracket: str
    value: str
    model: str = "sphere"  # sphere, tmf, j2
    degree: Optional[int] = None
    period: int = 0  # Δ⁶ 주기 (0 이면 단일 사실)
    indeterminacy: Optional[str] = None
    vanishing_degrees: list[int] = []  # 비결정성 군이 0 이어야 하는 차수
    alpha_torsion_degrees: list[int] = []  # α1-torsion 이어야 하는 차수
    citation: str


class ExistenceFlag(BaseModel):
    family: str
    status: str  # exists, does-not-exist, unknown
    representative: Optional[str] = None
    citation: str


class DetectionRecord(BaseModel):
    element: FamilyElement
    verdict: str  # detected-by, detected-by-tmf, not-detected, unknown
    label: Optional[str] = None
    degree: int
    filtration: Optional[int] = None
    citation: Optional[str] = None


class ProductVerdict(BaseModel):
    word: str
    verdict: str  # nonzero-in-j2, zero-in-j2, nonzero-in-tmf, unknown
    label: Optional[str] = None
    degree: int
    reason: Optional[str] = None
    route: str = "direct"  # direct, bracket
    family: Optional[str] = None

    @property
    def is_nonzero(self) -> bool:
        return self.verdict in ("nonzero-in-j2", "nonzero-in-tmf")


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""


class ChartRow(BaseModel):
    stem: int
    filtration: int
    label: str
    order: str  # "free" 또는 3^k 의 십진 표기
    color: str  # blue, red, orange, black, green


class ChartLine(BaseModel):
    kind: str  # alpha, beta, v1
    source: str
    target: str


class ChartSpec(BaseModel):
    title: str
    window: tuple[int, int]
    min_filtration: int = 0
    mode: str = "provenance"  # provenance, hurewicz, plain
    rows: list[ChartRow] = []
    lines: list[ChartLine] = []


# ── data-file records (data/tmf3.dat) ──


class TorsionEntry(BaseModel):
    label: str
    degree: int
    order: int
    filtration: int
    line_no: int = 0


class FreeRule(BaseModel):
    a: Optional[int] = None  # None = 와일드카드 (*)
    b: Optional[int] = None
    c_mod3: Optional[int] = None
    e: int
    line_no: int = 0

    def matches(self, a: int, b: int, c: int) -> bool:
        return (
            (self.a is None or self.a == a)
            and (self.b is None or self.b == b)
            and (self.c_mod3 is None or self.c_mod3 == c % 3)
        )


class ProductEntry(BaseModel):
    left: str
    right: str
    result: str
    sign: int = 1
    line_no: int = 0


class V1Exception(BaseModel):
    source: str  # 예: "bar(3Δ)", Δ³ 주기로 확장
    target: Optional[str] = None  # None = 0
    line_no: int = 0


class SphereEntry(BaseModel):
    label: str
    degree: int
    order: Order
    filtration: int
    alias: str  # tmf^ψ 쪽 이름
    line_no: int = 0


class FixtureDigest(BaseModel):
    name: str
    file: str
    first: int
    last: int
    line_no: int = 0


class TableFile(BaseModel):
    version: int
    torsion: list[TorsionEntry] = []
    free_rules: list[FreeRule] = []
    products: list[ProductEntry] = []
    v1_exceptions: list[V1Exception] = []
    sphere: list[SphereEntry] = []
    fixtures: list[FixtureDigest] = []


class KoClass(BaseModel):
    """coefficient · u^power in π_* ko (u in degree 4)."""

    coefficient: int
    power: int


# ── quotient / product / report records ──


class QuotientClass(BaseModel):
    label: str
    kind: str  # bar, tilde, lift, ∂̄, bar1, tilde1
    base_label: str  # 몫을 취하기 전 모델의 라벨
    shift: int = 0  # tilde 의 생성원은 3^shift · base
    key: Optional[MonomialLabel] = None


class J2Product(BaseModel):
    factors: list[str]
    degree: int
    status: str  # nonzero, zero, unknown
    label: Optional[str] = None
    sign: int = 1
    reason: Optional[str] = None

    @property
    def is_nonzero(self) -> bool:
        return self.status == "nonzero"


class InjectivityRow(BaseModel):
    j: int
    degree: int  # D = 144·s·3^n
    s: int
    n: int
    source_dimension: int
    injective: bool
    hypothesis: bool  # 1 <= n 이고 2j <= s·3^n


class InjectivityReport(BaseModel):
    rows: list[InjectivityRow] = []
    failing: list[int] = []  # injective 가 아닌 j
    failing_mod18: list[int] = []
    failing_mod36: list[int] = []
    statement_matches: bool = False  # j ≢ 8, 10, 14, 15 (mod 18)
    proof_matches: bool = False  # j ≢ 8, 10, 14, 15 (mod 36)

    @property
    def supported_modulus(self) -> Optional[int]:
        """18 or 36 when exactly one residue reading agrees with the rows, else None."""
        if self.statement_matches == self.proof_matches:
            return None
        return 18 if self.statement_matches else 36

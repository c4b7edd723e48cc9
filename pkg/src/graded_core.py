import logging
from typing import Callable, Optional

from sympy.polys.domains import GF, QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import smith_normal_decomp

from db.models import ExtensionProblem, ExtensionRule, GradedGroup, GradedMorphism, Order, Summand
from src.errors import DegreeRangeError, RegistryConflictError, UnresolvedActionError
from utils.labels import decorate
from utils.valuation import PRIME, nu3

logger = logging.getLogger(__name__)

# oracle(problem) -> ("split" | "nonsplit" | "inconclusive", nonsplit 군 차수 목록)
ExtensionOracle = Callable[[ExtensionProblem], tuple[str, Optional[list[int]]]]


class SmithForm:
    """Integer Smith form with diagonal == left * matrix * right.

    left and right are unimodular over Z, hence invertible over the 3-local integers.
    """

    def __init__(
        self,
        matrix: list[list[int]],
        diagonal: list[list[int]],
        left: list[list[int]],
        right: list[list[int]],
    ):
        self.matrix = matrix
        self.diagonal = diagonal
        self.left = left
        self.right = right
        self._left_inverse: Optional[list[list[int]]] = None

    @property
    def invariants(self) -> list[int]:
        n = min(len(self.diagonal), len(self.diagonal[0]) if self.diagonal else 0)
        return [abs(self.diagonal[i][i]) for i in range(n)]

    @property
    def valuations(self) -> list[Optional[int]]:
        return [nu3(x) for x in self.invariants]

    @property
    def rank(self) -> int:
        return sum(1 for x in self.invariants if x != 0)

    @property
    def left_inverse(self) -> list[list[int]]:
        if self._left_inverse is None:
            self._left_inverse = _inverse(self.left)
        return self._left_inverse


class PartialMorphism:
    """A graded map whose blocks are built on demand.

    Sources listed in `unresolved` have no known value; asking for a block that
    contains one raises UnresolvedActionError. kernel and cokernel accept it in
    place of a GradedMorphism.
    """

    def __init__(
        self,
        source: GradedGroup,
        target: GradedGroup,
        degree_shift: int,
        compute: Callable[[int], list[list[int]]],
        unresolved: Optional[dict[str, str]] = None,
        action: str = "map",
    ):
        self.source = source
        self.target = target
        self.degree_shift = degree_shift
        self.unresolved = unresolved or {}
        self.action = action
        self._compute = compute
        self._blocks: dict[int, list[list[int]]] = {}

    def block(self, d: int) -> list[list[int]]:
        if d not in self._blocks:
            for s in self.source.at(d):
                if s.label in self.unresolved:
                    raise UnresolvedActionError(s.label, self.action)
            if d + self.degree_shift > self.target.max_degree and self.source.at(d):
                raise DegreeRangeError(
                    f"{self.action} from degree {d} leaves {self.target.name!r} "
                    f"(max_degree {self.target.max_degree})"
                )
            self._blocks[d] = self._compute(d)
        return self._blocks[d]

    def resolved(self, d: int) -> bool:
        return not any(s.label in self.unresolved for s in self.source.at(d))


# ── matrix helpers ──


def _to_domain(rows: list[list[int]], n_cols: int) -> DomainMatrix:
    return DomainMatrix([[ZZ(int(x)) for x in row] for row in rows], (len(rows), n_cols), ZZ)


def _to_rows(dm: DomainMatrix) -> list[list[int]]:
    return [[int(x) for x in row] for row in dm.to_list()]


def _inverse(rows: list[list[int]]) -> list[list[int]]:
    if not rows:
        return []
    inv = _to_domain(rows, len(rows)).convert_to(QQ).inv()
    return [[int(x) for x in row] for row in inv.convert_to(ZZ).to_list()]


def rank_mod3(rows: list[list[int]], n_cols: int) -> int:
    """Rank over F3."""
    if not rows or n_cols == 0:
        return 0
    return _to_domain(rows, n_cols).convert_to(GF(PRIME)).rank()


def _column(rows: list[list[int]], j: int) -> list[int]:
    return [row[j] for row in rows]


def _order_int(order: Order) -> int:
    return 0 if order == "free" else order


def smith_normal_form(
    matrix: list[list[int]],
    torsion_context: Optional[list[Order]] = None,
    n_cols: Optional[int] = None,
) -> SmithForm:
    """Smith form of an integer matrix.

    With a torsion context (one order per row) the presentation [M | diag(orders)]
    is reduced instead, so the diagonal describes the cokernel as a 3-local group.
    """
    rows = [list(r) for r in matrix]
    width = n_cols if n_cols is not None else (len(rows[0]) if rows else 0)
    for r in rows:
        if len(r) != width:
            raise ValueError(f"malformed matrix: row of length {len(r)}, expected {width}")
    if torsion_context is not None:
        if len(torsion_context) != len(rows):
            raise ValueError("torsion context must give one order per row")
        extra = [i for i, o in enumerate(torsion_context) if o != "free"]
        for i, r in enumerate(rows):
            r.extend(torsion_context[i] if i == k else 0 for k in extra)
        width += len(extra)
    smf, s, t = smith_normal_decomp(_to_domain(rows, width))
    return SmithForm(rows, _to_rows(smf), _to_rows(s), _to_rows(t))


# ── summand construction ──


def scaled_label(k: int, label: str) -> str:
    if k == 0:
        return label
    prefix = "3" if k == 1 else f"3^{k}"
    if label[:1].isdigit():
        return f"{prefix}({label})"
    return f"{prefix}{label}"


def _combination_label(vector: list[int], basis: list[Summand]) -> tuple[str, Optional[int]]:
    """Label for a basis combination; the second value is the index of a lone unit term."""
    terms = [(j, c) for j, c in enumerate(vector) if c != 0]
    if len(terms) == 1:
        j, c = terms[0]
        k = nu3(c)
        return scaled_label(k, basis[j].label), (j if k == 0 else None)
    parts = []
    for j, c in terms:
        body = basis[j].label
        if c == 1:
            parts.append(body)
        elif c == -1:
            parts.append(f"-{body}")
        else:
            parts.append(f"{c}{body}" if not body[:1].isdigit() else f"{c}({body})")
    return "+".join(parts).replace("+-", "-"), None


def _reduce(vector: list[int], basis: list[Summand]) -> list[int]:
    out = []
    for c, s in zip(vector, basis):
        if s.is_free:
            out.append(c)
        else:
            c %= s.order
            # 대칭 대표원: -1 을 order-1 대신 사용
            out.append(c - s.order if c > s.order // 2 else c)
    return out


def _make_summand(
    vector: list[int],
    basis: list[Summand],
    order: Order,
    degree: int,
    decoration: Optional[str],
) -> Optional[Summand]:
    vector = _reduce(vector, basis)
    if not any(vector):
        return None
    label, unit_index = _combination_label(vector, basis)
    if decoration:
        label = decorate(decoration, label)
    filtration = min(basis[j].filtration for j, c in enumerate(vector) if c != 0)
    key = basis[unit_index].key if unit_index is not None else None
    provenance = basis[unit_index].provenance if unit_index is not None else basis[0].provenance
    return Summand(
        label=label,
        order=order,
        degree=degree,
        filtration=filtration,
        provenance=provenance,
        key=key,
    )


def _order_from_invariant(x: int) -> Optional[Order]:
    if x == 0:
        return "free"
    k = nu3(x)
    return PRIME**k if k else None


def _sorted(pairs: list[tuple[Summand, int]]) -> list[Summand]:
    # 작은 valuation 먼저, 같으면 낮은 인덱스 먼저
    def rank(item):
        s, index = item
        return (s.exponent if not s.is_free else 10**9, index)

    return [s for s, _ in sorted(pairs, key=rank)]


def _is_monomial(block: list[list[int]]) -> bool:
    for row in block:
        if sum(1 for x in row if x) > 1:
            return False
    n = len(block[0]) if block else 0
    for j in range(n):
        if sum(1 for row in block if row[j]) > 1:
            return False
    return True


# ── kernel ──


def _check_degree(group: GradedGroup, d: int):
    if d > group.max_degree:
        raise DegreeRangeError(f"degree {d} exceeds max_degree {group.max_degree} of {group.name!r}")


def kernel(m: GradedMorphism, d: int, decoration: Optional[str] = None) -> list[Summand]:
    """Cyclic decomposition of ker(m) in source degree d, labelled from source labels."""
    _check_degree(m.source, d)
    src = m.source.at(d)
    if not src:
        return []
    tgt = m.target.at(d + m.degree_shift)
    block = m.block(d)
    if _is_monomial(block):
        return _monomial_kernel(src, tgt, block, d, decoration)
    return _general_kernel(src, tgt, block, d, decoration)


def _monomial_kernel(src, tgt, block, d, decoration) -> list[Summand]:
    pairs = []
    for j, s in enumerate(src):
        rows = [i for i in range(len(tgt)) if block[i][j]]
        if not rows:
            made = _make_summand([1 if k == j else 0 for k in range(len(src))], src, s.order, d, decoration)
            pairs.append((made, j))
            continue
        i = rows[0]
        x = block[i][j]
        if tgt[i].is_free:
            if not s.is_free:
                raise ValueError(f"ill-defined map from torsion {s.label!r} into free {tgt[i].label!r}")
            continue
        shift = tgt[i].exponent - nu3(x)
        if s.is_free:
            order: Order = "free"
        else:
            remaining = s.exponent - shift
            if remaining <= 0:
                continue
            order = PRIME**remaining
        vector = [PRIME**shift if k == j else 0 for k in range(len(src))]
        pairs.append((_make_summand(vector, src, order, d, decoration), j))
    return _sorted([(s, j) for s, j in pairs if s is not None])


def _general_kernel(src, tgt, block, d, decoration) -> list[Summand]:
    n, k = len(src), len(tgt)
    if k == 0:
        gens = [[1 if r == c else 0 for c in range(n)] for r in range(n)]
    else:
        # 관계식 [M | -D_B] 의 정수 kernel 을 source 좌표로 사영
        presentation = [
            list(block[i]) + [-_order_int(tgt[i].order) if c == i else 0 for c in range(k)]
            for i in range(k)
        ]
        sf = smith_normal_form(presentation, n_cols=n + k)
        cols = range(sf.rank, n + k)
        gens = [[sf.right[r][c] for c in cols] for r in range(n)]
    if not gens or not gens[0]:
        return []

    gf = smith_normal_form(gens, n_cols=len(gens[0]))
    rank_g = gf.rank
    if rank_g == 0:
        return []
    s_inv = gf.left_inverse
    inv = gf.invariants
    basis = [[inv[i] * s_inv[r][i] for r in range(n)] for i in range(rank_g)]

    # 토션 source 의 관계 D_A e_j 를 basis 좌표로
    torsion_cols = [j for j in range(n) if not src[j].is_free]
    relations = [[0] * len(torsion_cols) for _ in range(rank_g)]
    for col, j in enumerate(torsion_cols):
        w = [gf.left[i][j] * src[j].order for i in range(rank_g)]
        for i in range(rank_g):
            if w[i] % inv[i]:
                raise ValueError(f"ill-defined block in degree {d}: torsion relation leaves the kernel")
            relations[i][col] = w[i] // inv[i]

    rf = smith_normal_form(relations, n_cols=len(torsion_cols))
    r_inv = rf.left_inverse
    r_invariants = rf.invariants
    pairs = []
    for i in range(rank_g):
        order = _order_from_invariant(r_invariants[i]) if i < len(r_invariants) else "free"
        if i >= rf.rank:
            order = "free"
        if order is None:
            continue
        vector = [sum(r_inv[l][i] * basis[l][r] for l in range(rank_g)) for r in range(n)]
        made = _make_summand(vector, src, order, d, decoration)
        if made is not None:
            first = next(r for r, c in enumerate(vector) if c)
            pairs.append((made, first))
    return _sorted(pairs)


# ── cokernel ──


def cokernel(m: GradedMorphism, d: int, decoration: Optional[str] = "∂") -> list[Summand]:
    """Cyclic decomposition of coker(m) in target degree d."""
    _check_degree(m.target, d)
    tgt = m.target.at(d)
    if not tgt:
        return []
    source_degree = d - m.degree_shift
    src = m.source.at(source_degree) if source_degree <= m.source.max_degree else []
    block = m.block(source_degree) if src else [[] for _ in tgt]
    if _is_monomial(block):
        return _monomial_cokernel(src, tgt, block, d, decoration)
    return _general_cokernel(src, tgt, block, d, decoration)


def _monomial_cokernel(src, tgt, block, d, decoration) -> list[Summand]:
    pairs = []
    for i, t in enumerate(tgt):
        cols = [j for j in range(len(src)) if block[i][j]]
        unit = [1 if k == i else 0 for k in range(len(tgt))]
        if not cols:
            pairs.append((_make_summand(unit, tgt, t.order, d, decoration), i))
            continue
        v = nu3(block[i][cols[0]])
        if not t.is_free:
            v = min(v, t.exponent)
        if v == 0:
            continue
        pairs.append((_make_summand(unit, tgt, PRIME**v, d, decoration), i))
    return _sorted([(s, i) for s, i in pairs if s is not None])


def _general_cokernel(src, tgt, block, d, decoration) -> list[Summand]:
    n, k = len(src), len(tgt)
    sf = smith_normal_form(block, torsion_context=[t.order for t in tgt], n_cols=n)
    s_inv = sf.left_inverse
    invariants = sf.invariants
    pairs = []
    for i in range(k):
        x = invariants[i] if i < len(invariants) else 0
        order = _order_from_invariant(x)
        if order is None:
            continue
        vector = [s_inv[r][i] for r in range(k)]
        made = _make_summand(vector, tgt, order, d, decoration)
        if made is not None:
            first = next(r for r, c in enumerate(_reduce(vector, tgt)) if c)
            pairs.append((made, first))
    return _sorted(pairs)


# ── long exact sequence ──


def group_order_exponent(summands: list[Summand]) -> Optional[int]:
    """log₃ of the group order; None when a free summand makes it infinite."""
    total = 0
    for s in summands:
        if s.is_free:
            return None
        total += s.exponent
    return total


def solve_fiber_les(
    f: GradedMorphism, max_degree: Optional[int] = None
) -> tuple[GradedGroup, list[ExtensionProblem]]:
    """fib_d sits in 0 → coker(f)_{d+1} → fib_d → ker(f)_d → 0."""
    if f.degree_shift != 0:
        raise ValueError(f"fiber sequence needs a degree-0 map, got shift {f.degree_shift}")
    top = f.target.max_degree - 1
    if max_degree is not None:
        if max_degree > top:
            raise DegreeRangeError(f"fiber known only through degree {top}, asked for {max_degree}")
        top = max_degree

    degrees: dict[int, list[Summand]] = {}
    problems: list[ExtensionProblem] = []
    for d in range(0, top + 1):
        quotient = [
            s.model_copy(update={"provenance": "ker-lift"}) for s in kernel(f, d, decoration=None)
        ]
        sub = [
            s.model_copy(update={"degree": d, "filtration": s.filtration + 1, "provenance": "boundary"})
            for s in cokernel(f, d + 1, decoration="∂")
        ]
        if quotient or sub:
            degrees[d] = quotient + sub
        if quotient and sub:
            problems.append(ExtensionProblem(degree=d, sub=sub, quotient=quotient))
    group = GradedGroup(name=f"fib({f.source.name})", degrees=degrees, max_degree=top)
    logger.info(f"Fiber sequence solved through degree {top}: {len(problems)} extension problems")
    return group, problems


def _nonsplit_summands(problem: ExtensionProblem, orders: list[int]) -> list[Summand]:
    expected = problem.split_order_exponent
    got = sum(nu3(o) for o in orders)
    if expected is not None and expected != got:
        raise RegistryConflictError(
            f"degree {problem.degree}: nonsplit group of order 3^{got} cannot replace 3^{expected}"
        )
    joined = "|".join(s.label for s in problem.sub + problem.quotient)
    filtration = min(s.filtration for s in problem.quotient)
    return [
        Summand(
            label=f"⟨{joined}⟩" if len(orders) == 1 else f"⟨{joined}⟩#{k}",
            order=o,
            degree=problem.degree,
            filtration=filtration,
            provenance="boundary",
        )
        for k, o in enumerate(orders)
    ]


def apply_extension_policy(
    group: GradedGroup,
    problems: list[ExtensionProblem],
    rules: list[ExtensionRule],
    oracle: Optional[ExtensionOracle] = None,
) -> tuple[GradedGroup, list[ExtensionProblem]]:
    """Resolve problems by registry rule, then oracle, then split with a warning."""
    degrees = {d: list(ss) for d, ss in group.degrees.items()}
    resolved: list[ExtensionProblem] = []
    for problem in problems:
        matching = [r for r in rules if r.matches(problem.degree)]
        outcomes = {(r.resolution, tuple(r.group or ())) for r in matching}
        if len(outcomes) > 1:
            names = ", ".join(r.name for r in matching)
            raise RegistryConflictError(f"degree {problem.degree}: conflicting extension rules {names}")

        resolution, orders, source, warning = "unresolved", None, None, None
        if matching:
            resolution, orders, source = matching[0].resolution, matching[0].group, "registry"
        elif oracle is not None:
            verdict, oracle_orders = oracle(problem)
            if verdict in ("split", "nonsplit"):
                resolution, orders, source = verdict, oracle_orders, "oracle"
        if resolution == "unresolved":
            resolution, source = "split", "default"
            warning = f"degree {problem.degree}: no rule or oracle verdict, resolved as split"
            logger.warning(warning)

        if resolution == "nonsplit":
            if not orders:
                raise RegistryConflictError(f"degree {problem.degree}: nonsplit resolution without a group")
            replaced = {s.label for s in problem.sub + problem.quotient}
            kept = [s for s in degrees.get(problem.degree, []) if s.label not in replaced]
            degrees[problem.degree] = kept + _nonsplit_summands(problem, orders)

        resolved.append(
            problem.model_copy(
                update={"resolution": resolution, "group": orders, "source": source, "warning": warning}
            )
        )
    out = GradedGroup(name=group.name, degrees=degrees, max_degree=group.max_degree)
    return out, resolved

import logging
from typing import Optional

from db.models import CheckResult, ExtensionProblem, GradedGroup, GradedMorphism, MonomialLabel
from src.errors import UnresolvedActionError
from src.graded_core import PartialMorphism, solve_fiber_les
from src.moore_les import ALPHA, BETA, QuotientModel, module_action, v1_action
from src.tmf_table import TmfTable
from utils.valuation import PRIME, nu3, nu3_2pow_minus_1

logger = logging.getLogger(__name__)

__all__ = [
    "PsiAction",
    "Mod3PsiAction",
    "nu3_2pow_minus_1",
    "psi_minus_one",
    "compute_tmf_psi",
    "psi_on_mod3",
]


class PsiAction:
    """ψ^k on π_* tmf: torsion is fixed, a free class of degree 2w is scaled by k^w."""

    def __init__(self, k: int = 2):
        if k % PRIME == 0:
            raise ValueError(f"k must be a 3-adic unit, got {k}")
        self.k = k

    def scalar(self, key: MonomialLabel) -> int:
        if key.is_torsion:
            return 1
        return self.k ** (key.degree // 2)

    def valuation(self, degree: int) -> Optional[int]:
        """ν₃(k^w − 1) for a free class of degree 2w; None in degree 0 (ψ − 1 = 0)."""
        w = degree // 2
        if w == 0:
            return None
        if self.k == 2:
            return nu3_2pow_minus_1(w)
        return nu3(self.k**w - 1)

    def apply(self, key: MonomialLabel) -> dict[MonomialLabel, int]:
        return {key: self.scalar(key)}

    def check_multiplicative(self, table: TmfTable, max_total: int = 200) -> list[CheckResult]:
        """ψ(x)ψ(y) = ψ(xy) for every pair of basis classes with total degree <= max_total.

        Torsion coefficients are compared modulo the class order.
        """
        failures = []
        keys = []
        for d in range(max_total + 1):
            keys.extend(table.free_basis(d) + table.torsion_at(d))
        for i, x in enumerate(keys):
            for y in keys[i:]:
                if x.degree + y.degree > max_total:
                    continue
                product = table.multiply(x, y)
                lhs_scale = self.scalar(x) * self.scalar(y)
                for key, c in product.terms.items():
                    order = table.order(key)
                    lhs, rhs = lhs_scale * c, self.scalar(key) * c
                    if order != "free":
                        lhs, rhs = lhs % order, rhs % order
                    if lhs != rhs:
                        failures.append(
                            CheckResult(
                                name=f"ψ({table.name(x)}·{table.name(y)})",
                                passed=False,
                                detail=f"{table.name(key)}: {lhs} vs {rhs}",
                            )
                        )
        return failures

    def __repr__(self) -> str:
        return f"PsiAction(k={self.k})"


def psi_minus_one(table: TmfTable, k: int = 2) -> GradedMorphism:
    """ψ^k − 1 on π_* tmf: 0 on torsion, k^w − 1 on a free monomial of degree 2w."""
    psi = PsiAction(k)
    group = table.group()
    blocks = {}
    for d, summands in group.degrees.items():
        size = len(summands)
        rows = [[0] * size for _ in range(size)]
        for i, s in enumerate(summands):
            if s.is_free:
                rows[i][i] = psi.scalar(s.key) - 1
        blocks[d] = rows
    return GradedMorphism(source=group, target=group, degree_shift=0, blocks=blocks)


def compute_tmf_psi(
    table: TmfTable, max_degree: Optional[int] = None, k: int = 2
) -> tuple[GradedGroup, list[ExtensionProblem]]:
    """π_d tmf^ψ from the fibre sequence tmf^ψ → tmf → tmf (ψ − 1)."""
    top = table.max_degree - 1 if max_degree is None else max_degree
    group, problems = solve_fiber_les(psi_minus_one(table, k), max_degree=top)
    group = group.model_copy(update={"name": "tmf^ψ"})
    logger.info(f"tmf^ψ through degree {top}: {len(problems)} extension problems")
    return group, problems


class Mod3PsiAction:
    """ψ^k on π_* tmf/3 over F3.

    Bars of free classes are scaled by k^w mod 3, bars of torsion are fixed.
    A tilde class is fixed once it is forced: no bar shares its degree, it is
    v1 times a fixed class, or it is α or β times a fixed tilde class.
    """

    def __init__(self, model: QuotientModel, k: int, scalars: dict[str, int], unresolved: dict[str, str]):
        self.model = model
        self.k = k
        self.scalars = scalars
        self.unresolved = unresolved
        self._minus_one: Optional[PartialMorphism] = None

    def apply(self, label: str) -> dict[str, int]:
        if label in self.unresolved:
            raise UnresolvedActionError(label, "ψ")
        return {label: self.scalars[label]}

    def minus_one(self) -> PartialMorphism:
        if self._minus_one is None:
            group = self.model.group

            def compute(d: int) -> list[list[int]]:
                summands = group.at(d)
                rows = [[0] * len(summands) for _ in summands]
                for i, s in enumerate(summands):
                    rows[i][i] = (self.scalars[s.label] - 1) % PRIME
                return rows

            self._minus_one = PartialMorphism(
                source=group,
                target=group,
                degree_shift=0,
                compute=compute,
                unresolved=self.unresolved,
                action="ψ",
            )
        return self._minus_one


def psi_on_mod3(table: TmfTable, model: QuotientModel, k: int = 2) -> Mod3PsiAction:
    if model.ideal != "3" or model.ring is not table:
        raise ValueError(f"ψ on mod 3 needs tmf/3 over the same table, got {model.name}")
    if model.psi is not None and model.psi.k == k:
        return model.psi
    psi = PsiAction(k)
    scalars: dict[str, int] = {}
    tildes: list[str] = []
    for label, cls in model.classes.items():
        if cls.kind == "bar":
            scalars[label] = psi.scalar(cls.key) % PRIME
        else:
            tildes.append(label)

    # v1 와 α, β 곱으로 고정되는 tilde 를 닫힘까지 전파
    v1 = v1_action(model)
    v1_sources: dict[str, list[str]] = {}
    for source, target in v1.lines():
        if len(v1.images[source]) == 1:
            v1_sources.setdefault(target, []).append(source)
    module_sources: dict[str, list[str]] = {}
    for symbol in (ALPHA, BETA):
        for source, target in module_action(model, symbol):
            if model.classes[source].kind == "tilde":
                module_sources.setdefault(target, []).append(source)

    fixed = set(scalars)
    pending = set(tildes)
    for label in tildes:
        degree = model.group.find(label).degree
        if not any(s.provenance == "bar" for s in model.group.at(degree)):
            fixed.add(label)
            pending.discard(label)
    changed = True
    while changed and pending:
        changed = False
        for label in sorted(pending):
            sources = v1_sources.get(label, []) + module_sources.get(label, [])
            if any(s in fixed for s in sources):
                fixed.add(label)
                pending.discard(label)
                changed = True
    for label in tildes:
        if label in fixed:
            scalars[label] = 1

    unresolved = {label: "no v1 or module expression through a fixed class" for label in sorted(pending)}
    for label in unresolved:
        logger.warning(f"ψ on {label} is unresolved")
    action = Mod3PsiAction(model, k, scalars, unresolved)
    model.psi = action
    logger.info(f"ψ^{k} on {model.name}: {len(fixed)} fixed classes, {len(unresolved)} unresolved")
    return action

"""
graded_core 테스트 - Smith 표준형, kernel/cokernel, 올뭉치 긴 완전열, 확장 정책
kernel/cokernel 은 무작위 사상을 원소 전수 조사(numpy)로 검증
"""
import itertools
import math

import numpy as np
import pytest

from db.models import ExtensionRule, GradedGroup, GradedMorphism, Summand
from src.errors import DegreeRangeError, RegistryConflictError
from src.graded_core import (
    apply_extension_policy,
    cokernel,
    group_order_exponent,
    kernel,
    smith_normal_form,
    solve_fiber_les,
)

RANDOM_MORPHISMS = 400


def _group(name: str, prefix: str, orders: list, degree: int = 1, max_degree: int = 1) -> GradedGroup:
    summands = [Summand(label=f"{prefix}{k}", order=o, degree=degree) for k, o in enumerate(orders)]
    return GradedGroup(name=name, degrees={degree: summands} if summands else {}, max_degree=max_degree)


def _map(source: GradedGroup, target: GradedGroup, block: list[list[int]], d: int = 1) -> GradedMorphism:
    return GradedMorphism(source=source, target=target, degree_shift=0, blocks={d: block})


def _log3(n: int) -> int:
    k = round(math.log(n, 3))
    assert 3**k == n
    return k


# ── Smith form ──


def test_smith_diagonal():
    sf = smith_normal_form([[3, 0], [0, 9]])
    assert sf.invariants == [3, 9]
    assert sf.valuations == [1, 2]
    assert sf.rank == 2


def test_smith_reconstruction_random():
    rng = np.random.default_rng(7)
    for _ in range(50):
        rows, cols = rng.integers(1, 5, size=2)
        m = rng.integers(-12, 13, size=(rows, cols)).tolist()
        sf = smith_normal_form(m)
        product = np.array(sf.left) @ np.array(m) @ np.array(sf.right)
        assert product.tolist() == sf.diagonal
        # 대각 성분이 차례로 나누어짐
        nonzero = [x for x in sf.invariants if x]
        for a, b in zip(nonzero, nonzero[1:]):
            assert b % a == 0


def test_smith_torsion_context_presents_cokernel():
    # Z/9 에서 3 을 곱한 상: coker = Z/3
    sf = smith_normal_form([[3]], torsion_context=[9])
    assert sorted(x for x in sf.invariants if x != 1) == [3]


def test_smith_rejects_malformed():
    with pytest.raises(ValueError):
        smith_normal_form([[1, 2], [3]])
    with pytest.raises(ValueError):
        smith_normal_form([[1]], torsion_context=[3, 3])


# ── kernel / cokernel ──


def test_times_three_on_z9():
    src = _group("A", "x", [9])
    tgt = _group("B", "y", [9])
    m = _map(src, tgt, [[3]])
    ker = kernel(m, 1)
    assert [(s.label, s.order) for s in ker] == [("3x0", 3)]
    coker = cokernel(m, 1)
    assert [(s.label, s.order) for s in coker] == [("∂(y0)", 3)]


def test_times_three_on_free():
    src = _group("A", "x", ["free"])
    tgt = _group("B", "y", ["free"])
    m = _map(src, tgt, [[3]])
    assert kernel(m, 1) == []
    assert [(s.label, s.order) for s in cokernel(m, 1)] == [("∂(y0)", 3)]


def test_zero_map_keeps_everything():
    src = _group("A", "x", [3, "free"])
    tgt = _group("B", "y", [27])
    m = _map(src, tgt, [[0, 0]])
    assert {s.label for s in kernel(m, 1)} == {"x0", "x1"}
    assert [(s.label, s.order) for s in cokernel(m, 1)] == [("∂(y0)", 27)]


def test_kernel_degree_out_of_range():
    src = _group("A", "x", [3])
    m = _map(src, _group("B", "y", [3]), [[1]])
    with pytest.raises(DegreeRangeError):
        kernel(m, 5)


def _orders(rng, rank: int) -> list[int]:
    # |G| <= 3^8 이어야 전수 조사가 가능
    while True:
        orders = [3 ** int(a) for a in rng.integers(1, 5, size=rank)]
        if math.prod(orders) <= 3**8:
            return orders


def _random_morphism(rng) -> tuple[list[int], int, list[int], list[list[int]]]:
    """Torsion summands of order up to 81, then free source summands; entries in [-27, 27]."""
    n = int(rng.integers(1, 5))
    free = int(rng.integers(0, 5 - n))
    so = _orders(rng, n)
    to = _orders(rng, int(rng.integers(1, 5)))
    block = []
    for b in to:
        row = []
        for j in range(n + free):
            # Z/3^a → Z/3^b 가 잘 정의되려면 3^(b-a) 의 배수
            step = 3 ** max(0, _log3(b) - _log3(so[j])) if j < n else 1
            bound = 27 // step
            row.append(int(rng.integers(-bound, bound + 1)) * step)
        block.append(row)
    return so, free, to, block


def _torsion_counts(orders: list[int]) -> list[int]:
    """|G[3^k]| for k = 1..4 of a sum of cyclic groups."""
    return [math.prod(3 ** min(_log3(o), k) for o in orders) for k in range(1, 5)]


def _grid(orders: list[int]) -> np.ndarray:
    return np.array(list(itertools.product(*[range(o) for o in orders])), dtype=np.int64)


def _brute_force(so, free, to, block) -> tuple[list[int], list[int]]:
    """|G[3^k]| of the torsion of the kernel and of the cokernel, by enumerating elements."""
    full = np.array(block, dtype=np.int64)
    so_arr, to_arr = np.array(so, dtype=np.int64), np.array(to, dtype=np.int64)

    # Z^free ⊕ T 에서 kernel 의 torsion 은 T 위 kernel
    grid = _grid(so)
    images = (grid @ full[:, : len(so)].T) % to_arr
    ker = grid[np.all(images == 0, axis=1)]
    kernel_counts = [int(np.all((ker * 3**k) % so_arr == 0, axis=1).sum()) for k in range(1, 5)]

    # 상은 열들이 생성하는 부분군; 위수 81 이하이므로 81 배까지
    span = np.zeros((1, len(to)), dtype=np.int64)
    for col in full.T:
        steps = np.arange(81, dtype=np.int64)[:, None, None] * (col % to_arr)
        span = np.unique(((span[None, :, :] + steps) % to_arr).reshape(-1, len(to)), axis=0)
    weights = np.array([math.prod(to[i + 1:]) for i in range(len(to))], dtype=np.int64)
    image_codes = span @ weights
    target = _grid(to)
    cokernel_counts = [
        int(np.isin(((target * 3**k) % to_arr) @ weights, image_codes).sum()) // len(span)
        for k in range(1, 5)
    ]
    return kernel_counts, cokernel_counts


def test_kernel_cokernel_against_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(RANDOM_MORPHISMS):
        so, free, to, block = _random_morphism(rng)
        case = (so, free, to, [list(r) for r in block])
        m = _map(_group("A", "x", so + ["free"] * free), _group("B", "y", to), block)
        kernel_counts, cokernel_counts = _brute_force(so, free, to, block)

        ker = kernel(m, 1)
        assert sum(1 for s in ker if s.is_free) == free, case
        assert _torsion_counts([s.order for s in ker if not s.is_free]) == kernel_counts, case

        coker = cokernel(m, 1)
        assert not any(s.is_free for s in coker), case
        assert _torsion_counts([s.order for s in coker]) == cokernel_counts, case
        assert 3 ** (group_order_exponent(coker) or 0) == cokernel_counts[-1], case


# ── fibre sequence and extensions ──


@pytest.fixture
def fiber_setup():
    # a: Z/3 in 3, u: Z in 4; f = 0 on a, 3 on u
    group = GradedGroup(
        name="X",
        degrees={3: [Summand(label="a", order=3, degree=3)], 4: [Summand(label="u", degree=4)]},
        max_degree=4,
    )
    f = GradedMorphism(source=group, target=group, degree_shift=0, blocks={4: [[3]]})
    return solve_fiber_les(f)


def _rule(resolution: str, group=None, name: str = "r") -> ExtensionRule:
    return ExtensionRule(
        name=name, modulus=4, residue=3, resolution=resolution, group=group, citation="test"
    )


def test_fiber_sequence(fiber_setup):
    fib, problems = fiber_setup
    assert fib.max_degree == 3
    assert {(s.label, s.provenance) for s in fib.at(3)} == {("a", "ker-lift"), ("∂(u)", "boundary")}
    boundary = fib.find("∂(u)")
    assert boundary.degree == 3 and boundary.filtration == 1
    assert [p.degree for p in problems] == [3]
    assert problems[0].split_order_exponent == 2


def test_fiber_needs_degree_zero_map():
    group = _group("A", "x", [3])
    with pytest.raises(ValueError):
        solve_fiber_les(GradedMorphism(source=group, target=group, degree_shift=1))


def test_fiber_beyond_target():
    group = _group("A", "x", [3], max_degree=4)
    f = GradedMorphism(source=group, target=group)
    with pytest.raises(DegreeRangeError):
        solve_fiber_les(f, max_degree=4)


def test_nonsplit_rule(fiber_setup):
    fib, problems = fiber_setup
    out, resolved = apply_extension_policy(fib, problems, [_rule("nonsplit", [9])])
    assert [(s.label, s.order) for s in out.at(3)] == [("⟨∂(u)|a⟩", 9)]
    assert resolved[0].resolution == "nonsplit" and resolved[0].source == "registry"


def test_nonsplit_order_must_match(fiber_setup):
    fib, problems = fiber_setup
    with pytest.raises(RegistryConflictError):
        apply_extension_policy(fib, problems, [_rule("nonsplit", [27])])


def test_conflicting_rules(fiber_setup):
    fib, problems = fiber_setup
    rules = [_rule("split", name="one"), _rule("nonsplit", [9], name="two")]
    with pytest.raises(RegistryConflictError):
        apply_extension_policy(fib, problems, rules)


def test_oracle_then_default(fiber_setup):
    fib, problems = fiber_setup
    _, resolved = apply_extension_policy(fib, problems, [], oracle=lambda p: ("split", None))
    assert resolved[0].source == "oracle" and resolved[0].warning is None

    out, resolved = apply_extension_policy(fib, problems, [], oracle=lambda p: ("inconclusive", None))
    assert resolved[0].resolution == "split" and resolved[0].source == "default"
    assert "resolved as split" in resolved[0].warning
    assert len(out.at(3)) == 2

"""
ψ^k 테스트 - 스칼라, 3-adic valuation (sympy.factorint 오라클), tmf^ψ 저차 군
"""
import pytest
from sympy import factorint

from db.models import MonomialLabel
from src.adams_psi import Mod3PsiAction, PsiAction, compute_tmf_psi, nu3_2pow_minus_1
from src.errors import UnresolvedActionError
from utils.labels import parse_monomial


def test_k_must_be_unit():
    with pytest.raises(ValueError):
        PsiAction(3)
    with pytest.raises(ValueError):
        PsiAction(6)


def test_scalars():
    psi = PsiAction(2)
    assert psi.scalar(parse_monomial("c4")) == 16
    assert psi.scalar(parse_monomial("3Δ")) == 2**12
    assert psi.scalar(MonomialLabel(alpha=1, c=4)) == 1
    assert psi.valuation(0) is None


@pytest.mark.parametrize("d", range(1, 61))
def test_closed_form_against_factorint(d):
    assert nu3_2pow_minus_1(d) == factorint(2**d - 1).get(3, 0)


def test_valuation_other_unit():
    psi = PsiAction(5)
    for degree in range(2, 80, 2):
        w = degree // 2
        assert psi.valuation(degree) == factorint(5**w - 1).get(3, 0)


def test_closed_form_rejects_nonpositive():
    with pytest.raises(ValueError):
        nu3_2pow_minus_1(0)


def test_multiplicative(table):
    assert PsiAction(2).check_multiplicative(table, max_total=120) == []


def _orders(group, d) -> dict[str, object]:
    return {s.label: s.order for s in group.at(d)}


def test_tmf_psi_low_degrees(table):
    fiber, problems = compute_tmf_psi(table, 40)
    assert fiber.name == "tmf^ψ"
    assert _orders(fiber, 0) == {"1": "free"}
    assert _orders(fiber, 7) == {"∂(c4)": 3}
    assert _orders(fiber, 11) == {"∂(c6)": 9}
    assert _orders(fiber, 23) == {"∂(3Δ)": 9, "∂(c4^3)": 9}
    assert _orders(fiber, 35) == {"∂(c4^3c6)": 27, "∂(c6Δ)": 27}
    # 경계 클래스는 filtration 이 하나 올라감
    assert fiber.find("∂(c4)").filtration == 1
    assert fiber.find("∂(c4)").provenance == "boundary"
    assert {p.degree for p in problems} >= {27}


def test_mod3_psi_fixes_everything(j2):
    psi = j2.tmf_mod3.psi
    assert psi.apply("bar(c4)") == {"bar(c4)": 1}
    assert all(v == 1 for v in psi.scalars.values())


def test_unresolved_psi_raises(j2):
    action = Mod3PsiAction(j2.tmf_mod3, 2, {"bar(c4)": 1}, {"bar(c4)": "test"})
    with pytest.raises(UnresolvedActionError):
        action.apply("bar(c4)")
    with pytest.raises(UnresolvedActionError):
        action.minus_one().block(8)

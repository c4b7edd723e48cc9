"""
tmf 표 테스트 - 데이터 파일 파싱, 기저, 곱, q-전개
"""
import pytest

from db.datafile import read_table_file
from db.models import MonomialLabel
from src.errors import DataFileError, DegreeRangeError
from src.tmf_table import load_tmf
from utils.labels import parse_monomial, render_monomial

MINIMAL = """\
VERSION 1
[TORSION]
α   3   3   1
[FREE-RULE]
*   *   *   0
"""


def _names(keys) -> set[str]:
    return {render_monomial(k) for k in keys}


def test_data_file_sections(settings):
    data = read_table_file(settings.data_path)
    assert data.version == 1
    assert [e.label for e in data.torsion][:2] == ["α", "β"]
    assert {d.name for d in data.fixtures} >= {"figure1", "figure2", "hurewicz-74", "hurewicz-146"}
    assert [s.label for s in data.sphere][:4] == ["1", "α1", "α2", "β1"]


@pytest.mark.parametrize(
    "body, fragment",
    [
        (MINIMAL.replace("α   3", "α   4"), "has degree 3"),
        (MINIMAL.replace("[FREE-RULE]", "[FREE-RULES]"), "unknown section"),
        (MINIMAL.replace("VERSION 1\n", ""), "VERSION"),
        (MINIMAL + "[PRODUCTS]\nα α β\n", "columns"),
        (MINIMAL.replace("α   3   3   1", "αx   3   3   1"), "bad monomial"),
    ],
)
def test_malformed_data_file(tmp_path, body, fragment):
    path = tmp_path / "bad.dat"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(DataFileError) as exc:
        read_table_file(path)
    assert fragment in str(exc.value)
    assert exc.value.line_no >= 1


def test_missing_catch_all_free_rule(tmp_path):
    path = tmp_path / "bad.dat"
    path.write_text(MINIMAL.replace("*   *   *   0", "0   0   1   1"), encoding="utf-8")
    with pytest.raises(DataFileError):
        load_tmf(40, path, check_fixtures=False)


def test_free_basis(table):
    assert _names(table.free_basis(0)) == {"1"}
    assert _names(table.free_basis(24)) == {"c4^3", "3Δ"}
    assert _names(table.free_basis(48)) == {"c4^6", "c4^3Δ", "3Δ^2"}
    assert _names(table.free_basis(72)) == {"c4^9", "c4^6Δ", "c4^3Δ^2", "Δ^3"}
    assert table.free_basis(13) == []


def test_torsion_is_delta3_periodic(table):
    assert _names(table.torsion_at(27)) == {"αΔ"}
    assert _names(table.torsion_at(99)) == {"αΔ^4"}
    assert _names(table.torsion_at(112)) == {"β^4Δ^3"}
    assert table.torsion_at(6) == []
    assert table.order(parse_monomial("β^2Δ^6")) == 3
    assert table.filtration(parse_monomial("β^4Δ^3")) == 8


@pytest.mark.parametrize(
    "x, y, expected",
    [
        ("α", "β", "αβ"),
        ("α", "αΔ", "β^3"),
        ("αβ", "αΔ", "β^4"),
        ("α", "αβΔ^4", "β^4Δ^3"),
        ("β", "Δ^3", "βΔ^3"),
        ("αΔ", "Δ^3", "αΔ^4"),
    ],
)
def test_torsion_products(table, x, y, expected):
    product = table.multiply(x, y)
    assert product.single() == (parse_monomial(expected), 1)
    assert table.multiply(y, x) == product


@pytest.mark.parametrize(
    "x, y, reason",
    [
        ("α", "α", "degree"),
        ("α", "c4", "annihilator"),
        ("β", "3Δ", "annihilator"),
        ("β^4", "β", "degree"),
    ],
)
def test_zero_products_remember_why(table, x, y, reason):
    product = table.multiply(x, y)
    assert product.is_zero
    assert product.reason == reason


def test_c6_squared(table):
    product = table.multiply("c6", "c6")
    # c6² = c4³ − 1728Δ, 기저 3Δ 기준 계수 −576
    assert product.terms == {parse_monomial("c4^3"): 1, parse_monomial("3Δ"): -576}


def test_product_beyond_range(table):
    with pytest.raises(DegreeRangeError):
        table.multiply("Δ^8", "Δ")


def test_q_expansion(table):
    assert table.q_expansion(parse_monomial("c4^2c6")).power == 7
    assert table.q_expansion(parse_monomial("3Δ")) is None
    assert table.q_expansion(MonomialLabel(alpha=1)) is None
    assert table.check_q_expansion(120) == []


def test_group_labels_unique(table):
    group = table.group()
    labels = [s.label for ss in group.degrees.values() for s in ss]
    assert len(labels) == len(set(labels))
    assert group.max_degree == table.max_degree


def test_products_associative(table):
    assert table.check_associativity() == []


def test_associativity_catches_a_bad_sign(settings, tmp_path):
    path = tmp_path / "tmf3.dat"
    text = settings.data_path.read_text(encoding="utf-8")
    path.write_text(text.replace("αβ      αΔ     β^4     +1", "αβ      αΔ     β^4     -1"), encoding="utf-8")
    bad = load_tmf(120, path, check_fixtures=False)
    names = {r.name for r in bad.check_associativity(120)}
    # (α·β)·αΔ 는 표의 -β⁴, α·(β·αΔ) = α·αβΔ 는 β⁴
    assert "(α·β)·αΔ" in names

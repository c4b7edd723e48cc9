"""
j² 조립 테스트 - 구 표와의 이음새, 확장 문제, 곱, filtration-1 계수
"""
import logging
import shutil

import pytest

from config.settings import Settings
from db.models import SphereEntry
from src.errors import (
    DataFileError,
    DegreeRangeError,
    FixtureMismatchError,
    RegistryCitationError,
    SeamMismatchError,
)
from src.j2_assembly import (
    SphereTable,
    assemble_j2,
    check_seam,
    filtration_one_report,
    load_extension_rules,
    multiply_j2,
    resolve_extension_via_mod3,
)
from src.tmf_table import load_tmf


def _orders(j2, d) -> dict[str, object]:
    return {s.label: s.order for s in j2.group.at(d)}


@pytest.fixture(scope="module")
def small(settings):
    return load_tmf(60, settings.data_path, check_fixtures=False)


def test_low_degrees_come_from_the_sphere(j2):
    assert _orders(j2, 10) == {"β1": 3}
    assert _orders(j2, 11) == {"α3/2": 9}
    assert j2.summand("β1^2").provenance == "sphere-low"
    assert j2.alias("α3/2") == "∂(c6)"
    assert j2.display(13, "αβ") == "α1β1"
    assert j2.display(30, "β^3") == "β^3"


def test_upper_degrees_come_from_tmf_psi(j2):
    assert _orders(j2, 23) == {"∂(3Δ)": 9, "∂(c4^3)": 9}
    assert _orders(j2, 35) == {"∂(c4^3c6)": 27, "∂(c6Δ)": 27}
    assert j2.summand("∂(β^3)").filtration == 7
    assert _orders(j2, 144) == {}


def test_elementary_degrees_split(j2):
    problems = [p for p in j2.problems if p.degree % 72 == 27]
    assert problems
    for p in problems:
        assert p.resolution == "split" and p.source == "registry"
    assert _orders(j2, 27) == {"αΔ": 3, "∂(c4^2c6)": 3}


def test_dimension_oracle_agrees_at_27(j2):
    problem = next(p for p in j2.problems if p.degree == 27)
    assert resolve_extension_via_mod3(problem, j2.quotient, j2.fiber) == ("split", None)


@pytest.mark.parametrize(
    "factors, label",
    [
        (("α", "β"), "α1β1"),
        (("α1", "β1"), "α1β1"),
        (("β", "β"), "β1^2"),
        (("α", "∂(αΔ)"), "∂(β^3)"),
        (("β^2", "∂(Δ^6)"), "∂(β^2Δ^6)"),
    ],
)
def test_nonzero_products(j2, factors, label):
    product = multiply_j2(j2, *factors)
    assert product.is_nonzero
    assert product.label == label


def test_zero_products(j2):
    product = multiply_j2(j2, "α", "α")
    assert product.status == "zero" and product.reason == "filtration"
    assert multiply_j2(j2, "α", "c4").status != "nonzero"


def test_product_errors(j2):
    with pytest.raises(ValueError):
        multiply_j2(j2)
    with pytest.raises(DegreeRangeError):
        multiply_j2(j2, "∂(β^4Δ^6)", "β^2")


def test_filtration_one_report(j2):
    results = {r.name: r for r in filtration_one_report(j2)}
    for d in (3, 7, 11, 15, 19):
        assert results[f"π_{d} filtration 1"].passed
    # d ≡ 23 mod 24 에서는 ∂(3Δ^k) 가 하나 더 있음
    assert results["π_23 filtration 1"].detail == "2 vs 1"


def test_seam_mismatch(j2):
    entries = [
        e.model_copy(update={"order": 9}) if e.label == "β1^2" else e for e in j2.sphere.entries
    ]
    with pytest.raises(SeamMismatchError) as exc:
        check_seam(SphereTable(entries), j2.fiber)
    assert exc.value.degree == 20


@pytest.mark.parametrize(
    "entry",
    [
        SphereEntry(label="x", degree=23, order=3, filtration=1, alias="∂(c4^3)"),
        SphereEntry(label="x", degree=7, order=3, filtration=1, alias="bar(c4)"),
        SphereEntry(label="x", degree=7, order="free", filtration=1, alias="∂(c4)"),
    ],
)
def test_bad_sphere_rows(j2, entry):
    with pytest.raises(DataFileError):
        SphereTable(list(j2.sphere.entries) + [entry])


def test_range_checks(settings, small):
    with pytest.raises(DegreeRangeError):
        assemble_j2(20, settings, table=small)
    with pytest.raises(DegreeRangeError):
        assemble_j2(60, settings, table=small)


def test_extension_rules_need_citations(tmp_path):
    path = tmp_path / "extensions.yaml"
    path.write_text(
        "citations: {}\n"
        "rules:\n"
        "  - {name: r, modulus: 72, residue: 27, resolution: split, citation: missing}\n",
        encoding="utf-8",
    )
    with pytest.raises(RegistryCitationError):
        load_extension_rules(path)
    assert load_extension_rules(tmp_path / "absent.yaml") == []


def test_figure2_fixture_mismatch(settings, small, tmp_path):
    fixtures = tmp_path / "fixtures"
    shutil.copytree(settings.fixtures_dir, fixtures)
    path = fixtures / "figure2.tsv"
    text = path.read_text(encoding="utf-8")
    path.write_text(text.replace("3\t1\tα1\t3\tblue", "3\t1\tα1\t3\tred"), encoding="utf-8")
    tampered = Settings(fixtures_dir=fixtures, log_dir=tmp_path / "logs")
    with pytest.raises(FixtureMismatchError) as exc:
        assemble_j2(40, tampered, table=small)
    assert exc.value.name == "figure2"
    assert any("α1" in line for line in exc.value.diff)


def test_filtration_one_deviation_is_logged_as_info(j2, caplog):
    with caplog.at_level(logging.INFO, logger="src.j2_assembly"):
        filtration_one_report(j2)
    assert any("Filtration-1 rank differs" in r.getMessage() for r in caplog.records)
    assert not [r for r in caplog.records if r.levelno >= logging.WARNING]


def test_settings_fix_the_prime(tmp_path):
    # p = 3 은 utils.valuation.PRIME 로만 정해짐
    assert "prime" not in Settings.model_fields
    with pytest.raises(ValueError):
        Settings(psi_k=3, log_dir=tmp_path)

"""
Moore 스펙트럼 긴 완전열 테스트 - tmf/3^r, v1 작용, tmf/(3,v1^j), ∂Δ⁶ lift chain
"""
import shutil

import numpy as np
import pytest

from db.models import GradedGroup, MonomialLabel, Summand
from src.adams_psi import psi_on_mod3
from src.errors import FixtureMismatchError, UnresolvedActionError
from src.moore_les import (
    ALPHA,
    BETA,
    V1Action,
    alpha_rule_check,
    dimension_bookkeeping,
    mod3_tower,
    mod3r,
    mod_v1j,
    module_action,
    quotient_dimensions,
    quotient_commutation_check,
    v1_action,
    v1_injectivity_report,
    verify_periodicity_lift,
)
from src.tmf_table import load_tmf


@pytest.fixture(scope="module")
def small(settings):
    return load_tmf(60, settings.data_path, check_fixtures=False)


def test_mod3_low_degrees(j2):
    model = j2.tmf_mod3
    assert model.labels(0) == ["bar(1)"]
    assert model.labels(4) == ["tilde(α)"]
    assert set(model.labels(24)) == {"bar(c4^3)", "bar(Δ)"}
    assert model.dimension(5) == 0
    assert dimension_bookkeeping(j2.tmf, model) == []


def test_mod_nine_and_reduction(small):
    one, two, three = mod3_tower(small)
    assert two.name == "tmf/3^2"
    assert two.group.find("bar(c4)").order == 9
    assert two.group.find("bar(α)").order == 3
    assert three.group.find("bar(Δ)").order == 27
    assert dimension_bookkeeping(small, two) == []
    assert three.reduction.block(8) == [[1]]


def test_mod3r_range(small):
    with pytest.raises(ValueError):
        mod3r(small, 4)


def test_moore_of_plain_group():
    group = GradedGroup(
        name="X", degrees={2: [Summand(label="x", order=9, degree=2)]}, max_degree=3
    )
    model = mod3r(group)
    assert [(s.label, s.order) for s in model.group.at(2)] == [("bar(x)", 3)]
    assert [(s.label, s.order) for s in model.group.at(3)] == [("tilde(3x)", 3)]


def test_v1_rules(j2):
    v1 = v1_action(j2.tmf_mod3)
    assert v1.image("bar(c4)") == {"bar(c6)": 1}
    assert v1.image("bar(1)") == {"tilde(α)": 1}
    # 데이터 파일의 예외 항목
    assert v1.image("tilde(α)") == {"bar(c4)": 1}
    assert v1.image("bar(β^2)") == {}
    assert alpha_rule_check(j2.tmf_mod3) and all(r.passed for r in alpha_rule_check(j2.tmf_mod3))


def test_v1_only_on_mod3(small):
    _, two, _ = mod3_tower(small)
    with pytest.raises(ValueError):
        v1_action(two)


def test_v1_unresolved_raises(j2):
    v1 = V1Action(j2.tmf_mod3, {}, {"bar(c4)": "test"})
    with pytest.raises(UnresolvedActionError):
        v1.image("bar(c4)")
    with pytest.raises(UnresolvedActionError):
        v1.block(8)


def test_v1_power_is_composite(j2):
    v1 = v1_action(j2.tmf_mod3)
    once = v1.block(0)
    twice = v1.power(2).block(0)
    tilde = j2.tmf_mod3.labels(4).index("tilde(α)")
    assert once[tilde] == [1]
    assert twice == [[1 if label == "bar(c4)" else 0] for label in j2.tmf_mod3.labels(8)]


def test_module_action(j2):
    alpha = module_action(j2.tmf_mod3, ALPHA)
    beta = module_action(j2.tmf_mod3, BETA)
    assert ("bar(1)", "bar(α)") in alpha
    assert ("bar(α)", "bar(αβ)") in beta
    assert ("tilde(α)", "tilde(αβ)") in beta


def test_mod_v1j(j2):
    with pytest.raises(ValueError):
        mod_v1j(j2.tmf_mod3, 0)
    quotient = mod_v1j(j2.tmf_mod3, 1)
    assert quotient.name == "tmf/(3,v1^1)"
    assert quotient.labels(144) == ["bar1(bar(Δ^6))"]
    assert quotient.dimension(145) == 0
    # bar(1) 은 v1 의 상이 아님
    assert quotient.labels(0) == ["bar1(bar(1))"]
    assert quotient_dimensions(quotient, 0, 0) == [(0, ["bar1(bar(1))"])]


def test_periodicity_lift_chain(j2):
    results = verify_periodicity_lift(j2, j2.tmf_mod3, j2.quotient)
    assert len(results) == 8
    assert all(r.passed for r in results)


def test_injectivity_report_shape(j2):
    report = v1_injectivity_report(j2.tmf_mod3, j_max=10)
    assert {row.degree for row in report.rows} == {144}
    assert all(row.injective for row in report.rows if row.j == 0)
    assert report.failing == [8, 10]
    # j <= 17 에서는 두 법을 가를 수 없음
    assert report.statement_matches and report.proof_matches
    assert report.supported_modulus is None


def test_injectivity_mod18_not_mod36(j2):
    report = v1_injectivity_report(j2.tmf_mod3, j_max=35)
    assert report.failing == [8, 10, 14, 15, 26, 28, 32, 33]
    assert report.failing_mod18 == [8, 10, 14, 15]
    assert report.statement_matches and not report.proof_matches
    assert report.supported_modulus == 18


def test_injectivity_through_576(wide_j2):
    report = v1_injectivity_report(wide_j2.tmf_mod3, j_max=35)
    assert {row.degree for row in report.rows} == {144, 288, 432, 576}
    assert report.failing == [8, 10, 14, 15, 26, 28, 32, 33]
    assert report.failing_mod18 == [8, 10, 14, 15]
    assert report.failing_mod36 == [8, 10, 14, 15, 26, 28, 32, 33]
    assert report.supported_modulus == 18


def test_figure1_fixture_mismatch(settings, tmp_path):
    fixtures = tmp_path / "fixtures"
    shutil.copytree(settings.fixtures_dir, fixtures)
    path = fixtures / "figure1.tsv"
    lines = path.read_text(encoding="utf-8").splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
    with pytest.raises(FixtureMismatchError) as exc:
        load_tmf(60, settings.data_path, fixtures)
    assert exc.value.name == "figure1"
    assert exc.value.diff


# ── shared models and lookups ──


def test_tmf_mod3_built_once(table, j2):
    model = mod3r(table)
    assert model is j2.tmf_mod3
    assert v1_action(model) is v1_action(j2.tmf_mod3)
    assert psi_on_mod3(table, model) is model.psi
    assert mod3r(table, 2) is mod3r(table, 2)


def test_find_class_ignores_three_power(j2):
    model = j2.tmf_mod3
    delta = MonomialLabel(c=1)
    assert model.find_class("bar", delta).label == "bar(Δ)"
    assert model.find_class("bar", delta.model_copy(update={"e": 1})).label == "bar(Δ)"
    assert model.find_class("tilde", ALPHA).label == "tilde(α)"
    # c4 는 free 라 tilde 가 없음
    assert model.find_class("tilde", MonomialLabel(a=1)) is None
    assert model.group.find("bar(Δ)").degree == 24
    assert model.group.find("bar(nothing)") is None


def test_wide_model_shares_tmf_mod3(wide_j2):
    assert wide_j2.max_degree == 600
    assert wide_j2.tmf_mod3 is mod3r(wide_j2.tmf)
    assert wide_j2.tmf_mod3.max_degree == 601
    assert dimension_bookkeeping(wide_j2.tmf, wide_j2.tmf_mod3) == []


# ── coherence of v1 powers and iterated quotients ──


def _matrix(model, rows, d_from: int, d_to: int) -> np.ndarray:
    return np.array(rows, dtype=np.int64).reshape(model.dimension(d_to), model.dimension(d_from))


@pytest.mark.parametrize("d", range(0, 73))
def test_v1_cube_over_a_delta_period(j2, d):
    model = j2.tmf_mod3
    v1 = v1_action(model)
    cube = _matrix(model, v1.power(3).block(d), d, d + 12)
    once = _matrix(model, v1.block(d + 8), d + 8, d + 12)
    twice = _matrix(model, v1.power(2).block(d), d, d + 8)
    assert np.array_equal(cube, (once @ twice) % 3)
    twice_after = _matrix(model, v1.power(2).block(d + 4), d + 4, d + 12)
    first = _matrix(model, v1.block(d), d, d + 4)
    assert np.array_equal(cube, (twice_after @ first) % 3)


def test_iterated_quotients_agree(j2):
    results = quotient_commutation_check(j2.tmf_mod3, j_values=(1, 2, 3))
    assert [r.name for r in results] == [
        "tmf/(3,v1^1) agrees with v1^1∘v1^0 through 201",
        "tmf/(3,v1^2) agrees with v1^1∘v1^1 through 201",
        "tmf/(3,v1^3) agrees with v1^2∘v1^1 through 201",
    ]
    assert all(r.passed for r in results), [r.detail for r in results]

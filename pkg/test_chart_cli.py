"""
그림 출력과 명령행 테스트 - TSV/SVG 결정성, fixture 와 같은 출력, 종료 코드, 리포트 파일
"""
import pytest

from main import EXIT_FAILED, EXIT_OK, EXIT_USAGE, cli
from src.chart import emit_chart, emit_chart_lines, figure_chart, j2_chart, save_chart
from src.errors import DegreeRangeError
from src.pipeline import Pipeline
from src.reporter import ReportGenerator, emit_report

HEADER = "stem\tfiltration\tlabel\torder\tcolor\n"


def _fixture(settings, name: str) -> str:
    return (settings.fixtures_dir / name).read_text(encoding="utf-8")


# ── charts ──


def test_figure2_tsv_matches_fixture(j2, settings):
    assert emit_chart(figure_chart("figure2", j2), "tsv") == _fixture(settings, "figure2.tsv")


def test_figure1_lines_match_fixture(j2, settings):
    spec = figure_chart("figure1", j2)
    assert emit_chart(spec, "tsv") == _fixture(settings, "figure1.tsv")
    assert emit_chart_lines(spec) == _fixture(settings, "figure1_lines.tsv")


@pytest.mark.parametrize("name, fixture", [("figure4", "hurewicz_74_112.tsv"), ("figure5", "hurewicz_146_184.tsv")])
def test_hurewicz_windows(j2, hurewicz, settings, name, fixture):
    _, closure = hurewicz
    assert emit_chart(figure_chart(name, j2, closure), "tsv") == _fixture(settings, fixture)


def test_hurewicz_needs_closure(j2):
    with pytest.raises(ValueError):
        figure_chart("figure4", j2)


def test_empty_window_is_header_only(j2):
    assert emit_chart(j2_chart(j2, (5, 6)), "tsv") == HEADER


def test_window_checks(j2):
    with pytest.raises(DegreeRangeError):
        j2_chart(j2, (0, j2.max_degree + 1))
    with pytest.raises(DegreeRangeError):
        j2_chart(j2, (10, 5))
    with pytest.raises(ValueError):
        emit_chart(j2_chart(j2, (0, 10)), "png")


def test_svg_is_deterministic(j2, tmp_path):
    spec = figure_chart("figure2", j2)
    first = emit_chart(spec, "svg")
    assert first == emit_chart(figure_chart("figure2", j2), "svg")
    assert first.startswith("<?xml") and first.rstrip().endswith("</svg>")
    # Z/27 은 점과 원 두 개
    assert first.count("<circle") > len([r for r in spec.rows if r.order != "free"])
    path = save_chart(spec, tmp_path / "out" / "figure2.svg")
    assert path.read_text(encoding="utf-8") == first


# ── reports ──


def test_detection_report(hurewicz, registry, settings):
    records, _ = hurewicz
    text = emit_report(records, registry=registry)
    assert text.startswith("# j² detection report")
    assert "## Citations" in text
    assert "`x153-open`" in text
    degrees = [int(line.split("|")[1]) for line in text.splitlines() if line.startswith("| ") and line[2].isdigit()]
    assert degrees == sorted(degrees)

    path = ReportGenerator(settings).save_detections("detection", records)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "degree,element,family,verdict,label,filtration,citation"
    assert len(lines) == len(records) + 1


def test_regenerate(settings, table, j2, hurewicz):
    pipeline = Pipeline(settings)
    pipeline._tables[table.max_degree] = table
    pipeline._models[j2.max_degree] = j2
    pipeline._hurewicz[j2.max_degree] = hurewicz
    written = {p.name for p in pipeline.regenerate(j2.max_degree)}
    assert {"figure1.svg", "figure1_lines.tsv", "figure5.tsv", "detection.md", "products.csv"} <= written
    assert (settings.export_dir / "figure2.tsv").read_text(encoding="utf-8") == _fixture(settings, "figure2.tsv")


# ── command line ──


def test_cli_emit_chart(settings, tmp_path):
    out = tmp_path / "figure2.tsv"
    code = cli(["emit", "chart", "--figure", "figure2", "--format", "tsv", "--max-degree", "40", "--out", str(out)])
    assert code == EXIT_OK
    assert out.read_text(encoding="utf-8") == _fixture(settings, "figure2.tsv")


def test_cli_compute_to_stdout(capsys):
    assert cli(["compute", "tmf", "--max-degree", "40"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith(HEADER)
    assert "\tαΔ\t3\t" in out


def test_cli_usage_errors():
    assert cli(["emit", "chart", "--window", "0:50", "--max-degree", "40", "--format", "tsv"]) == EXIT_USAGE
    assert cli(["compute", "nothing"]) == EXIT_USAGE
    assert cli(["emit", "chart", "--format", "md"]) == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        cli(["frobnicate", "x"])
    assert exc.value.code == EXIT_USAGE


def test_cli_bad_data_file(tmp_path):
    bad = tmp_path / "bad.dat"
    bad.write_text("VERSION 1\n[TORSION]\nα 4 3 1\n", encoding="utf-8")
    assert cli(["compute", "tmf", "--max-degree", "40", "--data", str(bad)]) == EXIT_FAILED


def test_cli_fixture_mismatch(settings, tmp_path):
    data = tmp_path / "tmf3.dat"
    text = (settings.data_path).read_text(encoding="utf-8")
    # α 의 filtration 을 바꾸면 figure1 이 어긋남
    data.write_text(text.replace("α         3       3      1", "α         3       3      2"), encoding="utf-8")
    assert cli(["compute", "tmf", "--max-degree", "60", "--data", str(data)]) == EXIT_FAILED


def test_cli_compute_formats_and_colours(settings, tmp_path, capsys):
    # 0..40 의 j² 는 figure2 와 같은 행과 색
    assert cli(["compute", "j2", "--max-degree", "40"]) == EXIT_OK
    assert capsys.readouterr().out == _fixture(settings, "figure2.tsv")

    out = tmp_path / "j2.svg"
    assert cli(["compute", "j2", "--max-degree", "40", "--format", "svg", "--out", str(out)]) == EXIT_OK
    assert out.read_text(encoding="utf-8").startswith("<?xml")

    assert cli(["compute", "tmf-psi", "--max-degree", "40"]) == EXIT_OK
    colours = {line.split("\t")[-1] for line in capsys.readouterr().out.splitlines()[1:]}
    assert colours == {"blue", "red"}
    assert cli(["compute", "j2", "--max-degree", "40", "--format", "md"]) == EXIT_USAGE


def test_cli_bad_ideal_and_window():
    assert cli(["compute", "quotient", "--ideal", "3,v1^x", "--max-degree", "40"]) == EXIT_USAGE
    assert cli(["compute", "quotient", "--ideal", "81", "--max-degree", "40"]) == EXIT_USAGE
    assert cli(["emit", "chart", "--window", "a:b", "--max-degree", "40", "--format", "tsv"]) == EXIT_USAGE


def test_cli_internal_value_error_is_a_failure(monkeypatch):
    def broken(self, max_degree):
        raise ValueError("malformed matrix")

    monkeypatch.setattr(Pipeline, "table", broken)
    assert cli(["compute", "tmf", "--max-degree", "40"]) == EXIT_FAILED

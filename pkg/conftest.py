"""
공용 fixture - 모델은 세션마다 한 번만 만든다
tmf 표는 201, j² 는 200 까지 (Hurewicz 창 146–184 와 lift chain 166 을 덮는 최소 범위)
wide_j2 는 기본 설정 범위인 600 까지
"""
import logging
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from config.settings import Settings
from src.detection import hurewicz_closure, hurewicz_image, load_registry
from src.j2_assembly import assemble_j2
from src.tmf_table import load_tmf

MODEL_TOP = 200
# 기본 max_degree; D = 576 까지의 주입성과 Hurewicz 상을 덮음
WIDE_TOP = 600

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
)
logging.getLogger("sympy").setLevel(logging.WARNING)


@pytest.fixture(scope="session")
def settings(tmp_path_factory) -> Settings:
    out = tmp_path_factory.mktemp("jtwo")
    return Settings(export_dir=out / "exports", log_dir=out / "logs")


@pytest.fixture(scope="session")
def table(settings):
    return load_tmf(MODEL_TOP + 1, settings.data_path, settings.fixtures_dir)


@pytest.fixture(scope="session")
def j2(settings, table):
    return assemble_j2(MODEL_TOP, settings, table=table)


@pytest.fixture(scope="session")
def registry(settings):
    return load_registry(settings.registry_path)


@pytest.fixture(scope="session")
def hurewicz(j2):
    records = hurewicz_image(j2)
    return records, hurewicz_closure(j2, records)


@pytest.fixture(scope="session")
def wide_j2(settings):
    return assemble_j2(WIDE_TOP, settings)

from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Arithmetic (p = 3 은 utils.valuation.PRIME 고정, ψ^k 의 k 는 3-adic unit)
    psi_k: int = 2

    # Degree bounds
    max_degree: int = 600
    product_families_max_degree: int = 900
    injectivity_j_max: int = 35

    # Paths - 프로젝트 루트 자동 감지 (settings.py 기준 상위 디렉토리)
    base_dir: Path = Path(__file__).resolve().parent.parent
    data_path: Optional[Path] = Field(default=None, validation_alias="JTWO_DATA")
    fixtures_dir: Optional[Path] = None
    export_dir: Optional[Path] = None
    log_dir: Optional[Path] = None
    extensions_path: Optional[Path] = None
    registry_path: Optional[Path] = None

    # Warnings become failures (exit code 2)
    strict: bool = False

    model_config = {
        "env_file": str(Path(__file__).resolve().parent.parent / ".env"),
        "env_file_encoding": "utf-8",
        "extra": "ignore",
        "populate_by_name": True,
    }

    def model_post_init(self, __context):
        if self.psi_k % 3 == 0:
            raise ValueError(f"psi_k must be a 3-adic unit, got {self.psi_k}")
        if self.data_path is None:
            self.data_path = self.base_dir / "data" / "tmf3.dat"
        if self.fixtures_dir is None:
            self.fixtures_dir = self.base_dir / "data" / "fixtures"
        if self.export_dir is None:
            self.export_dir = self.base_dir / "data" / "exports"
        if self.log_dir is None:
            self.log_dir = self.base_dir / "logs"
        if self.extensions_path is None:
            self.extensions_path = self.base_dir / "config" / "extensions.yaml"
        if self.registry_path is None:
            self.registry_path = self.base_dir / "config" / "registry.yaml"

"""
전체 재생성 파이프라인
tmf → tmf^ψ → j² → Hurewicz 상 → 곱 검증 → 그림/리포트 생성

사용법:
  # 기본 (max_degree 600, 그림 1–5 와 리포트를 data/exports/ 에)
  python run_pipeline.py

  # 차수 범위 변경
  python run_pipeline.py --max-degree 200

  # 검증까지 (verify paper 와 같은 검사)
  python run_pipeline.py --verify
"""
import argparse
import logging
import sys
from datetime import datetime
from pathlib import Path

sys.stdout.reconfigure(encoding="utf-8", errors="replace")
sys.path.insert(0, str(Path(__file__).parent))

from config.settings import Settings
from src.errors import JTwoError
from src.pipeline import Pipeline


def setup_logging(settings: Settings):
    log_dir = Path(settings.log_dir)
    log_dir.mkdir(parents=True, exist_ok=True)

    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
        handlers=[
            logging.StreamHandler(),
            logging.FileHandler(
                log_dir / f"pipeline_{datetime.now().strftime('%Y%m%d_%H%M')}.log",
                encoding="utf-8",
            ),
        ],
    )
    logging.getLogger("sympy").setLevel(logging.WARNING)


def main(max_degree: int | None, verify: bool) -> int:
    settings = Settings()
    setup_logging(settings)
    logger = logging.getLogger("pipeline")
    pipeline = Pipeline(settings)
    top = settings.max_degree if max_degree is None else max_degree
    logger.info(f"파이프라인 시작: max_degree {top}")

    try:
        # ── Step 1: 모델 ──
        logger.info("=" * 60)
        logger.info("STEP 1: tmf, tmf/3, j² 조립")
        logger.info("=" * 60)
        j2 = pipeline.j2(top)
        for warning in j2.warnings():
            logger.warning(warning)

        # ── Step 2: Hurewicz 상 ──
        logger.info("=" * 60)
        logger.info("STEP 2: Hurewicz 상과 창 fixture")
        logger.info("=" * 60)
        records, closure = pipeline.hurewicz(top)
        logger.info(f"검출 레코드 {len(records)}개, 닫힘 {len(closure)}개")

        # ── Step 3: 그림과 리포트 ──
        logger.info("=" * 60)
        logger.info("STEP 3: 그림과 리포트 생성")
        logger.info("=" * 60)
        written = pipeline.regenerate(top)
        for path in written:
            logger.info(f"  {path}")

        # ── Step 4: 검증 (선택) ──
        if verify:
            logger.info("=" * 60)
            logger.info("STEP 4: 검증")
            logger.info("=" * 60)
            results = pipeline.verify_all(top)
            failed = [r for r in results if not r.passed]
            for r in failed:
                logger.error(f"✗ {r.name}: {r.detail}")
            logger.info(f"검증: {len(results) - len(failed)} 통과, {len(failed)} 실패")
            if failed:
                return 2
    except JTwoError as e:
        logger.error(str(e))
        return 2

    logger.info("파이프라인 완료")
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="j² 그림/리포트 재생성")
    parser.add_argument("--max-degree", type=int, default=None, help="차수 상한 (기본 600)")
    parser.add_argument("--verify", action="store_true", help="검증 단계까지 실행")
    args = parser.parse_args()
    sys.exit(main(args.max_degree, args.verify))

"""
供水管道养护规划 - CLI入口

rehab.py 仅作为 CLI 入口点。

架构:
- core/: 退化环境、管道清单、转移数据集
- network/: MLP、Adam、模型文件
- agents/: 基线策略、DQN、CQL、数据采集
- evaluation/: 策略评估与报告
- cli/: CLI 处理模块
"""
import sys
from typing import List, Optional

from loguru import logger

from cli import build_config, create_parser, dispatch
from config import LogConfig
from core.errors import RehabError


def setup_logging(log_config: LogConfig):
    """控制台 + 轮转文件两个日志输出"""
    logger.remove()
    logger.add(
        sys.stderr,
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | <level>{message}</level>",
        level=log_config.log_level,
        colorize=True
    )

    log_file = log_config.log_dir / log_config.log_file
    log_file.parent.mkdir(parents=True, exist_ok=True)
    logger.add(
        log_file,
        rotation=log_config.rotation,
        retention=log_config.retention,
        encoding="utf-8",
        level="DEBUG"
    )


def main(argv: Optional[List[str]] = None) -> int:
    """
    主函数 - CLI入口

    Returns:
        退出码: 0 成功, 2 用法 / 配置 / 路径错误, 3 运行期 / 数值错误
    """
    parser = create_parser()
    args = parser.parse_args(argv)

    try:
        config = build_config(args)
        setup_logging(config.log)

        print("\n" + "=" * 60)
        print("🚰 供水管道养护规划 (DQN / CQL)")
        print("=" * 60)

        dispatch(args, config)
    except RehabError as e:
        logger.error("❌ {}", e)
        return e.exit_code
    except OSError as e:
        logger.error("❌ 文件读写失败: {}", e)
        return 2
    except Exception as e:
        logger.exception("❌ 运行失败: {}", e)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

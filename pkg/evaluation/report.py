"""
报告输出

metrics.csv / perpipe.csv / plotdata.csv 三个文件，任何绘图工具都可直接读取。
"""
from pathlib import Path
from typing import Dict

import pandas as pd
from loguru import logger

from evaluation.harness import ComparisonTables

METRICS_FILE = "metrics.csv"
PERPIPE_FILE = "perpipe.csv"
PLOTDATA_FILE = "plotdata.csv"


def write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def write_comparison(tables: ComparisonTables, out_dir: Path) -> Dict[str, Path]:
    """
    写出对比结果

    Returns:
        {"metrics": 路径, "perpipe": 路径, "plotdata": 路径}
    """
    out_dir = Path(out_dir)
    paths = {
        "metrics": write_frame(tables.metrics, out_dir / METRICS_FILE),
        "perpipe": write_frame(tables.perpipe, out_dir / PERPIPE_FILE),
        "plotdata": write_frame(tables.plotdata, out_dir / PLOTDATA_FILE),
    }
    logger.success("💾 评估结果已写入: {}", out_dir)
    return paths

"""
管道清单加载

CSV 表头固定为 id,age,material,length；material 只接受
asbestos_cement | ductile_iron | gray_cast_iron | pvc。
"""
import hashlib
import json
from pathlib import Path
from typing import List, Sequence

import pandas as pd
from loguru import logger
from pydantic import ValidationError

from core.environment import PipeSpec
from core.errors import RosterParseError

ROSTER_COLUMNS = ["id", "age", "material", "length"]


def load_pipes(path: Path) -> List[PipeSpec]:
    """
    加载管道清单

    Args:
        path: CSV 文件路径

    Returns:
        PipeSpec 列表（保持文件顺序）

    Raises:
        RosterParseError: 文件缺失、表头不符或某行非法（错误信息包含行号）
    """
    path = Path(path)
    if not path.exists():
        raise RosterParseError(f"管道清单不存在: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise RosterParseError(f"CSV 格式错误 {path}: {e}") from e

    columns = [c.strip() for c in frame.columns]
    if columns != ROSTER_COLUMNS:
        raise RosterParseError(f"表头应为 {','.join(ROSTER_COLUMNS)}，实际为 {','.join(columns)}")
    frame.columns = columns

    specs: List[PipeSpec] = []
    seen_ids = set()
    # 行号按文件计：表头为第 1 行
    for offset, row in enumerate(frame.itertuples(index=False), start=2):
        try:
            spec = PipeSpec(
                id=int(row.id),
                age0=int(row.age),
                material=row.material.strip(),
                length=float(row.length),
            )
        except (ValueError, ValidationError) as e:
            raise RosterParseError(f"非法记录 {tuple(row)}: {e}", row=offset) from e
        if spec.id in seen_ids:
            raise RosterParseError(f"管道编号重复: {spec.id}", row=offset)
        seen_ids.add(spec.id)
        specs.append(spec)

    logger.info("📋 加载管道清单: {} ({} 根)", path.name, len(specs))
    return specs


def roster_checksum(specs: Sequence[PipeSpec]) -> str:
    """清单的 SHA-256 校验和（写入数据集头部）"""
    canonical = [
        {"id": s.id, "age": s.age0, "material": s.material.value, "length": s.length}
        for s in specs
    ]
    payload = json.dumps(canonical, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def find_spec(specs: Sequence[PipeSpec], pipe_id: int) -> PipeSpec:
    """按编号查找管道"""
    for spec in specs:
        if spec.id == pipe_id:
            return spec
    raise RosterParseError(f"清单中没有编号为 {pipe_id} 的管道")

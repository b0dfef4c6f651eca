"""
随机数流

统一使用 numpy Generator。make_rng(seed, *keys) 按 (seed, key...) 派生独立的流，
同一组 key 永远得到同一条流，因此并行与串行执行结果一致。
"""
from typing import List, Union

import numpy as np

SeedKey = Union[int, str]


def _key_to_int(key: SeedKey) -> int:
    if isinstance(key, str):
        # 字符串 key 转为稳定整数（不依赖 hash 随机化）
        return int.from_bytes(key.encode("utf-8"), "little") % (2**63)
    if key < 0:
        raise ValueError(f"随机数 key 必须非负: {key}")
    return int(key)


def make_rng(seed: int, *keys: SeedKey) -> np.random.Generator:
    """
    派生随机数流

    Args:
        seed: 主种子
        keys: 派生路径，如 ("eval", pipe_id, episode)

    Returns:
        numpy Generator
    """
    entropy = [_key_to_int(seed)] + [_key_to_int(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def spawn(rng: np.random.Generator, n: int) -> List[np.random.Generator]:
    """从已有流派生 n 条子流"""
    seeds = rng.integers(0, 2**63 - 1, size=n, dtype=np.int64)
    return [np.random.default_rng(int(s)) for s in seeds]

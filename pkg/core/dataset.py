"""
转移数据集（离线学习使用的静态数据 D）

文件格式为单个 JSON-Lines 文件：第 1 行是 DatasetHeader，其后每行一条 TransitionRecord。
记录按 (episode, t) 顺序排列，每回合恰好 steps_per_episode 条。
浮点数使用 json 的最短往返表示，读写逐位一致。
"""
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from core.environment import (
    STATE_DIM,
    Action,
    Material,
    PipeState,
    StepOutcome,
    encode_state,
    failure_probability,
    maintenance_cost,
)
from core.errors import DatasetError, UsageError

FORMAT_VERSION = 1
RECORD_TOLERANCE = 1e-9


class SourcePolicy(str, Enum):
    """数据来源（行为策略）"""
    RANDOM = "random"
    NEAR_EXPERT = "near_expert"
    EXPERT = "expert"


class DatasetHeader(BaseModel):
    """数据集头部"""
    model_config = ConfigDict(extra="forbid")

    format_version: int = FORMAT_VERSION
    source_policy: SourcePolicy
    episodes: int = Field(ge=0)
    steps_per_episode: int = Field(ge=1)
    seed: int = Field(ge=0)
    roster_checksum: str

    @property
    def n_transitions(self) -> int:
        return self.episodes * self.steps_per_episode


class TransitionRecord(BaseModel):
    """一条转移记录；action 为行为策略选择的动作，突发失效时实际执行的是更换"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    episode: int = Field(ge=0)
    t: int = Field(ge=0)
    pipe_id: int = Field(ge=0)
    age: int = Field(ge=0)
    material: Material
    lambda_eff: float = Field(gt=0)
    pf: float = Field(ge=0.0, le=1.0)
    action: int = Field(ge=0, le=2)
    reward: float
    mc: float
    next_age: int = Field(ge=0)
    next_pf: float = Field(ge=0.0, le=1.0)
    done: bool
    sudden_failure: bool

    @classmethod
    def from_step(cls, episode: int, pipe_id: int, state: PipeState, action: Action, outcome: StepOutcome) -> "TransitionRecord":
        """由一次环境转移构造记录"""
        return cls(
            episode=episode,
            t=state.t,
            pipe_id=pipe_id,
            age=state.age,
            material=state.material,
            lambda_eff=state.lambda_eff,
            pf=state.pf,
            action=int(action),
            reward=outcome.reward,
            mc=outcome.mc,
            next_age=outcome.next_state.age,
            next_pf=outcome.next_state.pf,
            done=outcome.done,
            sudden_failure=outcome.sudden_failure,
        )

    @property
    def executed_action(self) -> Action:
        return Action.REPLACE if self.sudden_failure else Action(self.action)

    @property
    def pf_used(self) -> float:
        """奖励中使用的 pf（突发失效时为 1.0）"""
        return 1.0 if self.sudden_failure else self.pf

    def state(self) -> PipeState:
        return PipeState(age=self.age, material=self.material, lambda_eff=self.lambda_eff, t=self.t)

    def next_state(self) -> PipeState:
        return PipeState(age=self.next_age, material=self.material, lambda_eff=self.lambda_eff, t=self.t + 1)


@dataclass
class TransitionBatch:
    """编码后的小批量（回放缓冲区与离线数据集共用）"""
    states: np.ndarray        # (B, 7)
    actions: np.ndarray       # (B,) int64
    rewards: np.ndarray       # (B,)
    next_states: np.ndarray   # (B, 7)
    dones: np.ndarray         # (B,) bool

    def __len__(self) -> int:
        return len(self.actions)


class TransitionSink(Protocol):
    """转移接收端（训练时逐条写入）"""

    def on_transition(self, record: TransitionRecord) -> None:
        ...


class ListSink:
    """内存接收端"""

    def __init__(self):
        self.records: List[TransitionRecord] = []

    def on_transition(self, record: TransitionRecord) -> None:
        self.records.append(record)


@dataclass
class TransitionDataset:
    """已加载的数据集（只读使用）"""
    header: DatasetHeader
    records: List[TransitionRecord]

    def __len__(self) -> int:
        return len(self.records)

    def episodes(self) -> List[List[TransitionRecord]]:
        return group_episodes(self.records)

    def to_batch(self) -> TransitionBatch:
        return records_to_batch(self.records)

    def action_counts(self) -> List[int]:
        counts = [0] * len(Action)
        for r in self.records:
            counts[r.action] += 1
        return counts


# ============================================================================
# 校验
# ============================================================================

def validate_record(record: TransitionRecord, index: int, steps_per_episode: int):
    """
    校验单条记录的不变量

    Raises:
        DatasetError: 记录违反不变量（信息包含记录序号）
    """
    if record.episode != index // steps_per_episode or record.t != index % steps_per_episode:
        raise DatasetError(
            f"位置不符: 期望 episode={index // steps_per_episode}, t={index % steps_per_episode}，"
            f"实际 episode={record.episode}, t={record.t}",
            index,
        )
    if record.done != (record.t == steps_per_episode - 1):
        raise DatasetError(f"done 标志与 t={record.t} 不一致", index)
    if abs(record.pf - failure_probability(record.lambda_eff, record.age)) > RECORD_TOLERANCE:
        raise DatasetError(f"pf={record.pf} 与管龄 {record.age} 不一致", index)
    if abs(record.next_pf - failure_probability(record.lambda_eff, record.next_age)) > RECORD_TOLERANCE:
        raise DatasetError(f"next_pf={record.next_pf} 与管龄 {record.next_age} 不一致", index)
    if record.sudden_failure and record.next_age != 1:
        raise DatasetError("突发失效后管龄应为 1", index)
    expected_mc = maintenance_cost(record.executed_action, record.pf_used)
    if abs(record.mc - expected_mc) > RECORD_TOLERANCE:
        raise DatasetError(f"mc={record.mc} 与动作成本 {expected_mc} 不一致", index)
    if abs(record.reward - (record.mc - record.pf_used)) > RECORD_TOLERANCE:
        raise DatasetError(f"reward={record.reward} != mc - pf = {record.mc - record.pf_used}", index)


# ============================================================================
# 读写
# ============================================================================

def _dump_line(model: BaseModel) -> str:
    return json.dumps(model.model_dump(mode="json"), ensure_ascii=False, separators=(",", ":")) + "\n"


class DatasetWriter:
    """
    流式写入器（同一时间只允许一个写入方）

    Example:
        with DatasetWriter(path, header) as sink:
            train(roster, config, sink=sink)
    """

    def __init__(self, path: Path, header: DatasetHeader):
        self.path = Path(path)
        self.header = header
        self.count = 0
        self._file: Optional[IO[str]] = None

    def __enter__(self) -> "DatasetWriter":
        self.open()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is None:
            self.close()
        elif self._file:
            self._file.close()
            self._file = None

    def open(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, "w", encoding="utf-8", newline="\n")
        self._file.write(_dump_line(self.header))

    def on_transition(self, record: TransitionRecord) -> None:
        if self._file is None:
            raise UsageError("DatasetWriter 尚未打开")
        self._file.write(_dump_line(record))
        self.count += 1

    def close(self):
        """关闭文件并核对记录数"""
        if self._file is None:
            return
        self._file.close()
        self._file = None
        if self.count != self.header.n_transitions:
            raise DatasetError(f"写入记录数 {self.count} 与头部声明 {self.header.n_transitions} 不符")
        logger.success("💾 数据集已写入: {} ({} 条)", self.path, self.count)


def write_dataset(header: DatasetHeader, records: Sequence[TransitionRecord], path: Path):
    """
    写出完整数据集

    Raises:
        UsageError: 记录数与头部不一致
    """
    if len(records) != header.n_transitions:
        raise UsageError(f"记录数 {len(records)} 与头部声明 {header.n_transitions} 不符")
    with DatasetWriter(path, header) as writer:
        for record in records:
            writer.on_transition(record)


def read_dataset(path: Path) -> TransitionDataset:
    """
    读取并校验数据集

    Raises:
        DatasetError: 文件缺失、版本不符、数量不符或记录不变量被破坏
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"数据集不存在: {path}")

    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
        if not first.strip():
            raise DatasetError(f"数据集为空: {path}")
        try:
            raw_header = json.loads(first)
        except json.JSONDecodeError as e:
            raise DatasetError(f"头部不是合法 JSON: {e}") from e
        if not isinstance(raw_header, dict) or raw_header.get("format_version") != FORMAT_VERSION:
            version = raw_header.get("format_version") if isinstance(raw_header, dict) else None
            raise DatasetError(f"格式版本不符: {version}（支持 {FORMAT_VERSION}）")
        try:
            header = DatasetHeader.model_validate(raw_header)
        except ValidationError as e:
            raise DatasetError(f"头部非法: {e}") from e

        records: List[TransitionRecord] = []
        for index, line in enumerate(f):
            if not line.strip():
                continue
            try:
                record = TransitionRecord.model_validate(json.loads(line))
            except (json.JSONDecodeError, ValidationError) as e:
                raise DatasetError(f"记录格式错误: {e}", index) from e
            validate_record(record, index, header.steps_per_episode)
            records.append(record)

    if len(records) != header.n_transitions:
        raise DatasetError(f"记录数不符: 头部声明 {header.n_transitions}，实际 {len(records)}")
    logger.info("📂 加载数据集: {} (source={}, {} 条)", path.name, header.source_policy.value, len(records))
    return TransitionDataset(header=header, records=records)


# ============================================================================
# 处理
# ============================================================================

def group_episodes(records: Sequence[TransitionRecord]) -> List[List[TransitionRecord]]:
    """按回合分组（保持出现顺序）"""
    episodes: List[List[TransitionRecord]] = []
    current: Optional[int] = None
    for record in records:
        if record.episode != current:
            episodes.append([])
            current = record.episode
        episodes[-1].append(record)
    return episodes


def split_dataset(
    records: Sequence[TransitionRecord],
    train_fraction: float = 0.8,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[List[TransitionRecord], List[TransitionRecord]]:
    """
    按回合划分训练集 / 测试集

    训练回合数 = floor(回合数 × train_fraction)，且两侧至少各一个回合。

    Raises:
        UsageError: 比例不在 (0,1) 或回合数少于 2
    """
    if not 0.0 < train_fraction < 1.0:
        raise UsageError(f"train_fraction 必须在 (0,1) 内: {train_fraction}")
    episodes = group_episodes(records)
    n = len(episodes)
    if n < 2:
        raise UsageError(f"至少需要 2 个回合才能划分，实际 {n}")
    n_train = int(math.floor(n * train_fraction + 1e-9))
    n_train = min(max(n_train, 1), n - 1)

    rng = rng if rng is not None else np.random.default_rng(0)
    order = rng.permutation(n)
    train_ids = sorted(int(i) for i in order[:n_train])
    test_ids = sorted(int(i) for i in order[n_train:])
    train = [r for i in train_ids for r in episodes[i]]
    test = [r for i in test_ids for r in episodes[i]]
    logger.debug("split: {} train / {} test episodes", len(train_ids), len(test_ids))
    return train, test


def records_to_batch(records: Sequence[TransitionRecord]) -> TransitionBatch:
    """把记录编码为网络输入批量（状态统一经 encode_state 编码）"""
    states = np.array([encode_state(r.state()) for r in records], dtype=np.float64).reshape(-1, STATE_DIM)
    next_states = np.array([encode_state(r.next_state()) for r in records], dtype=np.float64).reshape(-1, STATE_DIM)
    return TransitionBatch(
        states=states,
        actions=np.array([r.action for r in records], dtype=np.int64),
        rewards=np.array([r.reward for r in records], dtype=np.float64),
        next_states=next_states,
        dones=np.array([r.done for r in records], dtype=bool),
    )

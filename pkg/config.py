"""
配置管理模块 - 供水管道养护规划

统一配置管理：内置默认值 < 环境变量 < TOML 配置文件 < 命令行覆盖项。
各分节为 pydantic 模型，未知键一律拒绝。
"""
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Tuple

from dotenv import load_dotenv
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from core.errors import ConfigError

load_dotenv()

# 项目根目录
BASE_DIR = Path(__file__).parent
CONFIG_DIR = BASE_DIR / "configs"
DATA_DIR = BASE_DIR / "data"

ActivationName = Literal["relu", "tanh", "leaky_relu"]


class _Section(BaseModel):
    """配置分节基类：拒绝未知键"""
    model_config = ConfigDict(extra="forbid")


class EnvConfig(_Section):
    """管道退化环境配置"""
    horizon: int = Field(default=100, ge=1, description="每回合步数（年）")
    sudden_failure_prob: float = Field(default=0.05, ge=0.0, le=1.0, description="每步突发失效概率")
    maintain_min_years: float = Field(default=5.0, ge=0.0, description="维护动作降龄下界 j（年）")
    maintain_max_years: float = Field(default=10.0, ge=0.0, description="维护动作降龄上界 k（年）")
    roster_path: Path = Field(default=DATA_DIR / "pipes.csv", description="管道清单 CSV")

    @model_validator(mode="after")
    def _check_bounds(self):
        if self.maintain_min_years > self.maintain_max_years:
            raise ValueError("maintain_min_years 不能大于 maintain_max_years")
        return self


class DqnConfig(_Section):
    """在线 DQN 配置（默认值取自超参数表的选定列）"""
    gamma: float = Field(default=0.99, ge=0.0, le=1.0, description="折扣因子")
    epsilon_start: float = Field(default=1.0, ge=0.0, le=1.0, description="初始探索率")
    epsilon_final: float = Field(default=0.1, ge=0.0, le=1.0, description="最终探索率（clipping epsilon）")
    exploration_fraction: float = Field(default=0.1, ge=0.0, le=1.0, description="探索率线性衰减占总步数的比例")
    episodes: int = Field(default=1000, ge=0, description="训练回合数")
    steps_per_episode: int = Field(default=100, ge=1, description="每回合步数")
    buffer_size: int = Field(default=50_000, ge=1, description="经验回放容量")
    batch_size: int = Field(default=32, ge=1, description="小批量大小")
    train_every: int = Field(default=4, ge=1, description="每隔多少环境步训练一次")
    learning_starts: int = Field(default=1000, ge=0, description="开始训练前的最少样本数")
    target_sync_every: int = Field(default=1000, ge=1, description="目标网络同步间隔（环境步）")
    learning_rate: float = Field(default=1e-4, gt=0.0, description="Adam 学习率")
    hidden_dims: List[int] = Field(default_factory=lambda: [64, 64], description="隐藏层宽度")
    activation: ActivationName = Field(default="relu", description="激活函数")
    dropout_rate: float = Field(default=0.0, ge=0.0, lt=1.0, description="隐藏层 dropout")
    seed: int = Field(default=0, ge=0, description="随机种子")
    log_every: int = Field(default=50, ge=1, description="每隔多少回合输出一次日志")

    @field_validator("hidden_dims")
    @classmethod
    def _check_hidden(cls, v: List[int]) -> List[int]:
        if any(d < 1 for d in v):
            raise ValueError("hidden_dims 每层必须 >= 1")
        return v

    @model_validator(mode="after")
    def _check_epsilon(self):
        if self.epsilon_final > self.epsilon_start:
            raise ValueError("epsilon_final 不能大于 epsilon_start")
        return self

    @property
    def total_steps(self) -> int:
        return self.episodes * self.steps_per_episode


class CqlConfig(_Section):
    """离线 CQL 配置"""
    alpha: float = Field(default=1.0, ge=0.0, description="保守项权重")
    gamma: float = Field(default=0.99, ge=0.0, le=1.0, description="折扣因子")
    epochs: int = Field(default=200, ge=0, description="训练轮数")
    batch_size: int = Field(default=32, ge=1, description="小批量大小")
    learning_rate: float = Field(default=1e-4, gt=0.0, description="Adam 学习率")
    dropout_rate: float = Field(default=0.1, ge=0.0, lt=1.0, description="隐藏层 dropout")
    target_sync_every: int = Field(default=1000, ge=1, description="目标网络同步间隔（梯度步）")
    hidden_dims: List[int] = Field(default_factory=lambda: [64, 64], description="隐藏层宽度")
    activation: ActivationName = Field(default="relu", description="激活函数")
    train_fraction: float = Field(default=0.8, gt=0.0, lt=1.0, description="训练集所占回合比例")
    seed: int = Field(default=0, ge=0, description="随机种子")
    log_every: int = Field(default=10, ge=1, description="每隔多少轮输出一次日志")

    @field_validator("hidden_dims")
    @classmethod
    def _check_hidden(cls, v: List[int]) -> List[int]:
        if any(d < 1 for d in v):
            raise ValueError("hidden_dims 每层必须 >= 1")
        return v


class BaselineConfig(_Section):
    """基线策略配置"""
    corrective_threshold: float = Field(default=0.95, ge=0.0, le=1.0, description="纠正性更换阈值 pf")
    greedy_threshold: float = Field(default=0.80, ge=0.0, le=1.0, description="贪心维护阈值 pf")
    schedule_anchor: Literal["calendar", "age"] = Field(default="calendar", description="预防性计划按回合年份或管龄触发")


class EvalConfig(_Section):
    """评估配置"""
    episodes_per_pipe: int = Field(default=30, ge=1, description="每根管道评估回合数")
    max_workers: int = Field(default=4, ge=1, description="并行 rollout 线程数")
    seed: int = Field(default=0, ge=0, description="随机种子")


class LogConfig(_Section):
    """日志配置"""
    log_level: str = Field(default="INFO", description="日志级别")
    log_dir: Path = Field(default=BASE_DIR / "logs", description="日志目录")
    log_file: str = Field(default="rehab.log", description="日志文件名")
    rotation: str = Field(default="100 MB", description="日志轮转大小")
    retention: str = Field(default="30 days", description="日志保留时间")


class RunConfig(_Section):
    """全局配置"""
    seed: Optional[int] = Field(default=None, ge=0, description="全局种子（设置后覆盖各分节 seed）")
    out_dir: Path = Field(default=BASE_DIR / "runs", description="输出目录")
    show_progress: bool = Field(default=True, description="是否显示进度条")
    env: EnvConfig = Field(default_factory=EnvConfig)
    dqn: DqnConfig = Field(default_factory=DqnConfig)
    cql: CqlConfig = Field(default_factory=CqlConfig)
    baseline: BaselineConfig = Field(default_factory=BaselineConfig)
    evaluation: EvalConfig = Field(default_factory=EvalConfig)
    log: LogConfig = Field(default_factory=LogConfig)

    @model_validator(mode="after")
    def _propagate_seed(self):
        if self.seed is not None:
            self.dqn.seed = self.seed
            self.cql.seed = self.seed
            self.evaluation.seed = self.seed
        if self.dqn.steps_per_episode != self.env.horizon:
            raise ValueError(
                f"dqn.steps_per_episode ({self.dqn.steps_per_episode}) 必须等于 env.horizon ({self.env.horizon})"
            )
        return self

    def ensure_directories(self):
        """创建必要的目录"""
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.log.log_dir.mkdir(parents=True, exist_ok=True)


# ============================================================================
# 配置文件加载
# ============================================================================

def load_config_file(config_file: Path) -> Dict[str, Any]:
    """
    加载 TOML 配置文件

    Args:
        config_file: 配置文件路径

    Returns:
        配置字典

    Raises:
        ConfigError: 文件不存在或 TOML 格式错误
    """
    path = Path(config_file)
    if not path.exists():
        raise ConfigError(f"配置文件不存在: {path}")
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"TOML 格式错误 {path}: {e}") from e


def parse_override(item: str) -> Tuple[List[str], Any]:
    """
    解析命令行覆盖项 "section.key=value"

    value 先按 JSON 解析（数字、布尔、列表），失败则作为字符串。
    """
    if "=" not in item:
        raise ConfigError(f"覆盖项缺少 '=': {item}")
    key, raw = item.split("=", 1)
    keys = [k for k in key.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"覆盖项键为空: {item}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return keys, value


def _set_dotted(data: Dict[str, Any], keys: List[str], value: Any):
    node = data
    for k in keys[:-1]:
        child = node.setdefault(k, {})
        if not isinstance(child, dict):
            raise ConfigError(f"无法在非分节键下设置: {'.'.join(keys)}")
        node = child
    node[keys[-1]] = value


def _deep_merge(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_merge(base[k], v)
        else:
            base[k] = v
    return base


def _env_layer() -> Dict[str, Any]:
    """环境变量层（REHAB_*）"""
    data: Dict[str, Any] = {}
    if os.getenv("REHAB_LOG_LEVEL"):
        _set_dotted(data, ["log", "log_level"], os.getenv("REHAB_LOG_LEVEL"))
    if os.getenv("REHAB_OUT_DIR"):
        _set_dotted(data, ["out_dir"], os.getenv("REHAB_OUT_DIR"))
    if os.getenv("REHAB_SEED"):
        try:
            _set_dotted(data, ["seed"], int(os.getenv("REHAB_SEED")))
        except ValueError:
            logger.warning("⚠️  忽略非法 REHAB_SEED: {}", os.getenv("REHAB_SEED"))
    return data


def create_run_config(
    config_file: Optional[Path] = None,
    overrides: Optional[Iterable[str]] = None,
    values: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """
    构建 RunConfig

    Args:
        config_file: TOML 配置文件（可选）
        overrides: "section.key=value" 形式的覆盖项
        values: 已解析的覆盖项 {dotted.key: value}，优先级最高

    Returns:
        RunConfig 实例

    Raises:
        ConfigError: 配置非法
    """
    data = _env_layer()
    if config_file:
        _deep_merge(data, load_config_file(config_file))
    for item in overrides or []:
        keys, value = parse_override(item)
        _set_dotted(data, keys, value)
    for dotted, value in (values or {}).items():
        _set_dotted(data, dotted.split("."), value)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"配置非法: {e}") from e


def load_config_from_env() -> RunConfig:
    """仅使用默认值与环境变量构建配置"""
    return create_run_config()


def describe_config_keys() -> List[str]:
    """
    枚举全部配置键及默认值，供 --help 输出

    Returns:
        形如 "dqn.gamma = 0.99  # 折扣因子" 的行列表
    """
    lines: List[str] = []

    def _walk(model_cls, prefix: str):
        for name, field in model_cls.model_fields.items():
            annotation = field.annotation
            if isinstance(annotation, type) and issubclass(annotation, BaseModel):
                _walk(annotation, f"{prefix}{name}.")
                continue
            default = field.get_default(call_default_factory=True)
            if isinstance(default, Path):
                default = str(default)
            lines.append(f"{prefix}{name} = {json.dumps(default, ensure_ascii=False)}  # {field.description or ''}")

    _walk(RunConfig, "")
    return lines

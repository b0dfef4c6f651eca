"""
管道退化模拟器

单根供水管道在 100 年（100 步）回合内的退化过程与对养护动作的响应：
- 失效概率服从指数（泊松）模型 pf = 1 - exp(-λ·age)
- 动作: 0=不作为, 1=维护（降龄 U(j,k)）, 2=更换（管龄置 1）
- 每步 5% 概率突发失效，强制执行更换
- 奖励 = 养护成本 MC + (-pf)，按智能体观察到的（转移前）pf 计算
"""
import math
from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from typing import Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from config import EnvConfig
from core.errors import DomainError, UsageError


class Material(str, Enum):
    """管材（顺序即 one-hot 编码顺序）"""
    ASBESTOS_CEMENT = "asbestos_cement"
    DUCTILE_IRON = "ductile_iron"
    GRAY_CAST_IRON = "gray_cast_iron"
    PVC = "pvc"

    @property
    def base_rate(self) -> float:
        """基础失效率（次/km/年）"""
        return BASE_FAILURE_RATES[self]

    @property
    def index(self) -> int:
        return MATERIAL_ORDER.index(self)


BASE_FAILURE_RATES = {
    Material.ASBESTOS_CEMENT: 0.06,
    Material.DUCTILE_IRON: 0.02,
    Material.GRAY_CAST_IRON: 0.07,
    Material.PVC: 0.015,
}
MATERIAL_ORDER = tuple(Material)


class Action(IntEnum):
    """养护动作（整数编码是文件格式的一部分）"""
    DO_NOTHING = 0
    MAINTAIN = 1
    REPLACE = 2


N_ACTIONS = len(Action)
STATE_DIM = 3 + len(MATERIAL_ORDER)


class PipeSpec(BaseModel):
    """管道静态属性（管道清单中的一行）"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    id: int = Field(ge=0, description="管道编号")
    age0: int = Field(ge=0, description="初始管龄（年）")
    material: Material
    length: float = Field(gt=0, description="长度（米）")

    @property
    def lambda_eff(self) -> float:
        """有效失效率 = 基础失效率 × 长度(km)"""
        return self.material.base_rate * (self.length / 1000.0)


@dataclass(frozen=True)
class PipeState:
    """
    MDP 状态 ⟨age, material, λ_eff, pf⟩ 以及时间步 t

    pf 不存储，每次读取时按管龄重新计算。
    """
    age: int
    material: Material
    lambda_eff: float
    t: int = 0

    def __post_init__(self):
        if self.age < 0:
            raise DomainError(f"管龄不能为负: {self.age}")
        if not (self.lambda_eff > 0 and math.isfinite(self.lambda_eff)):
            raise DomainError(f"失效率必须为正有限值: {self.lambda_eff}")

    @property
    def pf(self) -> float:
        return failure_probability(self.lambda_eff, self.age)


@dataclass(frozen=True)
class StepOutcome:
    """一步转移结果；reward == mc + pf_penalty"""
    next_state: PipeState
    reward: float
    mc: float
    pf_penalty: float
    sudden_failure: bool
    executed_action: Action
    done: bool


# ============================================================================
# 纯函数
# ============================================================================

def failure_probability(lambda_eff: float, age: float) -> float:
    """
    指数失效模型 pf = 1 - exp(-λ·age)

    Raises:
        DomainError: 输入为负或非有限
    """
    if not (math.isfinite(lambda_eff) and math.isfinite(age)):
        raise DomainError(f"非有限输入: lambda={lambda_eff}, age={age}")
    if lambda_eff < 0 or age < 0:
        raise DomainError(f"输入不能为负: lambda={lambda_eff}, age={age}")
    return -math.expm1(-lambda_eff * age)


def maintenance_cost(action: Action, pf: float) -> float:
    """
    养护成本 MC

    不作为且 pf > 0.9 时惩罚 -1 优先于 0；
    维护 / 更换在 pf <= 0.5 时视为不必要，成本 -1。
    """
    action = Action(action)
    if action == Action.DO_NOTHING:
        return -1.0 if pf > 0.9 else 0.0
    if action == Action.MAINTAIN:
        return -0.5 if pf > 0.5 else -1.0
    return -0.8 if pf > 0.5 else -1.0


def reward(action: Action, pf: float) -> Tuple[float, float]:
    """
    奖励 = MC + (-pf)

    Returns:
        (reward, mc)
    """
    mc = maintenance_cost(action, pf)
    return mc + (-pf), mc


def encode_state(state: PipeState) -> np.ndarray:
    """
    网络输入编码（长度 7，顺序属于模型文件契约）:
    [age/100, onehot(material)×4, lambda_eff, pf]
    """
    vec = np.zeros(STATE_DIM, dtype=np.float64)
    vec[0] = state.age / 100.0
    vec[1 + state.material.index] = 1.0
    vec[5] = state.lambda_eff
    vec[6] = state.pf
    return vec


def initial_state(spec: PipeSpec) -> PipeState:
    """由管道静态属性构造 t=0 状态"""
    return PipeState(age=spec.age0, material=spec.material, lambda_eff=spec.lambda_eff, t=0)


def _maintained_age(age: int, rng: np.random.Generator, config: EnvConfig) -> int:
    reduction = int(round(rng.uniform(config.maintain_min_years, config.maintain_max_years)))
    return max(age - reduction, 1)


def step(
    state: PipeState,
    action: Action,
    rng: np.random.Generator,
    config: Optional[EnvConfig] = None,
) -> StepOutcome:
    """
    单步转移

    突发失效在执行动作前抽取一次；发生时执行动作改为更换，奖励按 pf=1.0 计算。

    Raises:
        UsageError: 回合已结束
    """
    config = config or EnvConfig()
    if state.t >= config.horizon:
        raise UsageError(f"回合已结束 (t={state.t})，请先 reset")
    action = Action(action)

    sudden = bool(rng.random() < config.sudden_failure_prob)
    if sudden:
        executed = Action.REPLACE
        observed_pf = 1.0
        next_age = 1
    else:
        executed = action
        observed_pf = state.pf
        if action == Action.DO_NOTHING:
            next_age = state.age + 1
        elif action == Action.MAINTAIN:
            next_age = _maintained_age(state.age, rng, config)
        else:
            next_age = 1

    r, mc = reward(executed, observed_pf)
    next_state = replace(state, age=next_age, t=state.t + 1)
    return StepOutcome(
        next_state=next_state,
        reward=r,
        mc=mc,
        pf_penalty=-observed_pf,
        sudden_failure=sudden,
        executed_action=executed,
        done=next_state.t == config.horizon,
    )


# ============================================================================
# 有状态环境
# ============================================================================

class PipeEnv:
    """
    管道环境

    持有自己的随机数流与当前状态；step_count 统计累计 step 调用次数，
    用于检查离线训练期间没有环境交互。

    Example:
        env = PipeEnv(EnvConfig(), rng=make_rng(0))
        state = env.reset(env.sample_spec(roster))
        outcome = env.step(Action.MAINTAIN)
    """

    def __init__(self, config: Optional[EnvConfig] = None, rng: Optional[np.random.Generator] = None):
        self.config = config or EnvConfig()
        self.rng = rng if rng is not None else np.random.default_rng()
        self.state: Optional[PipeState] = None
        self.spec: Optional[PipeSpec] = None
        self.step_count = 0

    def sample_spec(self, roster: Sequence[PipeSpec]) -> PipeSpec:
        """均匀抽取一根管道"""
        if not roster:
            raise UsageError("管道清单为空")
        return roster[int(self.rng.integers(len(roster)))]

    def reset(self, spec: PipeSpec, rng: Optional[np.random.Generator] = None) -> PipeState:
        """以指定管道开始新回合；传入 rng 时替换环境的随机数流"""
        if rng is not None:
            self.rng = rng
        self.spec = spec
        self.state = initial_state(spec)
        logger.debug("reset pipe={} age={} pf={:.3f}", spec.id, spec.age0, self.state.pf)
        return self.state

    def reset_state(self, state: PipeState, rng: Optional[np.random.Generator] = None) -> PipeState:
        """从已记录的状态（如数据集中回合的首条记录）开始新回合"""
        if state.t != 0:
            raise UsageError(f"回合必须从 t=0 开始，实际 t={state.t}")
        if rng is not None:
            self.rng = rng
        self.spec = None
        self.state = state
        return self.state

    def step(self, action: Action) -> StepOutcome:
        if self.state is None:
            raise UsageError("请先调用 reset")
        outcome = step(self.state, action, self.rng, self.config)
        self.state = outcome.next_state
        self.step_count += 1
        return outcome

    @property
    def done(self) -> bool:
        return self.state is not None and self.state.t >= self.config.horizon

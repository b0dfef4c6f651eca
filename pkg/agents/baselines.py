"""
基线策略

四种不学习的对照策略，以及生成数据集 / 作为评估分母用的随机与不作为策略：
- maintain-5 / maintain-10: 每 5 / 10 年维护一次（预防性）
- corrective: pf >= 0.95 时更换（纠正性）
- greedy: pf >= 0.80 时维护（最便宜的干预）
- random: 均匀随机动作
- none: 始终不作为

突发失效由环境统一处理，基线与智能体面对相同的随机过程。
"""
from enum import Enum
from typing import Optional

import numpy as np

from config import BaselineConfig
from core.environment import N_ACTIONS, Action, PipeState
from core.errors import UsageError
from agents.base import BasePolicy


class BaselineKind(str, Enum):
    """基线类型（取值即 --strategy 参数）"""
    MAINTAIN_5 = "maintain-5"
    MAINTAIN_10 = "maintain-10"
    CORRECTIVE = "corrective"
    GREEDY = "greedy"
    RANDOM = "random"
    NONE = "none"

    @property
    def period(self) -> Optional[int]:
        return {BaselineKind.MAINTAIN_5: 5, BaselineKind.MAINTAIN_10: 10}.get(self)


def _on_schedule(state: PipeState, period: int, anchor: str) -> bool:
    # calendar: 第 t+1 年（1..horizon）；age: 当前管龄
    clock = state.t + 1 if anchor == "calendar" else state.age
    return clock > 0 and clock % period == 0


def baseline_action(
    kind: BaselineKind,
    state: PipeState,
    config: Optional[BaselineConfig] = None,
    rng: Optional[np.random.Generator] = None,
) -> Action:
    """
    基线动作（(kind, state) 的纯函数，random 除外）

    Raises:
        UsageError: random 策略缺少 rng
    """
    config = config or BaselineConfig()
    kind = BaselineKind(kind)

    if kind.period is not None:
        if _on_schedule(state, kind.period, config.schedule_anchor):
            return Action.MAINTAIN
        return Action.DO_NOTHING
    if kind == BaselineKind.CORRECTIVE:
        return Action.REPLACE if state.pf >= config.corrective_threshold else Action.DO_NOTHING
    if kind == BaselineKind.GREEDY:
        return Action.MAINTAIN if state.pf >= config.greedy_threshold else Action.DO_NOTHING
    if kind == BaselineKind.RANDOM:
        if rng is None:
            raise UsageError("random 策略需要 rng")
        return Action(int(rng.integers(N_ACTIONS)))
    return Action.DO_NOTHING


class BaselinePolicy(BasePolicy):
    """
    基线策略对象

    Example:
        policy = BaselinePolicy(BaselineKind.GREEDY)
        action = policy.act(state)
    """

    def __init__(self, kind: BaselineKind, config: Optional[BaselineConfig] = None):
        self.kind = BaselineKind(kind)
        self.config = config or BaselineConfig()
        self.name = self.kind.value

    def act(self, state: PipeState, rng: Optional[np.random.Generator] = None) -> Action:
        return baseline_action(self.kind, state, self.config, rng)

    def describe(self):
        info = super().describe()
        info["anchor"] = self.config.schedule_anchor
        return info

"""
策略基类模块

包含策略的抽象基类：
- BasePolicy: 策略基类
"""
from abc import ABC, abstractmethod
from typing import Dict, Optional

import numpy as np

from core.environment import Action, PipeState


class BasePolicy(ABC):
    """
    策略基类

    所有策略（基线、训练好的 Q 网络）的公共接口：给定观测状态返回动作。
    评估时同一个策略对象会被多个线程共享，因此 act 不得修改自身状态。

    子类需要实现:
    - act(): 选择动作
    """

    name: str = "policy"

    @abstractmethod
    def act(self, state: PipeState, rng: Optional[np.random.Generator] = None) -> Action:
        """
        选择动作

        Args:
            state: 当前观测状态
            rng: 随机策略使用的随机数流，确定性策略忽略

        Returns:
            动作
        """

    def describe(self) -> Dict[str, str]:
        """策略描述（写入汇总）"""
        return {"policy": self.name, "type": type(self).__name__}

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r})"

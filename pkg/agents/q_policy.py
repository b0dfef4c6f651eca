"""
贪心 Q 策略：训练好的网络在评估时的行为（ε=0，关闭 dropout）
"""
from typing import Optional

import numpy as np

from core.environment import Action, PipeState, encode_state
from network.mlp import MlpParams, forward
from agents.base import BasePolicy


def greedy_action(q_values: np.ndarray) -> Action:
    """argmax，平局取编号最小的动作"""
    return Action(int(np.argmax(q_values)))


def state_q_values(params: MlpParams, state: PipeState) -> np.ndarray:
    out, _ = forward(params, encode_state(state), "eval")
    return out


class GreedyQPolicy(BasePolicy):
    """冻结参数上的贪心策略；只读参数，可在线程间共享"""

    def __init__(self, params: MlpParams, name: str = "q-network"):
        self.params = params
        self.name = name

    def act(self, state: PipeState, rng: Optional[np.random.Generator] = None) -> Action:
        return greedy_action(state_q_values(self.params, state))

"""
测试辅助：构造 Q 值固定的线性网络与手写批量
"""
from typing import Sequence

import numpy as np

from core.dataset import TransitionBatch
from core.environment import N_ACTIONS, STATE_DIM
from network.mlp import MlpConfig, MlpParams


def constant_q(values: Sequence[float]) -> MlpParams:
    """权重为 0 的单层网络：任意输入的 Q 值都等于 values"""
    config = MlpConfig(input_dim=STATE_DIM, hidden_dims=[], output_dim=N_ACTIONS)
    return MlpParams(
        config=config,
        weights=[np.zeros((N_ACTIONS, STATE_DIM))],
        biases=[np.asarray(values, dtype=np.float64)],
    )


def one_batch(action: int, reward: float, done: bool) -> TransitionBatch:
    return TransitionBatch(
        states=np.zeros((1, STATE_DIM)),
        actions=np.array([action], dtype=np.int64),
        rewards=np.array([reward]),
        next_states=np.zeros((1, STATE_DIM)),
        dones=np.array([done]),
    )

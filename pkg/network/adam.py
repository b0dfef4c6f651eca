"""
Adam 优化器（带偏差修正）
"""
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from core.errors import NumericError, UsageError
from network.mlp import MlpParams, ParamGrads


@dataclass
class AdamState:
    """一阶 / 二阶矩累积量与步数计数"""
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m_weights: List[np.ndarray] = field(default_factory=list)
    v_weights: List[np.ndarray] = field(default_factory=list)
    m_biases: List[np.ndarray] = field(default_factory=list)
    v_biases: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: MlpParams, lr: float = 1e-4) -> "AdamState":
        """创建与参数形状一致的零矩状态"""
        return cls(
            lr=lr,
            m_weights=[np.zeros_like(w) for w in params.weights],
            v_weights=[np.zeros_like(w) for w in params.weights],
            m_biases=[np.zeros_like(b) for b in params.biases],
            v_biases=[np.zeros_like(b) for b in params.biases],
        )


def _update(param: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray, state: AdamState):
    m *= state.beta1
    m += (1.0 - state.beta1) * grad
    v *= state.beta2
    v += (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** state.step)
    v_hat = v / (1.0 - state.beta2 ** state.step)
    param -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def adam_step(params: MlpParams, grads: ParamGrads, state: AdamState) -> Tuple[MlpParams, AdamState]:
    """
    原地执行一次 Adam 更新

    Raises:
        UsageError: 梯度或矩的形状与参数不一致
        NumericError: 梯度含非有限值（信息包含参数路径）
    """
    if len(grads.weights) != params.n_layers or len(state.m_weights) != params.n_layers:
        raise UsageError("梯度 / 优化器状态层数与参数不一致")
    for i in range(params.n_layers):
        if grads.weights[i].shape != params.weights[i].shape or grads.biases[i].shape != params.biases[i].shape:
            raise UsageError(f"layers.{i} 梯度形状与参数不一致")
        if state.m_weights[i].shape != params.weights[i].shape or state.m_biases[i].shape != params.biases[i].shape:
            raise UsageError(f"layers.{i} 优化器矩形状与参数不一致")
    for path, g in grads.named():
        if not np.all(np.isfinite(g)):
            raise NumericError("梯度出现非有限值", path)

    state.step += 1
    for i in range(params.n_layers):
        _update(params.weights[i], grads.weights[i], state.m_weights[i], state.v_weights[i], state)
        _update(params.biases[i], grads.biases[i], state.m_biases[i], state.v_biases[i], state)
    params.version += 1
    return params, state

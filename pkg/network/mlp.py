"""
多层感知机（MLP）

两个训练器共用的函数逼近器：全连接层 + 激活函数 + 可选 dropout。
权重矩阵按 (out, in) 存放，所有运算使用 float64。
"""
import copy
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from core.errors import UsageError

Mode = Literal["train", "eval"]
LEAKY_SLOPE = 0.01


class MlpConfig(BaseModel):
    """网络结构配置"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    input_dim: int = Field(ge=1)
    hidden_dims: List[int] = Field(default_factory=lambda: [64, 64])
    output_dim: int = Field(default=3, ge=1)
    activation: Literal["relu", "tanh", "leaky_relu"] = "relu"
    dropout_rate: float = Field(default=0.0, ge=0.0, lt=1.0)

    @field_validator("hidden_dims")
    @classmethod
    def _check_hidden(cls, v: List[int]) -> List[int]:
        if any(d < 1 for d in v):
            raise ValueError("hidden_dims 每层必须 >= 1")
        return v

    @property
    def layer_dims(self) -> List[Tuple[int, int]]:
        """每层 (fan_in, fan_out)"""
        dims = [self.input_dim] + list(self.hidden_dims) + [self.output_dim]
        return list(zip(dims[:-1], dims[1:]))


def _relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def _relu_grad(z: np.ndarray) -> np.ndarray:
    return (z > 0).astype(np.float64)


def _tanh_grad(z: np.ndarray) -> np.ndarray:
    return 1.0 - np.tanh(z) ** 2


def _leaky(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def _leaky_grad(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


ACTIVATIONS: Dict[str, Tuple[Callable, Callable]] = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
    "leaky_relu": (_leaky, _leaky_grad),
}


@dataclass
class MlpParams:
    """
    网络参数

    version 在每次优化器更新后递增，用于识别过期的前向缓存。
    """
    config: MlpConfig
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    version: int = 0

    def __post_init__(self):
        dims = self.config.layer_dims
        if len(self.weights) != len(dims) or len(self.biases) != len(dims):
            raise UsageError(f"层数不符: 期望 {len(dims)}")
        for i, (fan_in, fan_out) in enumerate(dims):
            if self.weights[i].shape != (fan_out, fan_in):
                raise UsageError(f"layers.{i}.weights 形状应为 {(fan_out, fan_in)}，实际 {self.weights[i].shape}")
            if self.biases[i].shape != (fan_out,):
                raise UsageError(f"layers.{i}.bias 形状应为 {(fan_out,)}，实际 {self.biases[i].shape}")

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(w)) for w in self.weights) and all(np.all(np.isfinite(b)) for b in self.biases)


@dataclass
class ParamGrads:
    """参数梯度（形状与 MlpParams 一致）"""
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def named(self):
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            yield f"layers.{i}.weights", w
            yield f"layers.{i}.bias", b


@dataclass
class ForwardCache:
    """前向传播中间结果，供 backward 使用"""
    owner_id: int
    version: int
    squeeze: bool
    layer_inputs: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    masks: List[Optional[np.ndarray]] = field(default_factory=list)


def init_params(config: MlpConfig, rng: np.random.Generator) -> MlpParams:
    """
    初始化参数：权重 ~ U(-1/√fan_in, +1/√fan_in)，偏置为 0
    """
    weights, biases = [], []
    for fan_in, fan_out in config.layer_dims:
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return MlpParams(config=config, weights=weights, biases=biases)


def forward(
    params: MlpParams,
    x: np.ndarray,
    mode: Mode = "eval",
    rng: Optional[np.random.Generator] = None,
) -> Tuple[np.ndarray, ForwardCache]:
    """
    前向传播

    Args:
        params: 网络参数
        x: 单个输入向量 (input_dim,) 或批量 (B, input_dim)
        mode: train 模式下对隐藏层施加 inverted dropout；eval 模式确定性
        rng: train 模式且 dropout_rate > 0 时必需

    Returns:
        (输出, 缓存)；输出形状随输入为 (output_dim,) 或 (B, output_dim)

    Raises:
        UsageError: 输入维度不符或缺少 rng
    """
    config = params.config
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    h = np.atleast_2d(x)
    if h.ndim != 2 or h.shape[1] != config.input_dim:
        raise UsageError(f"输入维度应为 {config.input_dim}，实际形状 {x.shape}")
    use_dropout = mode == "train" and config.dropout_rate > 0
    if use_dropout and rng is None:
        raise UsageError("train 模式启用 dropout 时必须提供 rng")
    act, _ = ACTIVATIONS[config.activation]
    keep = 1.0 - config.dropout_rate

    cache = ForwardCache(owner_id=id(params), version=params.version, squeeze=squeeze)
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.layer_inputs.append(h)
        z = h @ w.T + b
        if i == last:
            h = z
            break
        cache.pre_activations.append(z)
        a = act(z)
        if use_dropout:
            mask = (rng.random(a.shape) < keep) / keep
            a = a * mask
            cache.masks.append(mask)
        else:
            cache.masks.append(None)
        h = a

    return (h[0] if squeeze else h), cache


def backward(params: MlpParams, cache: ForwardCache, output_gradient: np.ndarray) -> ParamGrads:
    """
    反向传播

    Args:
        params: 与 forward 时相同的参数对象
        cache: forward 返回的缓存
        output_gradient: 损失对输出的梯度，形状与 forward 输出一致

    Raises:
        UsageError: 缓存来自其他参数对象或参数已被更新
    """
    if cache.owner_id != id(params) or cache.version != params.version:
        raise UsageError("前向缓存已过期或与参数不匹配")
    grad = np.atleast_2d(np.asarray(output_gradient, dtype=np.float64))
    batch = cache.layer_inputs[0].shape[0]
    if grad.shape != (batch, params.config.output_dim):
        raise UsageError(f"输出梯度形状应为 {(batch, params.config.output_dim)}，实际 {grad.shape}")
    _, act_grad = ACTIVATIONS[params.config.activation]

    n = params.n_layers
    d_weights: List[np.ndarray] = [None] * n
    d_biases: List[np.ndarray] = [None] * n
    delta = grad
    for i in reversed(range(n)):
        d_weights[i] = delta.T @ cache.layer_inputs[i]
        d_biases[i] = delta.sum(axis=0)
        if i == 0:
            break
        da = delta @ params.weights[i]
        mask = cache.masks[i - 1]
        if mask is not None:
            da = da * mask
        delta = da * act_grad(cache.pre_activations[i - 1])
    return ParamGrads(weights=d_weights, biases=d_biases)


def copy_params(source: MlpParams) -> MlpParams:
    """深拷贝（目标网络同步）"""
    return MlpParams(
        config=source.config,
        weights=[w.copy() for w in source.weights],
        biases=[b.copy() for b in source.biases],
        version=0,
    )


def params_equal(a: MlpParams, b: MlpParams) -> bool:
    """逐元素比较两组参数"""
    if a.config != b.config:
        return False
    return all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights)) and all(
        np.array_equal(x, y) for x, y in zip(a.biases, b.biases)
    )


def gradient_check(
    params: MlpParams,
    x: np.ndarray,
    target: np.ndarray,
    h: float = 1e-5,
) -> float:
    """
    用中心差分检验 backward

    损失取 0.5 × ||forward(x) - target||²（eval 模式）。

    Returns:
        解析梯度与数值梯度的最大相对误差（分母下限 1e-6，避免舍入误差主导极小梯度）
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    target = np.atleast_2d(np.asarray(target, dtype=np.float64))
    work = copy.deepcopy(params)

    def loss() -> float:
        out, _ = forward(work, x, "eval")
        return 0.5 * float(np.sum((out - target) ** 2))

    out, cache = forward(work, x, "eval")
    grads = backward(work, cache, out - target)

    worst = 0.0
    for tensors, analytic in ((work.weights, grads.weights), (work.biases, grads.biases)):
        for tensor, g in zip(tensors, analytic):
            it = np.nditer(tensor, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                original = tensor[idx]
                tensor[idx] = original + h
                plus = loss()
                tensor[idx] = original - h
                minus = loss()
                tensor[idx] = original
                numeric = (plus - minus) / (2 * h)
                denom = max(abs(numeric), abs(g[idx]), 1e-6)
                worst = max(worst, abs(numeric - g[idx]) / denom)
    return worst

"""
神经网络模块

- mlp: MLP 参数、前向 / 反向传播、参数拷贝、梯度检验
- adam: Adam 优化器
- model_io: 模型 JSON 读写
"""
from network.mlp import (
    MlpConfig,
    MlpParams,
    ParamGrads,
    ForwardCache,
    init_params,
    forward,
    backward,
    copy_params,
    params_equal,
    gradient_check,
)
from network.adam import AdamState, adam_step
from network.model_io import save_model, load_model, load_sidecar, sidecar_path

__all__ = [
    'MlpConfig',
    'MlpParams',
    'ParamGrads',
    'ForwardCache',
    'init_params',
    'forward',
    'backward',
    'copy_params',
    'params_equal',
    'gradient_check',
    'AdamState',
    'adam_step',
    'save_model',
    'load_model',
    'load_sidecar',
    'sidecar_path',
]

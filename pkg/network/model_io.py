"""
模型文件读写

模型 JSON:
{
  "format_version": 1,
  "config": {"input_dim", "hidden_dims", "output_dim", "activation", "dropout_rate"},
  "layers": [{"weights": [行优先展平], "bias": [...]}]
}
训练配置另存为同名 .config.json 侧车文件。
"""
import json
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from loguru import logger
from pydantic import ValidationError

from core.errors import ModelFormatError
from network.mlp import MlpConfig, MlpParams

MODEL_FORMAT_VERSION = 1


def sidecar_path(path: Path) -> Path:
    """model.json -> model.config.json"""
    path = Path(path)
    return path.with_name(f"{path.stem}.config.json")


def params_to_dict(params: MlpParams) -> Dict[str, Any]:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "config": params.config.model_dump(mode="json"),
        "layers": [
            {"weights": w.reshape(-1).tolist(), "bias": b.tolist()}
            for w, b in zip(params.weights, params.biases)
        ],
    }


def params_from_dict(data: Dict[str, Any]) -> MlpParams:
    """
    Raises:
        ModelFormatError: 版本、结构或数值非法
    """
    if not isinstance(data, dict) or data.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"模型格式版本不符（支持 {MODEL_FORMAT_VERSION}）")
    try:
        config = MlpConfig.model_validate(data["config"])
        layers = data["layers"]
    except (KeyError, ValidationError) as e:
        raise ModelFormatError(f"模型配置非法: {e}") from e
    dims = config.layer_dims
    if not isinstance(layers, list) or len(layers) != len(dims):
        raise ModelFormatError(f"层数应为 {len(dims)}")
    weights, biases = [], []
    for i, ((fan_in, fan_out), layer) in enumerate(zip(dims, layers)):
        try:
            w = np.asarray(layer["weights"], dtype=np.float64)
            b = np.asarray(layer["bias"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"layers.{i} 数据非法: {e}") from e
        if w.size != fan_in * fan_out or b.shape != (fan_out,):
            raise ModelFormatError(f"layers.{i} 尺寸不符")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ModelFormatError(f"layers.{i} 含非有限值")
        weights.append(w.reshape(fan_out, fan_in))
        biases.append(b)
    return MlpParams(config=config, weights=weights, biases=biases)


def save_model(path: Path, params: MlpParams, sidecar: Optional[Dict[str, Any]] = None):
    """写出模型（以及可选的训练配置侧车文件）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(params_to_dict(params), f)
    if sidecar is not None:
        with open(sidecar_path(path), "w", encoding="utf-8", newline="\n") as f:
            json.dump(sidecar, f, ensure_ascii=False, indent=2, sort_keys=True)
    logger.success("💾 模型已保存: {}", path)


def load_model(path: Path) -> MlpParams:
    """
    读取模型

    Raises:
        ModelFormatError: 文件缺失或格式非法
    """
    path = Path(path)
    if not path.exists():
        raise ModelFormatError(f"模型文件不存在: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"模型文件不是合法 JSON: {e}") from e
    params = params_from_dict(data)
    logger.info("📦 加载模型: {}", path.name)
    return params


def load_sidecar(path: Path) -> Optional[Dict[str, Any]]:
    """读取侧车配置，不存在时返回 None"""
    side = sidecar_path(path)
    if not side.exists():
        return None
    with open(side, "r", encoding="utf-8") as f:
        return json.load(f)

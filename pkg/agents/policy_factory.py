"""
策略工厂模块

提供统一的策略创建接口
"""
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from loguru import logger

from config import BaselineConfig
from core.errors import UsageError
from network.model_io import load_model
from agents.base import BasePolicy
from agents.baselines import BaselineKind, BaselinePolicy
from agents.q_policy import GreedyQPolicy


class PolicyFactory:
    """
    策略工厂类

    统一管理所有策略的创建：
    - 基线: maintain-5, maintain-10, corrective, greedy, random, none
    - 模型: 已保存的 Q 网络（JSON）

    继承关系:
    - BasePolicy (抽象基类)
      ├── BaselinePolicy
      └── GreedyQPolicy
    """

    _registry: Dict[str, Callable[[BaselineConfig], BasePolicy]] = {}

    @classmethod
    def register(cls, name: str, builder: Callable[[BaselineConfig], BasePolicy]):
        """
        注册自定义策略

        Examples:
            PolicyFactory.register('age-60', lambda cfg: AgeThresholdPolicy(60))
        """
        cls._registry[name] = builder
        logger.info("✅ 注册策略类型: {}", name)

    @classmethod
    def available(cls) -> List[str]:
        return [k.value for k in BaselineKind] + sorted(cls._registry)

    @classmethod
    def from_strategy(cls, name: str, config: Optional[BaselineConfig] = None) -> BasePolicy:
        """
        按名称创建基线策略

        Raises:
            UsageError: 未知策略名
        """
        config = config or BaselineConfig()
        if name in cls._registry:
            policy = cls._registry[name](config)
        else:
            try:
                kind = BaselineKind(name)
            except ValueError:
                raise UsageError(f"未知策略: {name}（可选: {', '.join(cls.available())}）") from None
            policy = BaselinePolicy(kind, config)
        logger.info("🏭 创建策略: {}", policy.name)
        return policy

    @classmethod
    def from_model(cls, path: Path, name: Optional[str] = None) -> GreedyQPolicy:
        """
        从模型文件创建贪心策略

        名称默认取文件名（如 dqn.json -> dqn）。

        Raises:
            ModelFormatError: 模型文件缺失或非法
        """
        path = Path(path)
        params = load_model(path)
        name = name or path.stem
        logger.info("🏭 创建策略: {} ({})", name, path.name)
        return GreedyQPolicy(params, name=name)

    @classmethod
    def create_all(
        cls,
        models: Sequence[Path] = (),
        strategies: Sequence[str] = (),
        config: Optional[BaselineConfig] = None,
    ) -> List[BasePolicy]:
        """
        按顺序创建模型策略与基线策略

        Raises:
            UsageError: 未指定任何策略
        """
        if not models and not strategies:
            raise UsageError("至少需要一个 --model 或 --strategy")
        policies: List[BasePolicy] = [cls.from_model(p) for p in models]
        policies += [cls.from_strategy(s, config) for s in strategies]
        return policies

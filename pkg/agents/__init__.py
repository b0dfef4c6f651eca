"""
策略与训练器模块

- BasePolicy: 策略基类
- BaselinePolicy / BaselineKind: 基线策略
- GreedyQPolicy: 已训练网络的贪心策略
- dqn: 在线深度 Q 学习
- cql: 离线保守 Q 学习
- collector: 数据集采集
- PolicyFactory: 策略工厂
"""
from agents.base import BasePolicy
from agents.baselines import BaselineKind, BaselinePolicy, baseline_action
from agents.q_policy import GreedyQPolicy
from agents.dqn import DqnResult, ReplayBuffer, TrainingLog, Transition, train
from agents.cql import CqlLoss, CqlResult, EpochLog, compare_sources, train_offline
from agents.collector import collect
from agents.policy_factory import PolicyFactory

__all__ = [
    'BasePolicy',
    'BaselineKind',
    'BaselinePolicy',
    'baseline_action',
    'GreedyQPolicy',
    'DqnResult',
    'ReplayBuffer',
    'TrainingLog',
    'Transition',
    'train',
    'CqlLoss',
    'CqlResult',
    'EpochLog',
    'compare_sources',
    'train_offline',
    'collect',
    'PolicyFactory',
]

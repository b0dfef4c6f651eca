"""
数据集采集

三种行为策略对应三种数据源：
- random: 均匀随机动作
- expert: 冻结的已训练模型的贪心动作
- near_expert: 在线 DQN 训练过程中的 ε-greedy 轨迹（训练钩子）
"""
from typing import Iterable, Optional, Sequence

from loguru import logger
from tqdm import tqdm

from config import DqnConfig, EnvConfig
from core.dataset import DatasetHeader, ListSink, SourcePolicy, TransitionDataset, TransitionRecord, TransitionSink
from core.environment import PipeEnv, PipeSpec
from core.errors import UsageError
from core.rng import make_rng
from core.roster import roster_checksum
from network.mlp import MlpParams
from agents.base import BasePolicy
from agents.baselines import BaselineKind, BaselinePolicy
from agents.dqn import train
from agents.q_policy import GreedyQPolicy


class TeeSink:
    """把转移同时转发给多个接收端"""

    def __init__(self, sinks: Iterable[TransitionSink]):
        self.sinks = [s for s in sinks if s is not None]

    def on_transition(self, record: TransitionRecord) -> None:
        for sink in self.sinks:
            sink.on_transition(record)


def rollout_episodes(
    policy: BasePolicy,
    roster: Sequence[PipeSpec],
    episodes: int,
    seed: int,
    sink: TransitionSink,
    env_config: Optional[EnvConfig] = None,
    show_progress: bool = False,
) -> int:
    """
    用固定策略生成回合，每回合均匀抽取一根管道

    Returns:
        写入的转移条数
    """
    env = PipeEnv(env_config or EnvConfig(), rng=make_rng(seed, "collect", "env"))
    act_rng = make_rng(seed, "collect", "act")
    count = 0
    for episode in tqdm(range(episodes), desc=f"collect[{policy.name}]", unit="ep", disable=not show_progress):
        spec = env.sample_spec(roster)
        state = env.reset(spec)
        while not env.done:
            action = policy.act(state, act_rng)
            outcome = env.step(action)
            sink.on_transition(TransitionRecord.from_step(episode, spec.id, state, action, outcome))
            state = outcome.next_state
            count += 1
    return count


def collect(
    source: SourcePolicy,
    roster: Sequence[PipeSpec],
    episodes: int,
    seed: int = 0,
    env_config: Optional[EnvConfig] = None,
    params: Optional[MlpParams] = None,
    dqn_config: Optional[DqnConfig] = None,
    sink: Optional[TransitionSink] = None,
    show_progress: bool = False,
) -> TransitionDataset:
    """
    采集数据集

    Args:
        source: 行为策略类型
        roster: 管道清单
        episodes: 回合数
        seed: 随机种子
        env_config: 环境配置
        params: expert 模式使用的冻结模型参数
        dqn_config: near_expert 模式的 DQN 配置（episodes 与 seed 以本函数参数为准）
        sink: 额外的接收端（如 DatasetWriter），可选

    Returns:
        内存中的数据集

    Raises:
        UsageError: expert 模式缺少模型，或管道清单为空
    """
    source = SourcePolicy(source)
    env_config = env_config or EnvConfig()
    if not roster:
        raise UsageError("管道清单为空")
    if episodes < 0:
        raise UsageError(f"回合数必须非负: {episodes}")

    memory = ListSink()
    tee = TeeSink([memory, sink])
    logger.info("📥 采集数据集: source={} episodes={} seed={}", source.value, episodes, seed)

    if source == SourcePolicy.RANDOM:
        rollout_episodes(BaselinePolicy(BaselineKind.RANDOM), roster, episodes, seed, tee, env_config, show_progress)
    elif source == SourcePolicy.EXPERT:
        if params is None:
            raise UsageError("expert 模式需要已训练的模型")
        rollout_episodes(GreedyQPolicy(params, name="expert"), roster, episodes, seed, tee, env_config, show_progress)
    else:
        base = dqn_config or DqnConfig(steps_per_episode=env_config.horizon)
        dqn_config = base.model_copy(update={"episodes": episodes, "seed": seed})
        train(roster, dqn_config, env_config, sink=tee, show_progress=show_progress)

    header = DatasetHeader(
        source_policy=source,
        episodes=episodes,
        steps_per_episode=env_config.horizon,
        seed=seed,
        roster_checksum=roster_checksum(roster),
    )
    logger.success("✅ 采集完成: {} 条转移", len(memory.records))
    return TransitionDataset(header=header, records=memory.records)

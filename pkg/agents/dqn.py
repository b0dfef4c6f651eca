"""
在线深度 Q 学习

经验回放 + ε-greedy 探索 + 周期同步的目标网络。
每个环境步的转移同时写入回放缓冲区与数据集接收端，供离线学习复用。
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from config import DqnConfig, EnvConfig
from core.dataset import TransitionBatch, TransitionRecord, TransitionSink
from core.environment import N_ACTIONS, STATE_DIM, Action, PipeEnv, PipeSpec, PipeState, encode_state
from core.errors import NumericError, UsageError
from core.rng import make_rng
from network.adam import AdamState, adam_step
from network.mlp import MlpConfig, MlpParams, backward, copy_params, forward, init_params

ROLLING_WINDOW = 20


@dataclass
class Transition:
    """一条经验 (s, a, r, s', done)；raw_* 仅用于日志"""
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool
    raw_state: Optional[PipeState] = None
    raw_next_state: Optional[PipeState] = None


class ReplayBuffer:
    """
    环形经验回放缓冲区

    写满后覆盖最旧的条目；sample 在已存储的下标上均匀抽样。
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise UsageError(f"缓冲区容量必须 >= 1: {capacity}")
        self.capacity = capacity
        self.states = np.zeros((capacity, STATE_DIM), dtype=np.float64)
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity, dtype=np.float64)
        self.next_states = np.zeros((capacity, STATE_DIM), dtype=np.float64)
        self.dones = np.zeros(capacity, dtype=bool)
        self._raw: List[Optional[Transition]] = [None] * capacity
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, transition: Transition):
        i = self.cursor
        self.states[i] = transition.state
        self.actions[i] = transition.action
        self.rewards[i] = transition.reward
        self.next_states[i] = transition.next_state
        self.dones[i] = transition.done
        self._raw[i] = transition
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise UsageError("缓冲区为空")
        return rng.integers(0, self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> TransitionBatch:
        """均匀有放回抽样"""
        idx = self.sample_indices(batch_size, rng)
        return TransitionBatch(
            states=self.states[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            next_states=self.next_states[idx],
            dones=self.dones[idx],
        )

    def transitions(self) -> List[Transition]:
        """按写入顺序（最旧在前）返回当前内容"""
        start = self.cursor if self.size == self.capacity else 0
        return [self._raw[(start + k) % self.capacity] for k in range(self.size)]


# ============================================================================
# 算法组件
# ============================================================================

def network_config(config: DqnConfig) -> MlpConfig:
    return MlpConfig(
        input_dim=STATE_DIM,
        hidden_dims=list(config.hidden_dims),
        output_dim=N_ACTIONS,
        activation=config.activation,
        dropout_rate=config.dropout_rate,
    )


def epsilon_at(step: int, config: DqnConfig) -> float:
    """
    线性退火的探索率

    在 exploration_fraction × total_steps 步内由 epsilon_start 线性降到 epsilon_final，之后保持不变。
    """
    if step < 0:
        raise UsageError(f"step 必须非负: {step}")
    horizon = config.exploration_fraction * config.total_steps
    if horizon <= 0:
        return config.epsilon_final
    fraction = min(step / horizon, 1.0)
    return config.epsilon_start + fraction * (config.epsilon_final - config.epsilon_start)


def select_action(
    params: MlpParams,
    encoded_state: np.ndarray,
    epsilon: float,
    rng: Optional[np.random.Generator] = None,
) -> Action:
    """
    ε-greedy 动作选择

    以概率 epsilon 均匀随机，否则取 Q 值最大的动作（平局取编号最小者）。
    提供 rng 时每次调用都抽取一次探索判定，保证随机数流位置与 epsilon 无关。
    """
    if not 0.0 <= epsilon <= 1.0:
        raise UsageError(f"epsilon 必须在 [0,1] 内: {epsilon}")
    if rng is None:
        if epsilon > 0:
            raise UsageError("epsilon > 0 时必须提供 rng")
        explore = False
    else:
        explore = rng.random() < epsilon
    if explore:
        return Action(int(rng.integers(N_ACTIONS)))
    q, _ = forward(params, encoded_state, "eval")
    return Action(int(np.argmax(q)))


def td_targets(batch: TransitionBatch, target_params: MlpParams, gamma: float) -> np.ndarray:
    """
    TD 目标: done 时为 r，否则 r + γ·max_a Q(s'; θ⁻)

    只使用目标网络参数。
    """
    if len(batch) == 0:
        raise UsageError("批量为空")
    q_next, _ = forward(target_params, batch.next_states, "eval")
    bootstrap = np.where(batch.dones, 0.0, q_next.max(axis=1))
    return batch.rewards + gamma * bootstrap


def q_learning_update(
    params: MlpParams,
    target_params: MlpParams,
    adam: AdamState,
    batch: TransitionBatch,
    gamma: float,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """
    在一个批量上执行一次 Q 学习更新

    损失 = mean((Q(s,a;θ) - y)²)，只有被采取动作的输出有梯度。

    Returns:
        更新前的损失

    Raises:
        NumericError: 损失非有限
    """
    targets = td_targets(batch, target_params, gamma)
    q, cache = forward(params, batch.states, "train", rng)
    rows = np.arange(len(batch))
    diff = q[rows, batch.actions] - targets
    loss = float(np.mean(diff ** 2))
    if not np.isfinite(loss):
        raise NumericError("TD 损失出现非有限值", "loss")
    grad = np.zeros_like(q)
    grad[rows, batch.actions] = 2.0 * diff / len(batch)
    adam_step(params, backward(params, cache, grad), adam)
    return loss


def train_step(
    params: MlpParams,
    target_params: MlpParams,
    adam: AdamState,
    buffer: ReplayBuffer,
    config: DqnConfig,
    rng: np.random.Generator,
) -> float:
    """
    从回放缓冲区均匀抽取一个批量并更新一次

    Raises:
        UsageError: 样本数不足 batch_size 或尚未达到 learning_starts
    """
    needed = max(config.batch_size, config.learning_starts)
    if len(buffer) < needed:
        raise UsageError(f"缓冲区样本不足: {len(buffer)} < {needed}")
    batch = buffer.sample(config.batch_size, rng)
    return q_learning_update(params, target_params, adam, batch, config.gamma, rng)


# ============================================================================
# 训练日志
# ============================================================================

@dataclass
class TrainingLog:
    """逐回合训练记录"""
    episodes: List[int] = field(default_factory=list)
    returns: List[float] = field(default_factory=list)
    epsilons: List[float] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.episodes)

    def append(self, episode: int, episode_return: float, epsilon: float, loss_mean: float):
        self.episodes.append(episode)
        self.returns.append(episode_return)
        self.epsilons.append(epsilon)
        self.losses.append(loss_mean)

    def to_frame(self) -> pd.DataFrame:
        """滑动窗口 20 的均值与总体标准差"""
        returns = pd.Series(self.returns, dtype="float64")
        rolling = returns.rolling(ROLLING_WINDOW, min_periods=1)
        return pd.DataFrame({
            "episode": pd.Series(self.episodes, dtype="int64"),
            "return": returns,
            "rolling_mean_20": rolling.mean(),
            "rolling_std_20": rolling.std(ddof=0),
            "epsilon": pd.Series(self.epsilons, dtype="float64"),
            "loss_mean": pd.Series(self.losses, dtype="float64"),
        })

    def to_csv(self, path: Path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        logger.info("📝 训练日志: {}", path)


@dataclass
class DqnResult:
    params: MlpParams
    log: TrainingLog
    total_steps: int = 0
    n_updates: int = 0


def train(
    roster: Sequence[PipeSpec],
    config: Optional[DqnConfig] = None,
    env_config: Optional[EnvConfig] = None,
    sink: Optional[TransitionSink] = None,
    show_progress: bool = False,
) -> DqnResult:
    """
    在线训练 DQN

    每回合均匀抽取一根管道；每个环境步写入回放缓冲区与 sink；
    每 train_every 步训练一次，每 target_sync_every 步同步目标网络。

    Args:
        roster: 管道清单
        config: DQN 配置
        env_config: 环境配置
        sink: 转移接收端（如 DatasetWriter），可选
        show_progress: 是否显示进度条

    Returns:
        DqnResult

    Raises:
        UsageError: 管道清单为空或回合长度与环境不一致
    """
    config = config or DqnConfig()
    env_config = env_config or EnvConfig()
    if not roster:
        raise UsageError("管道清单为空")
    if config.steps_per_episode != env_config.horizon:
        raise UsageError(
            f"steps_per_episode ({config.steps_per_episode}) 与 env.horizon ({env_config.horizon}) 不一致"
        )

    params = init_params(network_config(config), make_rng(config.seed, "dqn", "init"))
    target = copy_params(params)
    adam = AdamState.for_params(params, lr=config.learning_rate)
    buffer = ReplayBuffer(config.buffer_size)
    act_rng = make_rng(config.seed, "dqn", "act")
    sample_rng = make_rng(config.seed, "dqn", "sample")
    env = PipeEnv(env_config, rng=make_rng(config.seed, "dqn", "env"))
    log = TrainingLog()

    logger.info(
        "🚀 DQN 训练开始: episodes={} γ={} lr={} buffer={}",
        config.episodes, config.gamma, config.learning_rate, config.buffer_size,
    )
    global_step = 0
    n_updates = 0
    epsilon = epsilon_at(0, config)
    progress = tqdm(range(config.episodes), desc="DQN", unit="ep", disable=not show_progress)
    for episode in progress:
        spec = env.sample_spec(roster)
        state = env.reset(spec)
        episode_return = 0.0
        losses: List[float] = []
        while not env.done:
            epsilon = epsilon_at(global_step, config)
            obs = encode_state(state)
            action = select_action(params, obs, epsilon, act_rng)
            outcome = env.step(action)
            buffer.add(Transition(
                state=obs,
                action=int(action),
                reward=outcome.reward,
                next_state=encode_state(outcome.next_state),
                done=outcome.done,
                raw_state=state,
                raw_next_state=outcome.next_state,
            ))
            if sink is not None:
                sink.on_transition(TransitionRecord.from_step(episode, spec.id, state, action, outcome))
            episode_return += outcome.reward
            global_step += 1

            if global_step % config.train_every == 0 and len(buffer) >= max(config.batch_size, config.learning_starts):
                losses.append(train_step(params, target, adam, buffer, config, sample_rng))
                n_updates += 1
            if global_step % config.target_sync_every == 0:
                target = copy_params(params)
            state = outcome.next_state

        loss_mean = float(np.mean(losses)) if losses else float("nan")
        log.append(episode, episode_return, epsilon, loss_mean)
        if (episode + 1) % config.log_every == 0:
            recent = np.mean(log.returns[-ROLLING_WINDOW:])
            logger.info(
                "📈 episode {}/{} return={:.2f} rolling_mean={:.2f} ε={:.3f}",
                episode + 1, config.episodes, episode_return, recent, epsilon,
            )
        progress.set_postfix(ret=f"{episode_return:.1f}", eps=f"{epsilon:.2f}")

    if not params.is_finite():
        raise NumericError("训练后参数含非有限值", "params")
    logger.success("✅ DQN 训练完成: {} 步, {} 次更新", global_step, n_updates)
    return DqnResult(params=params, log=log, total_steps=global_step, n_updates=n_updates)

"""
离线保守 Q 学习（离散 CQL）

只用静态数据集训练：损失 = α × mean(logsumexp(Q(s,·)) - Q(s,a_data)) + ½ × mean(TD²)。
每轮结束后用当前贪心策略在模拟器中从测试回合的初始状态 rollout，得到留出回报；
梯度计算期间环境步数计数器必须保持不变。
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from config import CqlConfig, EnvConfig
from core.dataset import TransitionBatch, TransitionDataset, TransitionRecord, group_episodes, records_to_batch, split_dataset
from core.environment import N_ACTIONS, STATE_DIM, PipeEnv, PipeState, encode_state
from core.errors import NumericError, RehabError, UsageError
from core.rng import make_rng
from network.adam import AdamState, adam_step
from network.mlp import MlpConfig, MlpParams, backward, copy_params, forward, init_params
from agents.dqn import td_targets
from agents.q_policy import greedy_action

EPOCH_COLUMNS = ["epoch", "total_loss", "td_loss", "penalty", "eval_return_mean", "eval_return_std"]


class CqlLoss(NamedTuple):
    """损失分量：total = α·penalty + td_loss"""
    total: float
    td_loss: float
    penalty: float


def network_config(config: CqlConfig) -> MlpConfig:
    return MlpConfig(
        input_dim=STATE_DIM,
        hidden_dims=list(config.hidden_dims),
        output_dim=N_ACTIONS,
        activation=config.activation,
        dropout_rate=config.dropout_rate,
    )


# ============================================================================
# 保守项
# ============================================================================

def _logsumexp_rows(q: np.ndarray) -> np.ndarray:
    # 减去行最大值后再取指数
    m = q.max(axis=1, keepdims=True)
    return m[:, 0] + np.log(np.exp(q - m).sum(axis=1))


def _softmax_rows(q: np.ndarray) -> np.ndarray:
    e = np.exp(q - q.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def conservative_penalties(q: np.ndarray, actions: np.ndarray) -> np.ndarray:
    """逐样本 logsumexp(q) - q[a]，q 形状 (B, 3)"""
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    actions = np.asarray(actions, dtype=np.int64).reshape(-1)
    return _logsumexp_rows(q) - q[np.arange(len(actions)), actions]


def conservative_penalty(q_row: np.ndarray, data_action: int) -> float:
    """
    单个状态的保守项 logsumexp(q_row) - q_row[data_action]（恒 >= 0）

    Raises:
        NumericError: q_row 含非有限值
    """
    q_row = np.asarray(q_row, dtype=np.float64)
    if not np.all(np.isfinite(q_row)):
        raise NumericError("Q 值含非有限值", "q_row")
    return float(conservative_penalties(q_row[None, :], np.array([int(data_action)]))[0])


# ============================================================================
# 损失与更新
# ============================================================================

def _loss_and_output_grad(q: np.ndarray, batch: TransitionBatch, targets: np.ndarray, alpha: float):
    n = len(batch)
    rows = np.arange(n)
    penalties = conservative_penalties(q, batch.actions)
    td = q[rows, batch.actions] - targets
    td_loss = 0.5 * float(np.mean(td ** 2))
    penalty = float(np.mean(penalties))
    loss = CqlLoss(total=alpha * penalty + td_loss, td_loss=td_loss, penalty=penalty)

    onehot = np.zeros_like(q)
    onehot[rows, batch.actions] = 1.0
    grad = alpha * (_softmax_rows(q) - onehot) / n
    grad[rows, batch.actions] += td / n
    return loss, grad


def cql_loss(
    batch: TransitionBatch,
    params: MlpParams,
    target_params: MlpParams,
    config: CqlConfig,
) -> CqlLoss:
    """
    计算 CQL 损失（eval 模式，不更新参数）

    TD 目标: done 时为 r，否则 r + γ·max_a Q(s'; θ⁻)。
    """
    if len(batch) == 0:
        raise UsageError("批量为空")
    targets = td_targets(batch, target_params, config.gamma)
    q, _ = forward(params, batch.states, "eval")
    loss, _ = _loss_and_output_grad(q, batch, targets, config.alpha)
    return loss


def cql_update(
    params: MlpParams,
    target_params: MlpParams,
    adam: AdamState,
    batch: TransitionBatch,
    config: CqlConfig,
    rng: Optional[np.random.Generator] = None,
) -> CqlLoss:
    """一次 Adam 更新（train 模式，启用 dropout）"""
    targets = td_targets(batch, target_params, config.gamma)
    q, cache = forward(params, batch.states, "train", rng)
    loss, grad = _loss_and_output_grad(q, batch, targets, config.alpha)
    if not np.isfinite(loss.total):
        raise NumericError("CQL 损失出现非有限值", "loss")
    adam_step(params, backward(params, cache, grad), adam)
    return loss


def mean_dataset_q(params: MlpParams, batch: TransitionBatch) -> float:
    """数据集 (s, a) 上的平均 Q 值"""
    q, _ = forward(params, batch.states, "eval")
    return float(np.mean(q[np.arange(len(batch)), batch.actions]))


# ============================================================================
# 训练
# ============================================================================

@dataclass
class EpochStats:
    epoch: int
    total_loss: float
    td_loss: float
    penalty: float
    eval_return_mean: float
    eval_return_std: float
    env_steps_during_training: int = 0


@dataclass
class EpochLog:
    """逐轮训练记录"""
    rows: List[EpochStats] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, stats: EpochStats):
        self.rows.append(stats)

    @property
    def eval_returns(self) -> List[float]:
        return [r.eval_return_mean for r in self.rows]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[getattr(r, c) for c in EPOCH_COLUMNS] for r in self.rows],
            columns=EPOCH_COLUMNS,
        ).astype({"epoch": "int64"})

    def to_csv(self, path: Path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        logger.info("📝 轮次日志: {}", path)


@dataclass
class CqlResult:
    params: MlpParams
    log: EpochLog
    n_train_episodes: int = 0
    n_test_episodes: int = 0
    gradient_steps: int = 0


def held_out_returns(
    params: MlpParams,
    initial_states: Sequence[PipeState],
    env: PipeEnv,
    seed: int,
) -> np.ndarray:
    """
    在模拟器中从每个初始状态 rollout 贪心策略，返回各回合未折扣回报

    第 k 条 rollout 使用固定的随机数流 (seed, "cql", "eval", k)，各轮评估面对相同的随机过程。
    """
    returns = np.zeros(len(initial_states), dtype=np.float64)
    for k, state in enumerate(initial_states):
        state = env.reset_state(state, make_rng(seed, "cql", "eval", k))
        total = 0.0
        while not env.done:
            q, _ = forward(params, encode_state(state), "eval")
            outcome = env.step(greedy_action(q))
            total += outcome.reward
            state = outcome.next_state
        returns[k] = total
    return returns


def _dataset_records(dataset: Union[TransitionDataset, Sequence[TransitionRecord]]) -> List[TransitionRecord]:
    if isinstance(dataset, TransitionDataset):
        return list(dataset.records)
    return list(dataset)


def train_offline(
    dataset: Union[TransitionDataset, Sequence[TransitionRecord]],
    config: Optional[CqlConfig] = None,
    env_config: Optional[EnvConfig] = None,
    env: Optional[PipeEnv] = None,
    show_progress: bool = False,
) -> CqlResult:
    """
    离线训练 CQL

    按回合 80/20 划分；每轮遍历打乱的训练小批量（启用 dropout），每批一次 Adam 更新；
    轮末记录平均损失分量与留出 rollout 回报。

    Args:
        dataset: 数据集或记录序列
        config: CQL 配置
        env_config: 评估 rollout 使用的环境配置
        env: 评估用环境（可注入带计数器的实例）
        show_progress: 是否显示进度条

    Raises:
        UsageError: 数据集为空或回合数少于 2
        RehabError: 梯度计算期间发生了环境交互
    """
    config = config or CqlConfig()
    records = _dataset_records(dataset)
    if not records:
        raise UsageError("数据集为空")

    train_records, test_records = split_dataset(records, config.train_fraction, make_rng(config.seed, "cql", "split"))
    test_episodes = group_episodes(test_records)
    initial_states = [episode[0].state() for episode in test_episodes]
    batch_all = records_to_batch(train_records)
    n = len(batch_all)

    params = init_params(network_config(config), make_rng(config.seed, "cql", "init"))
    target = copy_params(params)
    adam = AdamState.for_params(params, lr=config.learning_rate)
    shuffle_rng = make_rng(config.seed, "cql", "shuffle")
    dropout_rng = make_rng(config.seed, "cql", "dropout")
    env = env or PipeEnv(env_config or EnvConfig(), rng=make_rng(config.seed, "cql", "env"))
    log = EpochLog()
    n_train_episodes = len(group_episodes(train_records))

    logger.info(
        "🚀 CQL 训练开始: {} 训练回合 / {} 测试回合, α={} epochs={}",
        n_train_episodes, len(test_episodes), config.alpha, config.epochs,
    )
    gradient_steps = 0
    progress = tqdm(range(1, config.epochs + 1), desc="CQL", unit="epoch", disable=not show_progress)
    for epoch in progress:
        steps_before = env.step_count
        order = shuffle_rng.permutation(n)
        totals, tds, penalties = [], [], []
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch = TransitionBatch(
                states=batch_all.states[idx],
                actions=batch_all.actions[idx],
                rewards=batch_all.rewards[idx],
                next_states=batch_all.next_states[idx],
                dones=batch_all.dones[idx],
            )
            loss = cql_update(params, target, adam, batch, config, dropout_rng)
            totals.append(loss.total)
            tds.append(loss.td_loss)
            penalties.append(loss.penalty)
            gradient_steps += 1
            if gradient_steps % config.target_sync_every == 0:
                target = copy_params(params)
        leaked = env.step_count - steps_before
        if leaked:
            raise RehabError(f"梯度计算期间发生了 {leaked} 次环境交互")

        returns = held_out_returns(params, initial_states, env, config.seed)
        stats = EpochStats(
            epoch=epoch,
            total_loss=float(np.mean(totals)),
            td_loss=float(np.mean(tds)),
            penalty=float(np.mean(penalties)),
            eval_return_mean=float(np.mean(returns)),
            eval_return_std=float(np.std(returns)),
            env_steps_during_training=leaked,
        )
        log.append(stats)
        if epoch % config.log_every == 0:
            logger.info(
                "📈 epoch {}/{} loss={:.4f} td={:.4f} penalty={:.4f} eval_return={:.2f}",
                epoch, config.epochs, stats.total_loss, stats.td_loss, stats.penalty, stats.eval_return_mean,
            )
        progress.set_postfix(ret=f"{stats.eval_return_mean:.1f}")

    if not params.is_finite():
        raise NumericError("训练后参数含非有限值", "params")
    logger.success("✅ CQL 训练完成: {} 轮, {} 次梯度更新", config.epochs, gradient_steps)
    return CqlResult(
        params=params,
        log=log,
        n_train_episodes=n_train_episodes,
        n_test_episodes=len(test_episodes),
        gradient_steps=gradient_steps,
    )


# ============================================================================
# 数据源对比
# ============================================================================

def compare_sources(
    datasets: Dict[str, TransitionDataset],
    config: Optional[CqlConfig] = None,
    env_config: Optional[EnvConfig] = None,
    max_workers: int = 1,
) -> Dict[str, CqlResult]:
    """
    以相同配置与种子在每个数据源上训练 CQL

    各次训练拥有各自的参数与随机数流，可以并行执行。

    Raises:
        UsageError: 数据集为空或大小不一致
    """
    if not datasets:
        raise UsageError("至少需要一个数据集")
    sizes = {name: len(ds) for name, ds in datasets.items()}
    if len(set(sizes.values())) != 1:
        raise UsageError(f"各数据源大小必须一致: {sizes}")
    config = config or CqlConfig()
    names = list(datasets)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(lambda name: train_offline(datasets[name], config, env_config), names))
    for name, result in zip(names, results):
        final = result.log.eval_returns[-1] if len(result.log) else float("nan")
        logger.info("📊 {}: final eval_return={:.2f}", name, final)
    return dict(zip(names, results))


def align_curves(curves: Dict[str, EpochLog]) -> pd.DataFrame:
    """
    合并各数据源的轮次日志

    Returns:
        列为 epoch 与 {source}_{指标} 的表，按 epoch 对齐
    """
    merged: Optional[pd.DataFrame] = None
    for name, log in curves.items():
        frame = log.to_frame().set_index("epoch")
        frame.columns = [f"{name}_{c}" for c in frame.columns]
        merged = frame if merged is None else merged.join(frame, how="outer")
    if merged is None:
        return pd.DataFrame(columns=["epoch"])
    return merged.reset_index()

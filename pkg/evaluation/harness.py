"""
策略评估

对任意策略（已训练模型或基线）在整个管道清单上 rollout，计算对比指标：
平均干预成本、时间平均失效概率、动作计数与成本效益比。
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger
from tqdm import tqdm

from config import EnvConfig, EvalConfig
from core.environment import Action, PipeEnv, PipeSpec
from core.errors import UsageError
from core.rng import make_rng, spawn
from agents.base import BasePolicy

# 干预成本只计实际执行动作的支出，不含不必要维护 / 延误惩罚与 -pf 项
INTERVENTION_COSTS = {
    Action.DO_NOTHING: 0.0,
    Action.MAINTAIN: 0.5,
    Action.REPLACE: 0.8,
}

METRIC_COLUMNS = [
    "policy", "avg_cost", "avg_pf", "n_do_nothing", "n_maintain", "n_replace",
    "replace_per_pipe", "cost_effectiveness",
]
PERPIPE_COLUMNS = ["policy", "pipe_id", "avg_cost", "avg_pf", "n_do_nothing", "n_maintain", "n_replace"]


@dataclass(frozen=True)
class StepRecord:
    """单步记录；pf 为智能体观察到的（动作前）失效概率"""
    t: int
    age: int
    pf: float
    next_pf: float
    action: Action
    executed_action: Action
    reward: float
    mc: float
    pf_penalty: float
    sudden_failure: bool


@dataclass
class EpisodeTrace:
    pipe_id: int
    steps: List[StepRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def total_reward(self) -> float:
        return float(sum(s.reward for s in self.steps))

    @property
    def mean_pf(self) -> float:
        return float(np.mean([s.pf for s in self.steps])) if self.steps else 0.0

    def action_counts(self) -> Dict[Action, int]:
        """按实际执行动作计数（突发失效计为更换）"""
        counts = {a: 0 for a in Action}
        for s in self.steps:
            counts[s.executed_action] += 1
        return counts


def rollout(
    policy: BasePolicy,
    spec: PipeSpec,
    rng: np.random.Generator,
    env_config: Optional[EnvConfig] = None,
    env: Optional[PipeEnv] = None,
) -> EpisodeTrace:
    """
    从 reset(spec) 开始运行一个完整回合

    rng 派生两条子流：环境（突发失效、维护降龄）与策略（仅随机策略使用），
    不同策略在同一 rng 下面对相同的突发失效序列起点。
    """
    env_rng, act_rng = spawn(rng, 2)
    env = env or PipeEnv(env_config or EnvConfig())
    state = env.reset(spec, env_rng)
    trace = EpisodeTrace(pipe_id=spec.id)
    while not env.done:
        action = Action(policy.act(state, act_rng))
        outcome = env.step(action)
        trace.steps.append(StepRecord(
            t=state.t,
            age=state.age,
            pf=state.pf,
            next_pf=outcome.next_state.pf,
            action=action,
            executed_action=outcome.executed_action,
            reward=outcome.reward,
            mc=outcome.mc,
            pf_penalty=outcome.pf_penalty,
            sudden_failure=outcome.sudden_failure,
        ))
        state = outcome.next_state
    return trace


def intervention_cost(trace: EpisodeTrace) -> float:
    """回合干预成本：每次执行维护 0.5、更换 0.8（含突发失效强制更换）"""
    return float(sum(INTERVENTION_COSTS[s.executed_action] for s in trace.steps))


# ============================================================================
# 报告
# ============================================================================

@dataclass
class PipeBreakdown:
    pipe_id: int
    avg_cost: float
    avg_pf: float
    n_do_nothing: int
    n_maintain: int
    n_replace: int


@dataclass
class PolicyReport:
    """单个策略的评估指标"""
    policy: str
    episodes_per_pipe: int
    n_pipes: int
    avg_intervention_cost: float
    avg_pf: float
    n_do_nothing: int
    n_maintain: int
    n_replace: int
    per_pipe: List[PipeBreakdown] = field(default_factory=list)

    @property
    def total_steps(self) -> int:
        return self.n_do_nothing + self.n_maintain + self.n_replace

    @property
    def replace_per_pipe(self) -> float:
        episodes = self.n_pipes * self.episodes_per_pipe
        return self.n_replace / episodes if episodes else 0.0

    @property
    def cost_effectiveness(self) -> Optional[float]:
        """(1 - avg_pf) / avg_cost；成本为 0 时无定义"""
        if self.avg_intervention_cost <= 0:
            return None
        return (1.0 - self.avg_pf) / self.avg_intervention_cost

    def to_row(self) -> Dict[str, object]:
        return {
            "policy": self.policy,
            "avg_cost": self.avg_intervention_cost,
            "avg_pf": self.avg_pf,
            "n_do_nothing": self.n_do_nothing,
            "n_maintain": self.n_maintain,
            "n_replace": self.n_replace,
            "replace_per_pipe": self.replace_per_pipe,
            "cost_effectiveness": self.cost_effectiveness,
        }


def summarize(policy_name: str, roster: Sequence[PipeSpec], traces: Sequence[EpisodeTrace], episodes_per_pipe: int) -> PolicyReport:
    """把按 (管道, 回合) 顺序排列的轨迹汇总为报告"""
    per_pipe: List[PipeBreakdown] = []
    for i, spec in enumerate(roster):
        chunk = traces[i * episodes_per_pipe:(i + 1) * episodes_per_pipe]
        counts = {a: 0 for a in Action}
        for trace in chunk:
            for a, c in trace.action_counts().items():
                counts[a] += c
        per_pipe.append(PipeBreakdown(
            pipe_id=spec.id,
            avg_cost=float(np.mean([intervention_cost(t) for t in chunk])),
            avg_pf=float(np.mean([s.pf for t in chunk for s in t.steps])),
            n_do_nothing=counts[Action.DO_NOTHING],
            n_maintain=counts[Action.MAINTAIN],
            n_replace=counts[Action.REPLACE],
        ))

    return PolicyReport(
        policy=policy_name,
        episodes_per_pipe=episodes_per_pipe,
        n_pipes=len(roster),
        avg_intervention_cost=float(np.mean([p.avg_cost for p in per_pipe])),
        avg_pf=float(np.mean([p.avg_pf for p in per_pipe])),
        n_do_nothing=sum(p.n_do_nothing for p in per_pipe),
        n_maintain=sum(p.n_maintain for p in per_pipe),
        n_replace=sum(p.n_replace for p in per_pipe),
        per_pipe=per_pipe,
    )


def evaluate_policy(
    policy: BasePolicy,
    roster: Sequence[PipeSpec],
    episodes_per_pipe: Optional[int] = None,
    seed: Optional[int] = None,
    env_config: Optional[EnvConfig] = None,
    eval_config: Optional[EvalConfig] = None,
    show_progress: bool = False,
) -> PolicyReport:
    """
    在全部管道上评估策略

    每条 rollout 的随机数流由 (seed, "eval", pipe_id, episode) 派生，并行与串行结果一致。

    Raises:
        UsageError: 管道清单为空或 episodes_per_pipe < 1
    """
    eval_config = eval_config or EvalConfig()
    episodes_per_pipe = episodes_per_pipe if episodes_per_pipe is not None else eval_config.episodes_per_pipe
    seed = seed if seed is not None else eval_config.seed
    env_config = env_config or EnvConfig()
    if episodes_per_pipe < 1:
        raise UsageError(f"episodes_per_pipe 必须 >= 1: {episodes_per_pipe}")
    if not roster:
        raise UsageError("管道清单为空")

    tasks = [(spec, episode) for spec in roster for episode in range(episodes_per_pipe)]

    def _run(task) -> EpisodeTrace:
        spec, episode = task
        return rollout(policy, spec, make_rng(seed, "eval", spec.id, episode), env_config)

    with ThreadPoolExecutor(max_workers=eval_config.max_workers) as pool:
        traces = list(tqdm(
            pool.map(_run, tasks),
            total=len(tasks),
            desc=f"eval[{policy.name}]",
            unit="ep",
            disable=not show_progress,
        ))

    report = summarize(policy.name, roster, traces, episodes_per_pipe)
    logger.info(
        "📊 {}: avg_cost={:.3f} avg_pf={:.3f} actions=({}, {}, {})",
        report.policy, report.avg_intervention_cost, report.avg_pf,
        report.n_do_nothing, report.n_maintain, report.n_replace,
    )
    return report


# ============================================================================
# 对比
# ============================================================================

def dominates(a: PolicyReport, b: PolicyReport) -> bool:
    """a 的平均成本与平均失效概率都严格低于 b"""
    return a.avg_intervention_cost < b.avg_intervention_cost and a.avg_pf < b.avg_pf


@dataclass
class ComparisonTables:
    metrics: pd.DataFrame
    perpipe: pd.DataFrame
    plotdata: pd.DataFrame


def build_tables(reports: Sequence[PolicyReport]) -> ComparisonTables:
    """组装指标表、逐管道表与绘图数据（成本-失效概率散点 + 成本效益柱）"""
    metrics = pd.DataFrame([r.to_row() for r in reports], columns=METRIC_COLUMNS)
    perpipe = pd.DataFrame(
        [
            [r.policy, p.pipe_id, p.avg_cost, p.avg_pf, p.n_do_nothing, p.n_maintain, p.n_replace]
            for r in reports
            for p in r.per_pipe
        ],
        columns=PERPIPE_COLUMNS,
    )
    points = []
    for r in reports:
        points.append({"series": "cost_vs_pf", "label": r.policy, "x": r.avg_intervention_cost, "y": r.avg_pf})
    for i, r in enumerate(reports):
        points.append({"series": "cost_effectiveness", "label": r.policy, "x": float(i), "y": r.cost_effectiveness})
    plotdata = pd.DataFrame(points, columns=["series", "label", "x", "y"])
    return ComparisonTables(metrics=metrics, perpipe=perpipe, plotdata=plotdata)


def compare(reports: Sequence[PolicyReport]) -> ComparisonTables:
    """
    对比多个策略

    Raises:
        UsageError: 报告少于 2 个
    """
    if len(reports) < 2:
        raise UsageError(f"至少需要 2 个策略报告，实际 {len(reports)}")
    for a in reports:
        beaten = [b.policy for b in reports if b is not a and dominates(a, b)]
        if beaten:
            logger.info("🏆 {} 在成本与失效概率上同时优于: {}", a.policy, ", ".join(beaten))
    return build_tables(reports)

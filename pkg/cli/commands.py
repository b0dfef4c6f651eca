"""
CLI命令定义（argparse）
"""
import argparse

from config import describe_config_keys
from core.dataset import SourcePolicy
from agents.baselines import BaselineKind


def _add_global_options(parser: argparse.ArgumentParser, suppress: bool = False):
    """
    添加全局参数

    顶层解析器带真实默认值；子命令上的副本用 SUPPRESS，
    未在子命令后出现时不会覆盖子命令前已解析的值。
    """
    def default(value):
        return argparse.SUPPRESS if suppress else value

    group = parser.add_argument_group('全局参数')
    group.add_argument('--config', type=str, default=default(None),
                       help='TOML 配置文件（如 configs/paper.toml）')
    group.add_argument('--seed', type=int, default=default(None),
                       help='全局随机种子（覆盖各分节 seed）')
    group.add_argument('--out-dir', type=str, default=default(None),
                       help='输出目录（默认 runs/）')
    group.add_argument('--set', dest='overrides', action='append', default=default([]), metavar='KEY=VALUE',
                       help='覆盖任意配置键，可重复，如 --set dqn.gamma=0.9')
    group.add_argument('--roster', type=str, default=default(None),
                       help='管道清单 CSV（默认 data/pipes.csv）')
    group.add_argument('--no-progress', dest='show_progress', action='store_false', default=default(None),
                       help='关闭进度条')


def _global_options() -> argparse.ArgumentParser:
    """所有子命令共享的全局参数（SUPPRESS 副本）"""
    parent = argparse.ArgumentParser(add_help=False)
    _add_global_options(parent, suppress=True)
    return parent


def create_parser() -> argparse.ArgumentParser:
    """
    创建命令行参数解析器

    Returns:
        ArgumentParser 实例
    """
    keys = "\n".join(f"  {line}" for line in describe_config_keys())
    parser = argparse.ArgumentParser(
        prog='rehab.py',
        description='供水管道养护规划：在线 DQN / 离线 CQL 与基线策略对比',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f'''
示例:
  # 在线训练（同时写出 near-expert 数据集）
  python rehab.py train-dqn --config configs/paper.toml --seed 0
  python rehab.py train-dqn --episodes 10 --out-dir runs/smoke

  # 采集数据集
  python rehab.py collect --policy random --episodes 1000
  python rehab.py collect --policy expert --model runs/dqn.json

  # 离线训练
  python rehab.py train-cql --dataset runs/near_expert.jsonl --epochs 200

  # 评估与对比
  python rehab.py evaluate --model runs/dqn.json --model runs/cql.json --strategy maintain-5 --strategy greedy

  # 数据源对比
  python rehab.py compare-sources --random runs/random.jsonl --near-expert runs/near_expert.jsonl --expert runs/expert.jsonl

配置键（--set KEY=VALUE，优先级: 默认值 < TOML < 命令行）:
{keys}
        '''
    )
    _add_global_options(parser)
    parent = _global_options()

    # 创建子命令
    subparsers = parser.add_subparsers(dest='command', help='子命令', required=True)

    # ============================================================================
    # 子命令: train-dqn - 在线训练
    # ============================================================================
    parser_dqn = subparsers.add_parser('train-dqn', parents=[parent],
                                       help='在线训练 DQN，写出模型、训练日志与 near-expert 数据集')
    parser_dqn.add_argument('--episodes', type=int, default=None, help='训练回合数（dqn.episodes）')
    parser_dqn.add_argument('--model-out', type=str, default=None, help='模型路径（默认 <out-dir>/dqn.json）')
    parser_dqn.add_argument('--log-out', type=str, default=None, help='训练日志（默认 <out-dir>/dqn_log.csv）')
    parser_dqn.add_argument('--dataset-out', type=str, default=None,
                            help='数据集路径（默认 <out-dir>/near_expert.jsonl）')

    # ============================================================================
    # 子命令: collect - 采集数据集
    # ============================================================================
    parser_collect = subparsers.add_parser('collect', parents=[parent], help='用指定行为策略采集数据集')
    parser_collect.add_argument('--policy', type=str, required=True, choices=[s.value for s in SourcePolicy],
                                help='行为策略')
    parser_collect.add_argument('--model', type=str, default=None, help='expert 模式使用的模型 JSON')
    parser_collect.add_argument('--episodes', type=int, default=None, help='回合数（默认 dqn.episodes）')
    parser_collect.add_argument('--out', type=str, default=None, help='数据集路径（默认 <out-dir>/<policy>.jsonl）')

    # ============================================================================
    # 子命令: train-cql - 离线训练
    # ============================================================================
    parser_cql = subparsers.add_parser('train-cql', parents=[parent], help='在静态数据集上离线训练 CQL')
    parser_cql.add_argument('--dataset', type=str, required=True, help='数据集 JSONL')
    parser_cql.add_argument('--epochs', type=int, default=None, help='训练轮数（cql.epochs）')
    parser_cql.add_argument('--alpha', type=float, default=None, help='保守项权重（cql.alpha）')
    parser_cql.add_argument('--model-out', type=str, default=None, help='模型路径（默认 <out-dir>/cql.json）')
    parser_cql.add_argument('--log-out', type=str, default=None, help='轮次日志（默认 <out-dir>/cql_log.csv）')

    # ============================================================================
    # 子命令: evaluate - 评估与对比
    # ============================================================================
    parser_eval = subparsers.add_parser('evaluate', parents=[parent],
                                        help='评估模型与基线，写出 metrics/perpipe/plotdata CSV')
    parser_eval.add_argument('--model', dest='models', action='append', default=[], help='模型 JSON（可重复）')
    parser_eval.add_argument('--strategy', dest='strategies', action='append', default=[],
                             choices=[k.value for k in BaselineKind], help='基线策略（可重复）')
    parser_eval.add_argument('--episodes-per-pipe', type=int, default=None,
                             help='每根管道评估回合数（evaluation.episodes_per_pipe）')

    # ============================================================================
    # 子命令: compare-sources - 数据源对比
    # ============================================================================
    parser_sources = subparsers.add_parser('compare-sources', parents=[parent],
                                           help='以相同配置在不同来源的数据集上训练 CQL 并对齐学习曲线')
    parser_sources.add_argument('--random', type=str, default=None, help='random 数据集')
    parser_sources.add_argument('--near-expert', type=str, default=None, help='near_expert 数据集')
    parser_sources.add_argument('--expert', type=str, default=None, help='expert 数据集')
    parser_sources.add_argument('--epochs', type=int, default=None, help='训练轮数（cql.epochs）')
    parser_sources.add_argument('--alpha', type=float, default=None, help='保守项权重（cql.alpha）')

    return parser

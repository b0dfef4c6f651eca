"""
CLI命令处理函数

每个处理函数接收已解析的参数与 RunConfig；失败时抛出 RehabError，
由 rehab.py 映射为退出码。
"""
from pathlib import Path
from typing import Any, Callable, Dict, List

from loguru import logger

from config import RunConfig, create_run_config
from core.dataset import DatasetHeader, DatasetWriter, SourcePolicy, read_dataset, write_dataset
from core.errors import UsageError
from core.roster import load_pipes, roster_checksum
from network.model_io import load_model, save_model
from agents import PolicyFactory
from agents.collector import collect
from agents.cql import align_curves, compare_sources, mean_dataset_q, train_offline
from agents.dqn import train
from evaluation.harness import build_tables, compare, evaluate_policy
from evaluation.report import write_comparison, write_frame


def build_config(args) -> RunConfig:
    """
    由命令行参数构建配置

    优先级: 默认值 < 环境变量 < --config TOML < --set < 具名参数（--seed、--episodes 等）
    """
    values: Dict[str, Any] = {}
    if getattr(args, 'seed', None) is not None:
        values['seed'] = args.seed
    if getattr(args, 'out_dir', None):
        values['out_dir'] = args.out_dir
    if getattr(args, 'roster', None):
        values['env.roster_path'] = args.roster
    if getattr(args, 'show_progress', None) is not None:
        values['show_progress'] = args.show_progress
    if args.command == 'train-dqn' and getattr(args, 'episodes', None) is not None:
        values['dqn.episodes'] = args.episodes
    if getattr(args, 'epochs', None) is not None:
        values['cql.epochs'] = args.epochs
    if getattr(args, 'alpha', None) is not None:
        values['cql.alpha'] = args.alpha
    if getattr(args, 'episodes_per_pipe', None) is not None:
        values['evaluation.episodes_per_pipe'] = args.episodes_per_pipe
    return create_run_config(
        config_file=Path(args.config) if getattr(args, 'config', None) else None,
        overrides=getattr(args, 'overrides', None),
        values=values,
    )


def print_summary(title: str, rows: Dict[str, Any]):
    """输出运行汇总"""
    print("\n" + "=" * 60)
    print(f"📊 {title}:")
    for key, value in rows.items():
        print(f"  {key}: {value}")
    print("=" * 60)


def _out_path(explicit, config: RunConfig, default_name: str) -> Path:
    return Path(explicit) if explicit else config.out_dir / default_name


def handle_train_dqn(args, config: RunConfig):
    """在线训练：一次运行写出模型、训练日志与 near-expert 数据集"""
    print(f"\n📌 命令: train-dqn (episodes={config.dqn.episodes}, seed={config.dqn.seed})")
    roster = load_pipes(config.env.roster_path)
    model_path = _out_path(args.model_out, config, 'dqn.json')
    log_path = _out_path(args.log_out, config, 'dqn_log.csv')
    dataset_path = _out_path(args.dataset_out, config, 'near_expert.jsonl')

    header = DatasetHeader(
        source_policy=SourcePolicy.NEAR_EXPERT,
        episodes=config.dqn.episodes,
        steps_per_episode=config.env.horizon,
        seed=config.dqn.seed,
        roster_checksum=roster_checksum(roster),
    )
    with DatasetWriter(dataset_path, header) as writer:
        result = train(roster, config.dqn, config.env, sink=writer, show_progress=config.show_progress)
    save_model(model_path, result.params, sidecar={
        'trainer': 'dqn',
        'dqn': config.dqn.model_dump(mode='json'),
        'env': config.env.model_dump(mode='json'),
    })
    result.log.to_csv(log_path)

    frame = result.log.to_frame()
    print_summary("训练统计", {
        "回合数": len(result.log),
        "环境步数": result.total_steps,
        "梯度更新": result.n_updates,
        "最终滑动平均回报": f"{frame['rolling_mean_20'].iloc[-1]:.2f}" if len(frame) else "-",
        "模型": model_path,
        "训练日志": log_path,
        "数据集": f"{dataset_path} ({writer.count} 条)",
    })


def handle_collect(args, config: RunConfig):
    """采集数据集"""
    source = SourcePolicy(args.policy)
    episodes = args.episodes if args.episodes is not None else config.dqn.episodes
    print(f"\n📌 命令: collect (policy={source.value}, episodes={episodes})")
    if source == SourcePolicy.EXPERT and not args.model:
        raise UsageError("--policy expert 需要 --model")
    params = load_model(Path(args.model)) if args.model else None
    roster = load_pipes(config.env.roster_path)
    seed = config.seed if config.seed is not None else config.dqn.seed

    dataset = collect(
        source,
        roster,
        episodes,
        seed=seed,
        env_config=config.env,
        params=params,
        dqn_config=config.dqn,
        show_progress=config.show_progress,
    )
    out = _out_path(args.out, config, f'{source.value}.jsonl')
    write_dataset(dataset.header, dataset.records, out)
    counts = dataset.action_counts()
    print_summary("采集统计", {
        "来源": source.value,
        "回合数": episodes,
        "转移数": len(dataset),
        "动作计数 (0/1/2)": "/".join(str(c) for c in counts),
        "数据集": out,
    })


def handle_train_cql(args, config: RunConfig):
    """离线训练 CQL"""
    print(f"\n📌 命令: train-cql (epochs={config.cql.epochs}, alpha={config.cql.alpha})")
    dataset = read_dataset(Path(args.dataset))
    model_path = _out_path(args.model_out, config, 'cql.json')
    log_path = _out_path(args.log_out, config, 'cql_log.csv')

    result = train_offline(dataset, config.cql, config.env, show_progress=config.show_progress)
    save_model(model_path, result.params, sidecar={
        'trainer': 'cql',
        'cql': config.cql.model_dump(mode='json'),
        'env': config.env.model_dump(mode='json'),
        'dataset': dataset.header.model_dump(mode='json'),
    })
    result.log.to_csv(log_path)

    returns = result.log.eval_returns
    print_summary("训练统计", {
        "数据来源": dataset.header.source_policy.value,
        "训练 / 测试回合": f"{result.n_train_episodes} / {result.n_test_episodes}",
        "梯度更新": result.gradient_steps,
        "最终留出回报": f"{returns[-1]:.2f}" if returns else "-",
        "数据集平均 Q": f"{mean_dataset_q(result.params, dataset.to_batch()):.4f}",
        "模型": model_path,
        "轮次日志": log_path,
    })


def handle_evaluate(args, config: RunConfig):
    """评估模型与基线"""
    policies = PolicyFactory.create_all(
        models=[Path(m) for m in args.models],
        strategies=args.strategies,
        config=config.baseline,
    )
    print(f"\n📌 命令: evaluate ({len(policies)} 个策略, {config.evaluation.episodes_per_pipe} 回合/管道)")
    roster = load_pipes(config.env.roster_path)
    reports = [
        evaluate_policy(
            policy,
            roster,
            config.evaluation.episodes_per_pipe,
            config.evaluation.seed,
            env_config=config.env,
            eval_config=config.evaluation,
            show_progress=config.show_progress,
        )
        for policy in policies
    ]
    tables = compare(reports) if len(reports) >= 2 else build_tables(reports)
    paths = write_comparison(tables, config.out_dir)

    print("\n" + tables.metrics.to_string(index=False))
    print_summary("评估统计", {
        "策略": ", ".join(r.policy for r in reports),
        "管道数": len(roster),
        **{name: path for name, path in paths.items()},
    })


def handle_compare_sources(args, config: RunConfig):
    """数据源对比"""
    sources = {
        SourcePolicy.RANDOM.value: args.random,
        SourcePolicy.NEAR_EXPERT.value: args.near_expert,
        SourcePolicy.EXPERT.value: args.expert,
    }
    sources = {name: path for name, path in sources.items() if path}
    if not sources:
        raise UsageError("至少需要 --random / --near-expert / --expert 之一")
    print(f"\n📌 命令: compare-sources ({', '.join(sources)})")
    datasets = {name: read_dataset(Path(path)) for name, path in sources.items()}

    results = compare_sources(datasets, config.cql, config.env, max_workers=config.evaluation.max_workers)
    for name, result in results.items():
        result.log.to_csv(config.out_dir / f'cql_{name}_log.csv')
    curves = align_curves({name: result.log for name, result in results.items()})
    out = write_frame(curves, config.out_dir / 'sources.csv')

    final: List[str] = []
    for name, result in results.items():
        returns = result.log.eval_returns
        final.append(f"{name}={returns[-1]:.2f}" if returns else f"{name}=-")
    print_summary("数据源对比", {
        "最终留出回报": ", ".join(final),
        "学习曲线": out,
    })


COMMAND_HANDLERS: Dict[str, Callable] = {
    'train-dqn': handle_train_dqn,
    'collect': handle_collect,
    'train-cql': handle_train_cql,
    'evaluate': handle_evaluate,
    'compare-sources': handle_compare_sources,
}


def dispatch(args, config: RunConfig):
    """按子命令分发"""
    handler = COMMAND_HANDLERS.get(args.command)
    if handler is None:
        raise UsageError(f"未知子命令: {args.command}")
    logger.debug("dispatch {} out_dir={}", args.command, config.out_dir)
    config.ensure_directories()
    return handler(args, config)

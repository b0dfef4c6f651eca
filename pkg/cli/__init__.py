"""
CLI模块

包含命令行接口相关功能：
- handlers: 命令处理函数
- commands: argparse 定义
"""
from cli.handlers import (
    build_config,
    dispatch,
    handle_train_dqn,
    handle_collect,
    handle_train_cql,
    handle_evaluate,
    handle_compare_sources,
    print_summary,
)
from cli.commands import create_parser

__all__ = [
    'build_config',
    'dispatch',
    'handle_train_dqn',
    'handle_collect',
    'handle_train_cql',
    'handle_evaluate',
    'handle_compare_sources',
    'print_summary',
    'create_parser',
]

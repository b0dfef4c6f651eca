"""
CLI handlers 单元测试（经由 rehab.main 端到端调用，检查退出码与输出文件）
"""
import json
import shutil
import tempfile
import unittest
from pathlib import Path
from unittest.mock import MagicMock, patch

import pandas as pd
from loguru import logger

from config import CONFIG_DIR
from core.dataset import read_dataset
from core.errors import NumericError, UsageError
from network.model_io import load_model, load_sidecar
from cli.handlers import build_config, dispatch, print_summary
from rehab import main


class CliTestCase(unittest.TestCase):
    """公共夹具：临时输出目录 + 冒烟配置"""

    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp())
        self.common = [
            "--config", str(CONFIG_DIR / "smoke.toml"),
            "--out-dir", str(self.test_dir),
            "--set", f"log.log_dir={self.test_dir / 'logs'}",
            "--no-progress",
        ]

    def tearDown(self):
        logger.remove()
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def run_cli(self, *argv: str) -> int:
        command, rest = argv[0], list(argv[1:])
        return main([command, *self.common, *rest])


class TestEvaluateCommand(CliTestCase):
    """evaluate 子命令"""

    def test_two_strategies(self):
        code = self.run_cli("evaluate", "--strategy", "maintain-10", "--strategy", "greedy")
        self.assertEqual(code, 0)
        metrics = pd.read_csv(self.test_dir / "metrics.csv")
        self.assertEqual(metrics["policy"].tolist(), ["maintain-10", "greedy"])
        self.assertTrue((self.test_dir / "perpipe.csv").exists())
        self.assertTrue((self.test_dir / "plotdata.csv").exists())

    def test_single_strategy(self):
        self.assertEqual(self.run_cli("evaluate", "--strategy", "none"), 0)
        self.assertEqual(len(pd.read_csv(self.test_dir / "metrics.csv")), 1)

    def test_no_policy(self):
        self.assertEqual(self.run_cli("evaluate"), 2)

    def test_missing_model(self):
        self.assertEqual(self.run_cli("evaluate", "--model", str(self.test_dir / "none.json")), 2)

    def test_unexpected_error(self):
        with patch("cli.handlers.evaluate_policy", side_effect=RuntimeError("boom")):
            self.assertEqual(self.run_cli("evaluate", "--strategy", "none"), 3)

    def test_numeric_error(self):
        with patch("cli.handlers.evaluate_policy", side_effect=NumericError("nan", "loss")):
            self.assertEqual(self.run_cli("evaluate", "--strategy", "none"), 3)


class TestConfigErrors(CliTestCase):
    """配置错误映射为退出码 2"""

    def test_missing_config_file(self):
        code = main(["evaluate", "--config", str(self.test_dir / "none.toml"), "--strategy", "none"])
        self.assertEqual(code, 2)

    def test_bad_override(self):
        self.assertEqual(self.run_cli("evaluate", "--strategy", "none", "--set", "dqn.gamma=2"), 2)

    def test_bad_roster(self):
        roster = self.test_dir / "pipes.csv"
        roster.write_text("id,age,material,length\n1,10,steel,100\n", encoding="utf-8")
        self.assertEqual(self.run_cli("evaluate", "--strategy", "none", "--roster", str(roster)), 2)


class TestPipeline(CliTestCase):
    """train-dqn -> collect -> train-cql -> evaluate"""

    def test_collect_expert_without_model(self):
        self.assertEqual(self.run_cli("collect", "--policy", "expert"), 2)

    def test_collect_random(self):
        self.assertEqual(self.run_cli("collect", "--policy", "random", "--episodes", "3"), 0)
        dataset = read_dataset(self.test_dir / "random.jsonl")
        self.assertEqual(len(dataset), 300)

    def test_train_cql_missing_dataset(self):
        self.assertEqual(self.run_cli("train-cql", "--dataset", str(self.test_dir / "none.jsonl")), 2)

    def test_full_pipeline(self):
        self.assertEqual(self.run_cli("train-dqn", "--episodes", "3"), 0)
        dqn_model = self.test_dir / "dqn.json"
        self.assertTrue(dqn_model.exists())
        self.assertEqual(load_sidecar(dqn_model)["trainer"], "dqn")
        self.assertEqual(len(pd.read_csv(self.test_dir / "dqn_log.csv")), 3)
        self.assertEqual(len(read_dataset(self.test_dir / "near_expert.jsonl")), 300)

        expert = self.test_dir / "expert.jsonl"
        self.assertEqual(self.run_cli("collect", "--policy", "expert", "--model", str(dqn_model),
                                      "--episodes", "3", "--out", str(expert)), 0)
        self.assertEqual(read_dataset(expert).header.source_policy.value, "expert")

        self.assertEqual(self.run_cli("train-cql", "--dataset", str(expert), "--epochs", "1"), 0)
        cql_model = self.test_dir / "cql.json"
        load_model(cql_model)
        sidecar = load_sidecar(cql_model)
        self.assertEqual(sidecar["dataset"]["source_policy"], "expert")
        self.assertEqual(pd.read_csv(self.test_dir / "cql_log.csv")["epoch"].tolist(), [1])

        code = self.run_cli("evaluate", "--model", str(dqn_model), "--model", str(cql_model), "--strategy", "greedy")
        self.assertEqual(code, 0)
        metrics = pd.read_csv(self.test_dir / "metrics.csv")
        self.assertEqual(metrics["policy"].tolist(), ["dqn", "cql", "greedy"])

    def test_train_cql_zero_epochs(self):
        self.assertEqual(self.run_cli("collect", "--policy", "random", "--episodes", "3"), 0)
        code = self.run_cli("train-cql", "--dataset", str(self.test_dir / "random.jsonl"), "--epochs", "0")
        self.assertEqual(code, 0)
        log = pd.read_csv(self.test_dir / "cql_log.csv")
        self.assertEqual(len(log), 0)
        self.assertIn("eval_return_mean", log.columns)

    def test_compare_sources(self):
        for name, seed in (("a", "1"), ("b", "2")):
            self.assertEqual(self.run_cli("collect", "--policy", "random", "--episodes", "3",
                                          "--seed", seed, "--out", str(self.test_dir / f"{name}.jsonl")), 0)
        code = self.run_cli("compare-sources", "--random", str(self.test_dir / "a.jsonl"),
                            "--expert", str(self.test_dir / "b.jsonl"), "--epochs", "2")
        self.assertEqual(code, 0)
        curves = pd.read_csv(self.test_dir / "sources.csv")
        self.assertEqual(curves["epoch"].tolist(), [1, 2])
        self.assertIn("random_eval_return_mean", curves.columns)
        self.assertIn("expert_eval_return_mean", curves.columns)
        self.assertTrue((self.test_dir / "cql_random_log.csv").exists())

    def test_same_seed_byte_identical(self):
        first, second = self.test_dir / "one", self.test_dir / "two"
        for out in (first, second):
            self.assertEqual(main(["train-dqn", *self.common, "--episodes", "2", "--seed", "4", "--out-dir", str(out)]), 0)
        for name in ("dqn.json", "dqn_log.csv", "near_expert.jsonl"):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes(), name)

    def test_compare_sources_without_inputs(self):
        self.assertEqual(self.run_cli("compare-sources"), 2)


class TestBuildConfig(unittest.TestCase):
    """build_config / dispatch 测试"""

    def test_named_flags(self):
        args = MagicMock(
            command="train-dqn", config=None, overrides=[], seed=5, out_dir=None, roster=None,
            show_progress=False, episodes=12, epochs=None, alpha=None, episodes_per_pipe=None,
        )
        cfg = build_config(args)
        self.assertEqual(cfg.dqn.episodes, 12)
        self.assertEqual(cfg.dqn.seed, 5)
        self.assertFalse(cfg.show_progress)

    def test_collect_episodes_not_mapped(self):
        args = MagicMock(
            command="collect", config=None, overrides=[], seed=None, out_dir=None, roster=None,
            show_progress=None, episodes=12, epochs=None, alpha=None, episodes_per_pipe=None,
        )
        self.assertEqual(build_config(args).dqn.episodes, 1000)

    def test_unknown_command(self):
        with self.assertRaises(UsageError):
            dispatch(MagicMock(command="no-such-command"), MagicMock())

    def test_print_summary(self):
        with patch("builtins.print") as mock_print:
            print_summary("统计", {"a": 1})
        printed = " ".join(str(c.args[0]) for c in mock_print.call_args_list)
        self.assertIn("a: 1", printed)


if __name__ == "__main__":
    unittest.main()

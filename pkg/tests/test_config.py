# config module tests
import os
import shutil
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from config import (
    CONFIG_DIR,
    DATA_DIR,
    CqlConfig,
    DqnConfig,
    EnvConfig,
    RunConfig,
    create_run_config,
    describe_config_keys,
    load_config_file,
    load_config_from_env,
    parse_override,
)
from core.errors import ConfigError

CLEAN_ENV = {"REHAB_LOG_LEVEL": "", "REHAB_OUT_DIR": "", "REHAB_SEED": ""}


class TestDefaults(unittest.TestCase):
    """内置默认值"""

    def test_section_defaults(self):
        cfg = RunConfig()
        self.assertEqual(cfg.env.horizon, 100)
        self.assertEqual(cfg.env.sudden_failure_prob, 0.05)
        self.assertEqual(cfg.dqn.gamma, 0.99)
        self.assertEqual(cfg.dqn.learning_rate, 1e-4)
        self.assertEqual(cfg.dqn.episodes, 1000)
        self.assertEqual(cfg.cql.alpha, 1.0)
        self.assertEqual(cfg.cql.dropout_rate, 0.1)
        self.assertEqual(cfg.cql.epochs, 200)
        self.assertEqual(cfg.baseline.corrective_threshold, 0.95)
        self.assertEqual(cfg.baseline.greedy_threshold, 0.80)
        self.assertEqual(cfg.evaluation.episodes_per_pipe, 30)
        self.assertEqual(cfg.env.roster_path, DATA_DIR / "pipes.csv")

    def test_total_steps(self):
        self.assertEqual(DqnConfig(episodes=7).total_steps, 700)

    def test_invalid_values(self):
        with self.assertRaises(ValueError):
            DqnConfig(epsilon_start=0.1, epsilon_final=0.5)
        with self.assertRaises(ValueError):
            EnvConfig(maintain_min_years=10, maintain_max_years=5)
        with self.assertRaises(ValueError):
            CqlConfig(hidden_dims=[0])
        with self.assertRaises(ValueError):
            CqlConfig(alpha=-1.0)

    def test_unknown_key_rejected(self):
        with self.assertRaises(ValueError):
            DqnConfig(gama=0.9)


class TestParseOverride(unittest.TestCase):
    """parse_override 测试"""

    def test_number(self):
        self.assertEqual(parse_override("dqn.gamma=0.9"), (["dqn", "gamma"], 0.9))

    def test_list(self):
        self.assertEqual(parse_override("cql.hidden_dims=[32, 32]"), (["cql", "hidden_dims"], [32, 32]))

    def test_bool_and_string(self):
        self.assertEqual(parse_override("show_progress=false"), (["show_progress"], False))
        self.assertEqual(parse_override("baseline.schedule_anchor=age"), (["baseline", "schedule_anchor"], "age"))

    def test_missing_equals(self):
        with self.assertRaises(ConfigError):
            parse_override("dqn.gamma")

    def test_empty_key(self):
        with self.assertRaises(ConfigError):
            parse_override("=1")


@patch.dict(os.environ, CLEAN_ENV)
class TestCreateRunConfig(unittest.TestCase):
    """create_run_config 测试"""

    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def _toml(self, text: str) -> Path:
        path = self.test_dir / "run.toml"
        path.write_text(text, encoding="utf-8")
        return path

    def test_toml_merge(self):
        path = self._toml("[dqn]\nepisodes = 5\n\n[cql]\nalpha = 2.5\n")
        cfg = create_run_config(config_file=path)
        self.assertEqual(cfg.dqn.episodes, 5)
        self.assertEqual(cfg.cql.alpha, 2.5)
        self.assertEqual(cfg.dqn.gamma, 0.99)

    def test_precedence(self):
        """TOML < --set < 具名参数"""
        path = self._toml("[dqn]\nepisodes = 5\n")
        cfg = create_run_config(config_file=path, overrides=["dqn.episodes=6"])
        self.assertEqual(cfg.dqn.episodes, 6)
        cfg = create_run_config(config_file=path, overrides=["dqn.episodes=6"], values={"dqn.episodes": 7})
        self.assertEqual(cfg.dqn.episodes, 7)

    def test_unknown_key(self):
        path = self._toml("[dqn]\nepisodez = 5\n")
        with self.assertRaises(ConfigError):
            create_run_config(config_file=path)
        with self.assertRaises(ConfigError):
            create_run_config(overrides=["nosuch.key=1"])

    def test_bad_toml(self):
        with self.assertRaises(ConfigError):
            create_run_config(config_file=self._toml("[dqn\n"))

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            load_config_file(self.test_dir / "none.toml")

    def test_seed_propagates(self):
        cfg = create_run_config(values={"seed": 11})
        self.assertEqual((cfg.dqn.seed, cfg.cql.seed, cfg.evaluation.seed), (11, 11, 11))

    def test_section_seed_kept_without_global(self):
        cfg = create_run_config(overrides=["dqn.seed=4"])
        self.assertEqual(cfg.dqn.seed, 4)
        self.assertEqual(cfg.cql.seed, 0)

    def test_horizon_mismatch(self):
        with self.assertRaises(ConfigError):
            create_run_config(overrides=["env.horizon=50"])
        cfg = create_run_config(overrides=["env.horizon=50", "dqn.steps_per_episode=50"])
        self.assertEqual(cfg.env.horizon, 50)

    def test_override_under_scalar(self):
        with self.assertRaises(ConfigError):
            create_run_config(overrides=["seed=1", "seed.x=2"])

    def test_bundled_configs_load(self):
        for name in ("paper.toml", "smoke.toml"):
            cfg = create_run_config(config_file=CONFIG_DIR / name)
            self.assertIsInstance(cfg, RunConfig)
        self.assertFalse(create_run_config(config_file=CONFIG_DIR / "smoke.toml").show_progress)

    def test_out_dir_value(self):
        cfg = create_run_config(values={"out_dir": str(self.test_dir / "runs")})
        self.assertEqual(cfg.out_dir, self.test_dir / "runs")
        cfg.ensure_directories()
        self.assertTrue((self.test_dir / "runs").is_dir())


class TestEnvironmentLayer(unittest.TestCase):
    """环境变量层"""

    def test_env_seed_and_level(self):
        with patch.dict(os.environ, {"REHAB_SEED": "9", "REHAB_LOG_LEVEL": "DEBUG", "REHAB_OUT_DIR": ""}):
            cfg = load_config_from_env()
        self.assertEqual(cfg.seed, 9)
        self.assertEqual(cfg.dqn.seed, 9)
        self.assertEqual(cfg.log.log_level, "DEBUG")

    def test_invalid_env_seed_ignored(self):
        with patch.dict(os.environ, {"REHAB_SEED": "abc", "REHAB_LOG_LEVEL": "", "REHAB_OUT_DIR": ""}):
            cfg = load_config_from_env()
        self.assertIsNone(cfg.seed)

    def test_toml_beats_env(self):
        test_dir = Path(tempfile.mkdtemp())
        try:
            path = test_dir / "a.toml"
            path.write_text("seed = 2\n", encoding="utf-8")
            with patch.dict(os.environ, {"REHAB_SEED": "9", "REHAB_LOG_LEVEL": "", "REHAB_OUT_DIR": ""}):
                cfg = create_run_config(config_file=path)
            self.assertEqual(cfg.seed, 2)
        finally:
            shutil.rmtree(test_dir, ignore_errors=True)


class TestDescribeConfigKeys(unittest.TestCase):
    """describe_config_keys 测试"""

    def test_lists_nested_keys(self):
        lines = describe_config_keys()
        keys = [line.split(" = ")[0] for line in lines]
        for key in ("seed", "env.horizon", "dqn.gamma", "cql.alpha", "baseline.schedule_anchor",
                    "evaluation.episodes_per_pipe", "log.log_level"):
            self.assertIn(key, keys)
        self.assertIn("dqn.gamma = 0.99", "\n".join(lines))


if __name__ == "__main__":
    unittest.main()

"""
基线策略单元测试
"""
import unittest
from types import SimpleNamespace

import numpy as np

from config import DATA_DIR, BaselineConfig, EnvConfig
from core.environment import Action, PipeEnv
from core.errors import UsageError
from core.rng import make_rng
from core.roster import find_spec, load_pipes
from agents.baselines import BaselineKind, BaselinePolicy, baseline_action

NO_SUDDEN = EnvConfig(sudden_failure_prob=0.0)


def obs(pf: float = 0.0, t: int = 0, age: int = 0):
    """只带基线所需字段的观测"""
    return SimpleNamespace(pf=pf, t=t, age=age)


def run_episode(policy: BaselinePolicy, pipe_id: int = 1, seed: int = 0):
    roster = load_pipes(DATA_DIR / "pipes.csv")
    env = PipeEnv(NO_SUDDEN, rng=make_rng(seed))
    state = env.reset(find_spec(roster, pipe_id))
    actions, pfs = [], []
    rng = make_rng(seed, "act")
    while not env.done:
        action = policy.act(state, rng)
        pfs.append(state.pf)
        actions.append(action)
        state = env.step(action).next_state
    return actions, pfs


class TestBaselineAction(unittest.TestCase):
    """baseline_action 测试"""

    def test_corrective(self):
        self.assertEqual(baseline_action(BaselineKind.CORRECTIVE, obs(pf=0.96)), Action.REPLACE)
        self.assertEqual(baseline_action(BaselineKind.CORRECTIVE, obs(pf=0.95)), Action.REPLACE)
        self.assertEqual(baseline_action(BaselineKind.CORRECTIVE, obs(pf=0.94)), Action.DO_NOTHING)

    def test_greedy(self):
        self.assertEqual(baseline_action(BaselineKind.GREEDY, obs(pf=0.85)), Action.MAINTAIN)
        self.assertEqual(baseline_action(BaselineKind.GREEDY, obs(pf=0.80)), Action.MAINTAIN)
        self.assertEqual(baseline_action(BaselineKind.GREEDY, obs(pf=0.79)), Action.DO_NOTHING)

    def test_greedy_never_replaces(self):
        for pf in np.linspace(0.0, 1.0, 101):
            self.assertNotEqual(baseline_action(BaselineKind.GREEDY, obs(pf=float(pf))), Action.REPLACE)

    def test_off_schedule_year(self):
        self.assertEqual(baseline_action(BaselineKind.MAINTAIN_5, obs(t=7)), Action.DO_NOTHING)

    def test_schedule_years(self):
        # 第 t+1 年为 5 的倍数时维护
        self.assertEqual(baseline_action(BaselineKind.MAINTAIN_5, obs(t=4)), Action.MAINTAIN)
        self.assertEqual(baseline_action(BaselineKind.MAINTAIN_5, obs(t=0)), Action.DO_NOTHING)
        self.assertEqual(baseline_action(BaselineKind.MAINTAIN_10, obs(t=4)), Action.DO_NOTHING)
        self.assertEqual(baseline_action(BaselineKind.MAINTAIN_10, obs(t=99)), Action.MAINTAIN)

    def test_age_anchor(self):
        config = BaselineConfig(schedule_anchor="age")
        self.assertEqual(baseline_action(BaselineKind.MAINTAIN_5, obs(t=3, age=10), config), Action.MAINTAIN)
        self.assertEqual(baseline_action(BaselineKind.MAINTAIN_5, obs(t=4, age=7), config), Action.DO_NOTHING)
        self.assertEqual(baseline_action(BaselineKind.MAINTAIN_5, obs(age=0), config), Action.DO_NOTHING)

    def test_custom_thresholds(self):
        config = BaselineConfig(corrective_threshold=0.5)
        self.assertEqual(baseline_action(BaselineKind.CORRECTIVE, obs(pf=0.6), config), Action.REPLACE)

    def test_none(self):
        for pf in (0.0, 0.5, 1.0):
            self.assertEqual(baseline_action(BaselineKind.NONE, obs(pf=pf, t=5)), Action.DO_NOTHING)

    def test_random_requires_rng(self):
        with self.assertRaises(UsageError):
            baseline_action(BaselineKind.RANDOM, obs())

    def test_random_uniform(self):
        rng = make_rng(0)
        n = 30_000
        counts = np.bincount([int(baseline_action(BaselineKind.RANDOM, obs(), rng=rng)) for _ in range(n)], minlength=3)
        for c in counts:
            self.assertAlmostEqual(c / n, 1 / 3, delta=0.02)

    def test_stateless(self):
        state = obs(pf=0.9, t=9, age=40)
        for kind in (BaselineKind.MAINTAIN_5, BaselineKind.MAINTAIN_10, BaselineKind.CORRECTIVE, BaselineKind.GREEDY):
            first = baseline_action(kind, state)
            self.assertTrue(all(baseline_action(kind, state) == first for _ in range(5)))

    def test_kind_from_string(self):
        self.assertEqual(baseline_action("corrective", obs(pf=0.99)), Action.REPLACE)
        self.assertEqual(BaselineKind("maintain-10").period, 10)
        self.assertIsNone(BaselineKind.GREEDY.period)


class TestBaselineEpisodes(unittest.TestCase):
    """整回合行为"""

    def test_maintain_5_count(self):
        actions, _ = run_episode(BaselinePolicy(BaselineKind.MAINTAIN_5))
        self.assertEqual(len(actions), 100)
        self.assertEqual(actions.count(Action.MAINTAIN), 20)
        self.assertEqual(actions.count(Action.REPLACE), 0)

    def test_maintain_10_count(self):
        actions, _ = run_episode(BaselinePolicy(BaselineKind.MAINTAIN_10))
        self.assertEqual(actions.count(Action.MAINTAIN), 10)

    def test_none_pf_nondecreasing(self):
        for pipe_id in (3, 13, 16):
            _, pfs = run_episode(BaselinePolicy(BaselineKind.NONE), pipe_id=pipe_id)
            self.assertTrue(all(b >= a for a, b in zip(pfs, pfs[1:])))

    def test_policy_object(self):
        policy = BaselinePolicy(BaselineKind.GREEDY)
        self.assertEqual(policy.name, "greedy")
        self.assertEqual(policy.describe()["anchor"], "calendar")
        self.assertIn("greedy", repr(policy))


if __name__ == "__main__":
    unittest.main()

"""
gymnasium 适配器

把 PipeEnv 包装成标准 gymnasium.Env，便于外部 Gym 工具驱动模拟器。
观测为 encode_state 的 7 维向量，动作为 Discrete(3)。
"""
from typing import Any, Dict, List, Optional, Tuple

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from config import EnvConfig
from core.environment import N_ACTIONS, STATE_DIM, Action, PipeEnv, PipeSpec, encode_state
from core.errors import UsageError
from core.rng import make_rng
from core.roster import find_spec


class PipeGymEnv(gym.Env):
    """
    单管道养护 Gym 环境

    每次 reset 从清单中均匀抽取一根管道（options={"pipe_id": n} 可指定）。
    回合在第 horizon 步以 terminated=True 结束，truncated 恒为 False。
    """

    metadata = {"render_modes": ["ansi"]}

    def __init__(self, roster: List[PipeSpec], config: Optional[EnvConfig] = None, render_mode: Optional[str] = None):
        super().__init__()
        if not roster:
            raise UsageError("管道清单为空")
        self.roster = list(roster)
        self.env = PipeEnv(config or EnvConfig())
        self.render_mode = render_mode
        self.observation_space = spaces.Box(low=0.0, high=np.inf, shape=(STATE_DIM,), dtype=np.float64)
        self.action_space = spaces.Discrete(N_ACTIONS)

    def reset(self, *, seed: Optional[int] = None, options: Optional[Dict[str, Any]] = None) -> Tuple[np.ndarray, Dict[str, Any]]:
        super().reset(seed=seed)
        if seed is not None:
            self.env.rng = make_rng(seed, "gym")
        options = options or {}
        if "pipe_id" in options:
            spec = find_spec(self.roster, int(options["pipe_id"]))
        else:
            spec = self.env.sample_spec(self.roster)
        state = self.env.reset(spec)
        return encode_state(state), {"pipe_id": spec.id, "pf": state.pf}

    def step(self, action) -> Tuple[np.ndarray, float, bool, bool, Dict[str, Any]]:
        outcome = self.env.step(Action(int(action)))
        info = {
            "mc": outcome.mc,
            "pf_penalty": outcome.pf_penalty,
            "sudden_failure": outcome.sudden_failure,
            "executed_action": int(outcome.executed_action),
        }
        return encode_state(outcome.next_state), outcome.reward, outcome.done, False, info

    def render(self):
        if self.render_mode == "ansi" and self.env.state is not None:
            s = self.env.state
            return f"t={s.t} pipe={self.env.spec.id} age={s.age} pf={s.pf:.3f}"
        return None

import numpy as np
import pytest

from armstack.core import (
    Action,
    Environment,
    Observation,
    StepResult,
    Wrapper,
    WrapperChain,
    wrap,
)
from armstack.errors import ActionOutOfBounds, NotReset, SpaceMismatch
from armstack.spaces import ScalarBox, SpaceDescriptor, VectorBox


class StubEnv(Environment):
    """Scalar-channel base env that records every action it receives and
    echoes it back as the observation."""

    def __init__(self, low=-100.0, high=100.0):
        self._obs_space = SpaceDescriptor({"x": ScalarBox(-1e9, 1e9)})
        self._act_space = SpaceDescriptor({"a": ScalarBox(low, high)})
        self.received: list[float] = []
        self._step = 0
        self._was_reset = False

    @property
    def observation_space(self):
        return self._obs_space

    @property
    def action_space(self):
        return self._act_space

    def reset(self, seed):
        self._was_reset = True
        self._step = 0
        self.received.clear()
        return Observation({"x": 0.0}, 0)

    def step(self, action):
        if not self._was_reset:
            raise NotReset("stub")
        self.received.append(action["a"])
        self._step += 1
        return StepResult(Observation({"x": float(action["a"])}, self._step), 1.0, False, False, {})


class ScaleAction(Wrapper):
    def __init__(self, factor):
        super().__init__(f"scale({factor})")
        self.factor = factor

    def action(self, action):
        action["a"] = action["a"] * self.factor
        return action


class OffsetAction(Wrapper):
    def __init__(self, offset):
        super().__init__(f"offset({offset})")
        self.offset = offset

    def action(self, action):
        action["a"] = action["a"] + self.offset
        return action


class AddObsChannel(Wrapper):
    def __init__(self, name, value):
        super().__init__(f"add({name})")
        self.channel, self.value = name, value

    def transform_spaces(self, obs_space, action_space):
        return obs_space.with_channel(self.channel, ScalarBox(-1e9, 1e9)), action_space

    def observation(self, obs):
        obs.channels[self.channel] = self.value
        return obs


class RenameObsChannel(Wrapper):
    def __init__(self, old, new):
        super().__init__(f"rename({old}->{new})")
        self.old, self.new = old, new

    def transform_spaces(self, obs_space, action_space):
        if self.old not in obs_space:
            raise SpaceMismatch(self.old, "rename source missing")
        return obs_space.renamed(self.old, self.new), action_space

    def observation(self, obs):
        obs.channels[self.new] = obs.channels.pop(self.old)
        return obs


def test_wrap_identity_preserves_spaces_and_steps():
    env = StubEnv()
    wrapped = wrap(Wrapper(), env)
    assert wrapped.observation_space == env.observation_space
    assert wrapped.action_space == env.action_space
    wrapped.reset(0)
    out = wrapped.step({"a": 3.5})
    assert out.observation.channels == {"x": 3.5}
    assert out.reward == 1.0


def test_identity_transparency_bitwise():
    plain, wrapped_env = StubEnv(), StubEnv()
    wrapped = wrap(Wrapper(), wrap(Wrapper(), wrapped_env))
    plain.reset(7)
    wrapped.reset(7)
    rng = np.random.default_rng(0)
    for _ in range(50):
        a = float(rng.uniform(-5, 5))
        r0 = plain.step({"a": a})
        r1 = wrapped.step({"a": a})
        assert r0.observation.channels == r1.observation.channels
        assert r0.observation.step_index == r1.observation.step_index
        assert r0.reward == r1.reward
        assert (r0.terminated, r0.truncated) == (r1.terminated, r1.truncated)
        assert r0.info == r1.info


def test_action_chain_applies_g_outermost_first():
    # inner scale(x2), outer offset(+1): base must receive 2*(3+1) = 8
    env = StubEnv()
    chain = WrapperChain(env, [ScaleAction(2.0), OffsetAction(1.0)])
    chain.reset(0)
    chain.step({"a": 3.0})
    assert env.received == [8.0]


def test_observation_chain_applies_f_innermost_first():
    # inner adds channel "extra", outer renames it: rename must see it
    env = StubEnv()
    chain = WrapperChain(env, [AddObsChannel("extra", 42.0), RenameObsChannel("extra", "renamed")])
    obs = chain.reset(0)
    assert "renamed" in obs.channels and "extra" not in obs.channels
    out = chain.step({"a": 1.0})
    assert out.observation.channels["renamed"] == 42.0


def test_chain_associativity():
    def build_stepwise():
        env = StubEnv()
        return wrap(OffsetAction(1.0), wrap(ScaleAction(2.0), env)), env

    def build_chain():
        env = StubEnv()
        return WrapperChain(env, [ScaleAction(2.0), OffsetAction(1.0)]), env

    a_env, a_base = build_stepwise()
    b_env, b_base = build_chain()
    a_env.reset(3)
    b_env.reset(3)
    rng = np.random.default_rng(1)
    for _ in range(20):
        act = float(rng.uniform(-4, 4))
        ra = a_env.step({"a": act})
        rb = b_env.step({"a": act})
        assert ra.observation.channels == rb.observation.channels
        assert ra.reward == rb.reward
    assert a_base.received == b_base.received


def test_wrap_space_mismatch_names_channel():
    env = StubEnv()
    with pytest.raises(SpaceMismatch) as exc:
        wrap(RenameObsChannel("missing_channel", "y"), env)
    assert "missing_channel" in str(exc.value)


def test_step_before_reset_raises():
    env = wrap(Wrapper(), StubEnv())
    with pytest.raises(NotReset):
        env.step({"a": 0.0})


def test_out_of_bounds_action_clamped_and_flagged():
    env = StubEnv(low=-1.0, high=1.0)
    wrapped = wrap(Wrapper(), env)
    wrapped.reset(0)
    out = wrapped.step({"a": 5.0})
    assert env.received == [1.0]
    assert out.info.get("clamped") is True
    out2 = wrapped.step({"a": 0.5})
    assert "clamped" not in out2.info


def test_malformed_action_raises():
    env = wrap(Wrapper(), StubEnv())
    env.reset(0)
    with pytest.raises(ActionOutOfBounds):
        env.step({"wrong_channel": 1.0})
    with pytest.raises(ActionOutOfBounds):
        env.step({"a": float("nan")})


def test_reward_override_outermost_wins():
    class ConstReward(Wrapper):
        defines_reward = True

        def __init__(self, value):
            super().__init__(f"reward({value})")
            self.value = value

        def shape_reward(self, prev_obs, action, result):
            return self.value

    env = StubEnv()
    chain = WrapperChain(env, [ConstReward(5.0), ConstReward(9.0)])
    chain.reset(0)
    out = chain.step({"a": 0.0})
    assert out.reward == 9.0
    assert out.info["inner_reward"] == 5.0  # inner override still visible


def test_observation_channels_copied_not_aliased():
    class VecEnv(StubEnv):
        def __init__(self):
            super().__init__()
            self._obs_space = SpaceDescriptor({"v": VectorBox(3, -10, 10)})
            self.internal = np.zeros(3)

        def reset(self, seed):
            self._was_reset = True
            return Observation({"v": self.internal}, 0)

        def step(self, action):
            return StepResult(Observation({"v": self.internal}, 1), 0.0, False, False, {})

    class Mutator(Wrapper):
        def observation(self, obs):
            obs.channels["v"] += 1.0
            return obs

    env = VecEnv()
    wrapped = wrap(Mutator(), env)
    wrapped.reset(0)
    out = wrapped.step({"a": 0.0})
    np.testing.assert_array_equal(out.observation.channels["v"], [1, 1, 1])
    np.testing.assert_array_equal(env.internal, [0, 0, 0])  # base state untouched


def test_transition_hook_can_substitute_action():
    class Veto(Wrapper):
        has_transition_hook = True

        def transition(self, step_fn, action):
            if action["a"] > 0:
                return step_fn({"a": 0.0})
            return step_fn(action)

    env = StubEnv()
    gated = wrap(Veto(), env)
    gated.reset(0)
    gated.step({"a": 5.0})
    gated.step({"a": -2.0})
    assert env.received == [0.0, -2.0]


def test_space_soundness_under_fuzz():
    env = StubEnv(low=-2.0, high=2.0)
    chain = WrapperChain(env, [AddObsChannel("extra", 1.0), ScaleAction(0.5)])
    chain.reset(0)
    rng = np.random.default_rng(11)
    for _ in range(500):
        action = {"a": float(rng.uniform(-10, 10))}
        out = chain.step(action)
        chain.observation_space.validate(out.observation.channels, "fuzzed observation")

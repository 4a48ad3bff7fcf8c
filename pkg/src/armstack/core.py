"""Environment interface and the wrapper algebra.

An environment wrapper carries an observation map f (inner -> outer), an
action map g (outer -> inner, note the reversed direction), an optional
reward override, and an optional transition hook that may intercept the
inner step. Wrapping an environment yields a new environment whose spaces
are the wrapper's declared output spaces; chains apply g outermost-first
on the way in and f innermost-first on the way out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .errors import ActionOutOfBounds, NotReset, SpaceMismatch
from .spaces import SpaceDescriptor, copy_channels

Action = dict  # channel name -> value


@dataclass
class Observation:
    """Named channels plus the step index they were captured at; every
    channel in one observation carries the same index (alignment)."""

    channels: dict
    step_index: int = 0

    def copy(self) -> "Observation":
        return Observation(copy_channels(self.channels), self.step_index)

    def __getitem__(self, name: str):
        return self.channels[name]

    def __contains__(self, name: str) -> bool:
        return name in self.channels


@dataclass
class StepResult:
    observation: Observation
    reward: float
    terminated: bool
    truncated: bool
    info: dict = field(default_factory=dict)


class Environment:
    """Episodic environment with typed channel spaces."""

    @property
    def observation_space(self) -> SpaceDescriptor:
        raise NotImplementedError

    @property
    def action_space(self) -> SpaceDescriptor:
        raise NotImplementedError

    @property
    def unwrapped(self) -> "Environment":
        return self

    def reset(self, seed: int) -> Observation:
        raise NotImplementedError

    def step(self, action: Action) -> StepResult:
        raise NotImplementedError

    def close(self) -> None:
        pass


class Wrapper:
    """Identity wrapper; subclasses override the pieces they change.

    Space mutations are declared via transform_spaces, which receives the
    inner environment's spaces and returns the outer ones (raising
    SpaceMismatch when it cannot sit on that environment).
    """

    defines_reward = False
    has_transition_hook = False

    def __init__(self, name: str | None = None):
        self.name = name or type(self).__name__
        self.env: Environment | None = None  # inner env, set by wrap()

    def bind(self, env: Environment) -> None:
        self.env = env

    def transform_spaces(
        self, obs_space: SpaceDescriptor, action_space: SpaceDescriptor
    ) -> tuple[SpaceDescriptor, SpaceDescriptor]:
        return obs_space, action_space

    def reset_state(self, seed: int) -> None:
        """Clear any per-episode wrapper state."""

    def observation(self, obs: Observation) -> Observation:
        """f: inner observation -> outer observation."""
        return obs

    def action(self, action: Action) -> Action:
        """g: outer action -> inner action."""
        return action

    def post_reset(self, obs: Observation) -> Observation:
        """f applied to the initial observation; override to also latch
        episode-start state (initial heights, potentials, ...)."""
        return self.observation(obs)

    def transition(self, step_fn: Callable[[Action], StepResult], action: Action) -> StepResult:
        """Optional transition hook (active when has_transition_hook is
        True): may call step_fn zero or more times and/or substitute the
        action."""
        return step_fn(action)

    def shape_reward(self, prev_obs: Observation, action: Action, result: StepResult) -> float:
        """Reward override (active when defines_reward is True); receives
        the wrapper-level previous observation, action, and the step result
        carrying the inner reward."""
        return result.reward

    def finalize(self, result: StepResult) -> StepResult:
        """Last touch on the outgoing StepResult (termination latching,
        recording, ...)."""
        return result


class WrappedEnv(Environment):
    """One wrapper applied to one environment."""

    def __init__(self, wrapper: Wrapper, env: Environment):
        obs_space, act_space = wrapper.transform_spaces(env.observation_space, env.action_space)
        self._wrapper = wrapper
        self._env = env
        self._obs_space = obs_space
        self._act_space = act_space
        self._prev_obs: Observation | None = None
        wrapper.bind(env)

    @property
    def observation_space(self) -> SpaceDescriptor:
        return self._obs_space

    @property
    def action_space(self) -> SpaceDescriptor:
        return self._act_space

    @property
    def unwrapped(self) -> Environment:
        return self._env.unwrapped

    @property
    def inner(self) -> Environment:
        return self._env

    @property
    def wrapper(self) -> Wrapper:
        return self._wrapper

    def reset(self, seed: int) -> Observation:
        self._wrapper.reset_state(seed)
        obs = self._env.reset(seed).copy()
        obs = self._wrapper.post_reset(obs)
        self._obs_space.validate(obs.channels, "observation")
        self._prev_obs = obs
        return obs

    def step(self, action: Action) -> StepResult:
        if self._prev_obs is None:
            raise NotReset(f"step() before reset() (wrapper {self._wrapper.name})")
        action = _check_action(self._act_space, action)
        clamped, changed = self._act_space.clamp(action)

        inner_action = self._wrapper.action(copy_channels(clamped))
        if self._wrapper.has_transition_hook:
            result = self._wrapper.transition(self._env.step, inner_action)
        else:
            result = self._env.step(inner_action)

        obs = self._wrapper.observation(result.observation.copy())
        self._obs_space.validate(obs.channels, "observation")
        info = dict(result.info)
        if changed:
            info["clamped"] = True
        result = StepResult(obs, result.reward, result.terminated, result.truncated, info)

        if self._wrapper.defines_reward:
            info["inner_reward"] = result.reward
            result.reward = float(self._wrapper.shape_reward(self._prev_obs, clamped, result))
        result = self._wrapper.finalize(result)
        self._prev_obs = result.observation
        return result

    def close(self) -> None:
        self._env.close()


def wrap(wrapper: Wrapper, env: Environment) -> Environment:
    """Apply one wrapper to an environment; raises SpaceMismatch when the
    wrapper's declared input spaces do not match the environment's."""
    return WrappedEnv(wrapper, env)


def _check_action(space: SpaceDescriptor, action: Mapping) -> dict:
    """Structural conformance (names, shapes, dtypes, NaN); numeric range
    violations are left for the clamping step."""
    try:
        space.validate(action, "action", check_bounds=False)
    except SpaceMismatch as exc:
        raise ActionOutOfBounds(str(exc)) from exc
    return dict(action)


class WrapperChain(Environment):
    """Base environment plus an ordered wrapper list, innermost first.

    Equivalent to folding wrap() over the list; kept as a type so chains
    can carry their construction config and digest.
    """

    def __init__(self, base: Environment, wrappers: list[Wrapper]):
        self.base = base
        self.wrappers = list(wrappers)
        env: Environment = base
        for w in self.wrappers:
            env = wrap(w, env)
        self._env = env

    @property
    def observation_space(self) -> SpaceDescriptor:
        return self._env.observation_space

    @property
    def action_space(self) -> SpaceDescriptor:
        return self._env.action_space

    @property
    def unwrapped(self) -> Environment:
        return self.base

    def find_wrapper(self, cls: type) -> Wrapper | None:
        for w in self.wrappers:
            if isinstance(w, cls):
                return w
        return None

    def reset(self, seed: int) -> Observation:
        return self._env.reset(seed)

    def step(self, action: Action) -> StepResult:
        return self._env.step(action)

    def close(self) -> None:
        self._env.close()

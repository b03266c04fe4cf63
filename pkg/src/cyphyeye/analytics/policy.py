"""Learned quarantine policy over one zone pair.

One-step temporal-difference learning (tabular Q) over a discretized state:
bucketed anomaly level, bucketed high-risk rate, and ticks-since-closed
(exact, capped). Actions: keep the pair open or quarantine it.

Reward per transition, observed on the following step:

    r = -beta * anomaly + gamma * phi(s') - phi(s)
    phi(s) = -rho * (1 - exp(-ticksClosed(s) / tau))

The potential term pays exactly rho*(1 - exp(-ticksClosed/tau)) on the
transition that reopens after a closed period — an increasing reward for
re-opening, growing with time closed — while making quarantine/reopen cycles
value-neutral overall, so the bonus can never be farmed by toggling the rule.
Ties between equal action values break toward open, the
availability-preserving choice.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from cyphyeye.analytics.composite import AnomalyState

ACTION_OPEN = "open"
ACTION_QUARANTINE = "quarantine"
ACTIONS = (ACTION_OPEN, ACTION_QUARANTINE)


@dataclass(frozen=True)
class PolicyConfig:
    beta: float = 1.0            # anomaly cost weight
    rho: float = 0.5             # reopen bonus scale
    tau: float = 50.0            # bonus time constant, ticks
    gamma: float = 0.9           # discount
    learning_rate: float = 0.5
    eps_start: float = 0.2
    eps_end: float = 0.01
    eps_decay_steps: int = 300
    ticks_closed_cap: int = 60
    level_buckets: tuple = (0.25, 0.5, 0.75)
    risk_buckets: tuple = (0.25, 0.5, 0.75)

    def __post_init__(self):
        if not 0 <= self.eps_start < 1 or not 0 <= self.eps_end < 1:
            raise ValueError("exploration rates must be in [0, 1)")
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must be in [0, 1)")


def _bucket(x: float, edges: Sequence[float]) -> int:
    for i, edge in enumerate(edges):
        if x < edge:
            return i
    return len(edges)


@dataclass(frozen=True)
class QuarantineDecision:
    pair: tuple
    action: str
    state: tuple
    q_open: float
    q_quarantine: float
    epsilon: float
    explored: bool


@dataclass(frozen=True)
class TraceEntry:
    step: int
    state: tuple
    action: str
    anomaly: float  # observed on the step after the action
    reward: float


class QuarantinePolicy:
    """Sequential decision loop for one zone pair; learns online."""

    def __init__(self, pair: tuple, config: PolicyConfig = PolicyConfig(), seed: int = 0):
        self.pair = tuple(pair)
        self.config = config
        self.rng = random.Random(seed)
        self.q: dict[tuple, float] = {}
        self.trace: list[TraceEntry] = []
        self.ticks_closed = 0
        self.steps = 0
        self._pending: Optional[tuple] = None  # (state, action) awaiting reward

    # -- state ---------------------------------------------------------------

    def _phi(self, ticks_closed: int) -> float:
        if ticks_closed <= 0:
            return 0.0
        c = self.config
        return -c.rho * (1.0 - math.exp(-min(ticks_closed, c.ticks_closed_cap) / c.tau))

    def state_of(self, level: float, risk_rate: float) -> tuple:
        c = self.config
        return (_bucket(level, c.level_buckets), _bucket(risk_rate, c.risk_buckets),
                min(self.ticks_closed, c.ticks_closed_cap))

    def q_value(self, state: tuple, action: str) -> float:
        return self.q.get((state, action), 0.0)

    def greedy_action(self, state: tuple) -> str:
        q_open = self.q_value(state, ACTION_OPEN)
        q_quar = self.q_value(state, ACTION_QUARANTINE)
        return ACTION_OPEN if q_open >= q_quar else ACTION_QUARANTINE

    def visited_states(self) -> set:
        return {state for (state, _action) in self.q}

    def epsilon(self) -> float:
        c = self.config
        if c.eps_decay_steps <= 0:
            return c.eps_end
        frac = min(1.0, self.steps / c.eps_decay_steps)
        return c.eps_start + (c.eps_end - c.eps_start) * frac

    # -- learning loop --------------------------------------------------------

    def step(self, level: float, risk_rate: float, handle=None) -> QuarantineDecision:
        """Settle the previous transition's reward against the anomaly observed
        now, then choose and apply the next action epsilon-greedily."""
        c = self.config
        state = self.state_of(level, risk_rate)

        if self._pending is not None:
            prev_state, prev_action = self._pending
            reward = (-c.beta * level
                      + c.gamma * self._phi(state[2]) - self._phi(prev_state[2]))
            best_next = max(self.q_value(state, a) for a in ACTIONS)
            key = (prev_state, prev_action)
            old = self.q.get(key, 0.0)
            self.q[key] = old + c.learning_rate * (reward + c.gamma * best_next - old)
            self.trace.append(TraceEntry(step=self.steps - 1, state=prev_state,
                                         action=prev_action, anomaly=level, reward=reward))

        eps = self.epsilon()
        explored = self.rng.random() < eps
        if explored:
            action = ACTIONS[self.rng.randrange(2)]
        else:
            action = self.greedy_action(state)
        # Touch both action values so visited states always have entries.
        for a in ACTIONS:
            self.q.setdefault((state, a), 0.0)

        if action == ACTION_QUARANTINE:
            if handle is not None and self.ticks_closed == 0:
                handle.quarantine(self.pair)
            self.ticks_closed += 1
        else:
            if handle is not None and self.ticks_closed > 0:
                handle.release(self.pair)
            self.ticks_closed = 0

        self._pending = (state, action)
        self.steps += 1
        return QuarantineDecision(pair=self.pair, action=action, state=state,
                                  q_open=self.q_value(state, ACTION_OPEN),
                                  q_quarantine=self.q_value(state, ACTION_QUARANTINE),
                                  epsilon=eps, explored=explored)

    def total_reward(self) -> float:
        return sum(e.reward for e in self.trace)


def policy_step(policy: QuarantinePolicy, state: Union[AnomalyState, tuple],
                handle=None) -> QuarantineDecision:
    """Spec-shaped entry point: accepts an AnomalyState or (level, risk) pair."""
    if isinstance(state, AnomalyState):
        level, risk = state.level, state.risk_rate
    else:
        level, risk = state
    return policy.step(level, risk, handle)


def replay_total(trace: Sequence[TraceEntry], config: PolicyConfig) -> float:
    """Recompute the episode's total reward from (state, action, anomaly) only.

    The potential depends only on the ticks-closed state component, and the
    next ticks-closed value is determined by the action, so rewards restate
    exactly — this is the bookkeeping conservation check.
    """
    def phi(tc: int) -> float:
        if tc <= 0:
            return 0.0
        return -config.rho * (1.0 - math.exp(-min(tc, config.ticks_closed_cap) / config.tau))

    total = 0.0
    for e in trace:
        tc = e.state[2]
        tc_next = min(tc + 1, config.ticks_closed_cap) if e.action == ACTION_QUARANTINE else 0
        total += -config.beta * e.anomaly + config.gamma * phi(tc_next) - phi(tc)
    return total


class RuleTablePolicyHandle:
    """Applies policy actions to a shared topology holder as policy-origin
    rules: quarantine denies both directions of the pair, release clears the
    policy origin (restoring the baseline posture)."""

    def __init__(self, holder, on_change=None):
        self._holder = holder  # object with .topology attribute
        self._on_change = on_change
        self._counter = 0

    def quarantine(self, pair: tuple) -> None:
        from cyphyeye.topology import FirewallRule, RuleOrigin, set_rule
        a, b = pair
        topo = self._holder.topology
        for src, dst in ((a, b), (b, a)):
            self._counter += 1
            topo = set_rule(topo, FirewallRule(
                id=f"policy-{self._counter}", src_zone=src, dst_zone=dst,
                allow=False, origin=RuleOrigin.POLICY))
        self._holder.topology = topo
        if self._on_change:
            self._on_change("quarantine", pair)

    def release(self, pair: tuple) -> None:
        from cyphyeye.topology import RuleOrigin, clear_rules
        self._holder.topology = clear_rules(self._holder.topology, RuleOrigin.POLICY)
        if self._on_change:
            self._on_change("release", pair)

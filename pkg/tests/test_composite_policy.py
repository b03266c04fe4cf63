"""Composite anomaly tracking (level / velocity / forecast / stage) and the
learned quarantine policy (tabular TD with a reopen-shaping potential)."""

import pytest
from hypothesis import given, strategies as st

from cyphyeye.analytics.composite import (
    STAGES,
    AnomalyState,
    CompositeConfig,
    CompositeTracker,
    composite_anomaly,
    normalized_behavioral,
    stage_for,
)
from cyphyeye.analytics.policy import (
    ACTION_OPEN,
    ACTION_QUARANTINE,
    PolicyConfig,
    QuarantinePolicy,
    RuleTablePolicyHandle,
    policy_step,
    replay_total,
)

CALM = 0.0  # behavioral reading far below the normalization floor


# ---------------------------------------------------------------------------
# Composite: level / velocity / forecast


def test_constant_input_is_a_fixed_point():
    s = composite_anomaly([(CALM, 0.6)] * 20)
    assert s.level == 0.6
    assert s.velocity == 0.0
    assert s.forecast == 0.6
    assert s.stage == "act"


def test_ewma_approach_to_step_input():
    cfg = CompositeConfig(alpha=0.2)
    s = composite_anomaly([(CALM, 0.0)] + [(CALM, 1.0)] * 5, cfg)
    assert s.level == pytest.approx(1 - 0.8**5, rel=1e-12)


def test_velocity_is_level_slope_and_forecast_extrapolates():
    cfg = CompositeConfig(alpha=0.2, horizon=5)
    s = composite_anomaly([(CALM, 0.0), (CALM, 0.5)], cfg)
    assert s.level == pytest.approx(0.1)          # 0.2 * 0.5
    assert s.velocity == pytest.approx(0.1)        # (0.1 - 0.0) / 1 tick
    assert s.forecast == pytest.approx(0.6)        # level + velocity * horizon


def test_forecast_clamps_to_unit_interval():
    rising = composite_anomaly([(CALM, 0.0)] + [(CALM, 1.0)] * 10,
                               CompositeConfig(horizon=500))
    assert rising.forecast == 1.0
    falling = composite_anomaly([(CALM, 1.0)] * 5 + [(CALM, 0.0)] * 3,
                                CompositeConfig(horizon=500))
    assert falling.forecast == 0.0


def test_single_sample_has_zero_velocity():
    s = composite_anomaly([(CALM, 0.4)])
    assert s.velocity == 0.0 and s.forecast == s.level == 0.4


def test_empty_history_rejected():
    with pytest.raises(ValueError):
        composite_anomaly([])


# ---------------------------------------------------------------------------
# Composite: stages


def test_stage_thresholds_are_inclusive():
    cfg = CompositeConfig()
    assert stage_for(0.0, cfg) == "normal"
    assert stage_for(0.2499, cfg) == "normal"
    assert stage_for(0.25, cfg) == "watch"
    assert stage_for(0.4999, cfg) == "act" or stage_for(0.4999, cfg) == "watch"
    assert stage_for(0.5, cfg) == "act"
    assert stage_for(0.7499, cfg) == "act"
    assert stage_for(0.75, cfg) == "emergency"
    assert stage_for(1.0, cfg) == "emergency"


@given(st.floats(min_value=0, max_value=1), st.floats(min_value=0, max_value=1))
def test_stage_monotone_in_level(a, b):
    cfg = CompositeConfig()
    lo, hi = min(a, b), max(a, b)
    assert STAGES.index(stage_for(lo, cfg)) <= STAGES.index(stage_for(hi, cfg))


# ---------------------------------------------------------------------------
# Composite: behavioral normalization


def test_behavioral_rescaled_by_floor_and_span():
    cfg = CompositeConfig(behav_floor=1.0, behav_span=2.0)
    assert normalized_behavioral(0.2, cfg) == 0.0   # clamped below floor
    assert normalized_behavioral(1.0, cfg) == 0.0
    assert normalized_behavioral(2.0, cfg) == 0.5
    assert normalized_behavioral(3.0, cfg) == 1.0
    assert normalized_behavioral(9.0, cfg) == 1.0   # clamped above


def test_level_takes_the_worse_of_behavior_and_risk():
    assert composite_anomaly([(3.0, 0.0)]).level == 1.0
    assert composite_anomaly([(2.0, 0.9)]).level == 0.9   # risk dominates 0.5
    assert composite_anomaly([(2.0, 0.1)]).level == 0.5   # behavior dominates
    # The raw behavioral reading is carried through unnormalized.
    assert composite_anomaly([(2.0, 0.1)]).behavioral == 2.0


# ---------------------------------------------------------------------------
# Composite: streaming tracker equivalence


def test_tracker_matches_batch_fold_at_every_step():
    import random
    rng = random.Random(9)
    samples = [(rng.uniform(0, 4), rng.uniform(0, 1)) for _ in range(40)]
    tracker = CompositeTracker("sys-1")
    for i, (b, r) in enumerate(samples):
        streamed = tracker.push(b, r)
        batch = composite_anomaly(samples[: i + 1], system_id="sys-1")
        assert streamed == batch


def test_state_serializes_with_stable_keys():
    d = composite_anomaly([(CALM, 0.3)], system_id="fb-bus").to_dict()
    assert set(d) == {"system", "level", "velocity", "forecast", "stage",
                      "behavioral", "risk_rate"}
    assert d["system"] == "fb-bus" and d["stage"] == "watch"


# ---------------------------------------------------------------------------
# Policy: discretization and defaults


def test_state_discretization():
    p = QuarantinePolicy(("a", "b"))
    assert p.state_of(0.0, 0.0) == (0, 0, 0)
    assert p.state_of(0.25, 0.75) == (1, 3, 0)
    assert p.state_of(0.6, 0.3) == (2, 1, 0)
    assert p.state_of(1.0, 1.0) == (3, 3, 0)
    p.ticks_closed = 100
    assert p.state_of(0.0, 0.0) == (0, 0, 60)  # capped exact component


def test_epsilon_decays_linearly_to_floor():
    p = QuarantinePolicy(("a", "b"))
    assert p.epsilon() == pytest.approx(0.2)
    p.steps = 150
    assert p.epsilon() == pytest.approx(0.105)
    p.steps = 300
    assert p.epsilon() == pytest.approx(0.01)
    p.steps = 5000
    assert p.epsilon() == pytest.approx(0.01)


def test_config_validation():
    with pytest.raises(ValueError):
        PolicyConfig(eps_start=1.0)
    with pytest.raises(ValueError):
        PolicyConfig(gamma=1.0)


# ---------------------------------------------------------------------------
# Policy: learning behavior


def shield_run(config=PolicyConfig(), seed=7, steps=500):
    """Environment where quarantine works: anomaly 1.0 only while open."""
    p = QuarantinePolicy(("z1", "z2"), config, seed=seed)
    level = 1.0
    for _ in range(steps):
        decision = p.step(level, level)
        level = 0.0 if decision.action == ACTION_QUARANTINE else 1.0
    return p


def test_zero_anomaly_converges_to_open_everywhere():
    p = QuarantinePolicy(("z1", "z2"), seed=3)
    for _ in range(500):
        p.step(0.0, 0.0)
    visited = p.visited_states()
    assert visited
    assert all(p.greedy_action(s) == ACTION_OPEN for s in visited)


@pytest.mark.parametrize("seed", range(4))
def test_sustained_anomaly_learns_to_quarantine(seed):
    p = shield_run(seed=seed)
    hot_open = (3, 3, 0)  # max anomaly buckets, pair currently open
    assert hot_open in p.visited_states()
    assert p.greedy_action(hot_open) == ACTION_QUARANTINE


def test_argmax_invariant_under_joint_cost_scaling():
    base = shield_run(PolicyConfig(), seed=7)
    doubled = shield_run(PolicyConfig(beta=2.0, rho=1.0), seed=7)
    tripled = shield_run(PolicyConfig(beta=3.0, rho=1.5), seed=7)
    assert doubled.visited_states() == base.visited_states()
    # Doubling is exact in floating point: every value scales precisely.
    assert all(doubled.q[k] == 2.0 * v for k, v in base.q.items())
    for scaled in (doubled, tripled):
        shared = base.visited_states() & scaled.visited_states()
        assert shared
        assert all(scaled.greedy_action(s) == base.greedy_action(s)
                   for s in shared)


def test_ties_break_toward_open():
    p = QuarantinePolicy(("z1", "z2"))
    assert p.greedy_action((0, 0, 0)) == ACTION_OPEN  # both unseen: 0 vs 0
    p.q[((2, 2, 0), ACTION_OPEN)] = -1.23
    p.q[((2, 2, 0), ACTION_QUARANTINE)] = -1.23
    assert p.greedy_action((2, 2, 0)) == ACTION_OPEN


def test_visited_states_always_carry_both_action_values():
    p = shield_run(steps=120)
    for s in p.visited_states():
        assert (s, ACTION_OPEN) in p.q and (s, ACTION_QUARANTINE) in p.q


# ---------------------------------------------------------------------------
# Policy: trace bookkeeping


def test_trace_settles_one_step_behind():
    p = QuarantinePolicy(("z1", "z2"), seed=1)
    p.step(0.1, 0.0)
    assert p.trace == []          # nothing settled yet
    p.step(0.2, 0.0)
    p.step(0.3, 0.0)
    assert [e.step for e in p.trace] == [0, 1]
    assert [e.anomaly for e in p.trace] == [0.2, 0.3]


def test_replayed_totals_match_live_accounting():
    p = shield_run(steps=300)
    assert replay_total(p.trace, p.config) == p.total_reward()


def test_replay_is_config_sensitive():
    p = shield_run(steps=300)
    rescaled = replay_total(p.trace, PolicyConfig(beta=2.0, rho=1.0))
    assert rescaled == 2.0 * p.total_reward()


# ---------------------------------------------------------------------------
# Policy: rule-table handle


class Holder:
    def __init__(self, topology):
        self.topology = topology


def test_handle_quarantine_installs_paired_denies(xyz_topology):
    from cyphyeye.topology import RuleOrigin, reachable

    holder = Holder(xyz_topology)
    changes = []
    handle = RuleTablePolicyHandle(holder, on_change=lambda *a: changes.append(a))
    assert reachable(holder.topology, "eng-ws-1", "vp-1")

    handle.quarantine(("corporate", "dmz"))
    policy_rules = [r for r in holder.topology.rules
                    if r.origin == RuleOrigin.POLICY]
    assert len(policy_rules) == 2
    assert all(not r.allow for r in policy_rules)
    assert {(r.src_zone, r.dst_zone) for r in policy_rules} == {
        ("corporate", "dmz"), ("dmz", "corporate")}
    assert not reachable(holder.topology, "eng-ws-1", "vp-1")
    assert changes == [("quarantine", ("corporate", "dmz"))]

    handle.release(("corporate", "dmz"))
    assert not any(r.origin == RuleOrigin.POLICY for r in holder.topology.rules)
    assert reachable(holder.topology, "eng-ws-1", "vp-1")
    assert changes[-1] == ("release", ("corporate", "dmz"))


def test_policy_drives_handle_only_on_transitions():
    calls = []

    class CountingHandle:
        def quarantine(self, pair):
            calls.append("quarantine")

        def release(self, pair):
            calls.append("release")

    cfg = PolicyConfig(eps_start=0.0, eps_end=0.0)  # pure greedy
    p = QuarantinePolicy(("a", "b"), cfg, seed=0)
    p.q[((3, 3, 0), ACTION_QUARANTINE)] = 10.0  # force closing once
    handle = CountingHandle()
    p.step(1.0, 1.0, handle)          # greedy quarantine: one install
    assert calls == ["quarantine"] and p.ticks_closed == 1
    p.step(1.0, 1.0, handle)          # state (3,3,1) unseen: tie, reopens
    assert calls == ["quarantine", "release"] and p.ticks_closed == 0
    p.step(0.0, 0.0, handle)          # already open: no release call
    assert calls == ["quarantine", "release"]


def test_policy_step_accepts_composite_state():
    a = QuarantinePolicy(("z1", "z2"), seed=5)
    b = QuarantinePolicy(("z1", "z2"), seed=5)
    state = AnomalyState(system_id="s", level=0.3, velocity=0.0, forecast=0.3,
                         stage="watch", behavioral=0.0, risk_rate=0.1)
    assert policy_step(a, state) == b.step(0.3, 0.1)
    assert policy_step(a, (0.8, 0.2)) == b.step(0.8, 0.2)

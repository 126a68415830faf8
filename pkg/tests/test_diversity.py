import math

import numpy as np
import pytest

from arena.world import OBS_SIZE, WhiteAction
from learner.policy import init_policy_params
from learner.replay import Transition
from learner.training import train_baseline
from stores.trajectory_store import DemonstrationEpisode
from utils.errors import ConfigurationError, UsageError
from workflows.diversity import (
    AgentSelection,
    DemonstrationBuffer,
    KnownPolicy,
    MomentMatchingDiversityWorkflow,
    PenaltyConfig,
    collect_demonstrations,
    disagreement_rates,
    matches_known,
    relabel_known_batch,
    train_diverse_policy,
)

ONLY_FIRST = AgentSelection(frozenset({0}))
BOTH = AgentSelection(frozenset({0, 1}))


def _transition(actions, reward=0.0, done=False, fill=0.0):
    state = np.full(OBS_SIZE, fill)
    return Transition(state, tuple(int(a) for a in actions), reward, state + 0.1, done)


def test_no_penalty_when_selected_agent_differs(make_constant_policy):
    params = make_constant_policy([WhiteAction.MOVE_E, WhiteAction.STAY])
    known = _transition([WhiteAction.FIRE_GUN, WhiteAction.STAY])
    assert matches_known(params, known, ONLY_FIRST) is False


def test_penalty_when_any_selected_agent_matches(make_constant_policy):
    params = make_constant_policy([WhiteAction.MOVE_E, WhiteAction.MOVE_N])
    known = _transition([WhiteAction.FIRE_GUN, WhiteAction.MOVE_N])
    assert matches_known(params, known, BOTH) is True
    assert matches_known(params, known, ONLY_FIRST) is False


def test_penalty_on_direct_match(make_constant_policy):
    params = make_constant_policy([WhiteAction.FIRE_BOMB, WhiteAction.STAY])
    assert matches_known(params, _transition([WhiteAction.FIRE_BOMB, WhiteAction.MOVE_S]), ONLY_FIRST) is True


def test_empty_selection_is_rejected(make_constant_policy):
    params = make_constant_policy([0, 0])
    with pytest.raises(UsageError):
        matches_known(params, _transition([0, 0]), AgentSelection())
    with pytest.raises(UsageError):
        relabel_known_batch(params, [_transition([0, 0])], AgentSelection(), PenaltyConfig())


def test_selection_rejects_unknown_agents():
    with pytest.raises(ConfigurationError):
        AgentSelection(frozenset({2}))


def test_relabel_penalizes_matched_items_in_order(make_constant_policy):
    params = make_constant_policy([WhiteAction.FIRE_GUN, WhiteAction.STAY])
    batch = [
        _transition([WhiteAction.FIRE_GUN, 0], reward=1.0),
        _transition([WhiteAction.MOVE_W, 0], reward=0.0),
        _transition([WhiteAction.FIRE_GUN, 0], reward=-0.5, done=True),
    ]
    out = relabel_known_batch(params, batch, ONLY_FIRST, PenaltyConfig(penalty=1.0))
    assert [t.reward for t in out] == [0.0, -1.5]
    assert out[0].actions == batch[0].actions and out[1].actions == batch[2].actions
    assert out[1].done and not out[0].done
    np.testing.assert_array_equal(out[1].state, batch[2].state)
    np.testing.assert_array_equal(out[1].next_state, batch[2].next_state)


def test_relabel_without_matches_is_empty(make_constant_policy):
    params = make_constant_policy([WhiteAction.STAY, WhiteAction.STAY])
    batch = [_transition([WhiteAction.MOVE_N, WhiteAction.MOVE_N], reward=1.0)]
    assert relabel_known_batch(params, batch, BOTH, PenaltyConfig()) == []
    assert relabel_known_batch(params, [], BOTH, PenaltyConfig()) == []


def test_zero_penalty_passes_matches_through(make_constant_policy):
    params = make_constant_policy([WhiteAction.STAY, WhiteAction.STAY])
    batch = [_transition([WhiteAction.STAY, WhiteAction.MOVE_N], reward=0.25)]
    assert relabel_known_batch(params, batch, ONLY_FIRST, PenaltyConfig(penalty=0.0)) == batch


def test_relabel_only_lowers_rewards_by_penalty(known_policy, tiny_sac):
    other = init_policy_params(tiny_sac, np.random.default_rng(77))
    demos = known_policy.demonstrations.transitions
    penalty = PenaltyConfig(penalty=0.75)
    out = relabel_known_batch(other, demos, BOTH, penalty)
    matched = [t for t in demos if matches_known(other, t, BOTH)]
    assert len(out) == len(matched)
    for original, relabeled in zip(matched, out):
        assert relabeled.reward == original.reward - 0.75
        assert relabeled.actions == original.actions
        assert relabeled.done == original.done
        np.testing.assert_array_equal(relabeled.state, original.state)


def test_policy_matches_itself_on_its_demonstrations(known_policy):
    for transition in known_policy.demonstrations.transitions:
        assert matches_known(known_policy.params, transition, BOTH)
    rates = disagreement_rates(known_policy.params, known_policy, BOTH)
    assert rates == {0: 0.0, 1: 0.0}


def test_collect_demonstrations(tiny_params, short_arena):
    buffer = collect_demonstrations(tiny_params, short_arena, episodes=1, seed=3)
    assert 0 < len(buffer) <= short_arena.max_ticks
    again = collect_demonstrations(tiny_params, short_arena, episodes=1, seed=3)
    assert buffer.transitions == again.transitions

    many = collect_demonstrations(tiny_params, short_arena, episodes=10, seed=4)
    assert many.episode_count == 10
    assert all(math.isfinite(t.reward) for t in many.transitions)
    assert all(outcome in {"win", "loss", "timeout"} for outcome in many.outcomes())
    with pytest.raises(UsageError):
        collect_demonstrations(tiny_params, short_arena, episodes=0, seed=4)


def test_degenerate_diversity_equals_baseline(tiny_sac, short_arena, tiny_penalty):
    baseline, _ = train_baseline(tiny_sac, short_arena, seed=8, steps=120)
    diverse, report = train_diverse_policy(
        [], [], tiny_penalty, tiny_sac, short_arena, seed=8, steps=120, eval_episodes=0
    )
    for agent_a, agent_b in zip(baseline.agents, diverse.agents):
        for name, net in agent_a.networks().items():
            for x, y in zip(net.parameters(), agent_b.networks()[name].parameters()):
                np.testing.assert_array_equal(x, y)
    assert report["counters"]["relabeled_inserted"] == 0


def test_relabel_rounds_respect_mixing_cap(known_policy, tiny_sac, short_arena, tiny_penalty):
    workflow = MomentMatchingDiversityWorkflow(
        [known_policy], ONLY_FIRST, tiny_penalty, tiny_sac, short_arena, seed=2
    )
    params, report = workflow.run(steps=96, eval_episodes=2, chunk_size=8)
    counters = workflow.get_counters()
    assert counters["fresh_steps"] == 96
    assert counters["relabel_rounds"] == 96 // tiny_penalty.relabel_interval_steps
    assert counters["max_round_fraction"] <= tiny_penalty.mixing_ratio
    assert counters["relabeled_inserted"] <= counters["relabel_rounds"] * tiny_penalty.relabel_cap
    against = report["against_known"]["base"]
    assert set(against["disagreement"]) == {"0"}
    assert against["mmd"]["mmd"] >= 0.0
    assert report["evaluation"]["episodes"] == 2


def test_quota_is_split_between_known_policies(known_policy, tiny_sac, short_arena):
    twin = KnownPolicy("twin", known_policy.params, known_policy.demonstrations)
    penalty = PenaltyConfig(relabel_batch_size=64, relabel_interval_steps=16, mixing_ratio=1.0)
    workflow = MomentMatchingDiversityWorkflow(
        [known_policy, twin], BOTH, penalty, tiny_sac, short_arena, seed=2
    )
    workflow.run(steps=32, eval_episodes=0)
    # every demonstration self-matches under BOTH at the initial params, so each round fills the cap
    assert workflow.get_counters()["relabeled_inserted"] <= 2 * penalty.relabel_cap


def test_known_without_selection_is_rejected(known_policy, tiny_sac, short_arena, tiny_penalty):
    with pytest.raises(ConfigurationError):
        MomentMatchingDiversityWorkflow([known_policy], [], tiny_penalty, tiny_sac, short_arena, seed=0)


def test_empty_demonstrations_are_rejected(tiny_params, tiny_sac, short_arena, tiny_penalty):
    empty = KnownPolicy("empty", tiny_params, DemonstrationBuffer(episodes=[DemonstrationEpisode(0, "win", [])], seed=0))
    with pytest.raises(ConfigurationError):
        MomentMatchingDiversityWorkflow([empty], ONLY_FIRST, tiny_penalty, tiny_sac, short_arena, seed=0)


def test_penalty_config_bounds():
    assert PenaltyConfig(mixing_ratio=0.5, relabel_interval_steps=256).relabel_cap == 128
    with pytest.raises(ValueError):
        PenaltyConfig(penalty=-1.0)
    with pytest.raises(ValueError):
        PenaltyConfig(mixing_ratio=1.5)


def test_zero_relabel_quota_is_rejected(known_policy, tiny_sac, short_arena):
    twin = KnownPolicy("twin", known_policy.params, known_policy.demonstrations)
    penalty = PenaltyConfig(relabel_batch_size=16, relabel_interval_steps=16, mixing_ratio=0.1)
    assert penalty.relabel_cap == 1
    with pytest.raises(ConfigurationError, match="quota per known policy is 0"):
        MomentMatchingDiversityWorkflow([known_policy, twin], BOTH, penalty, tiny_sac, short_arena, seed=0)

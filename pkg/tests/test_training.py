import numpy as np
import pandas as pd
import pytest

from arena.world import Outcome, WhiteAction, reset, step
from learner.policy import Skill, init_policy_params, skill_mask
from learner.training import CURVE_COLUMNS, TrainingLoop, evaluate_policy, run_episode, train_baseline
from utils.errors import UsageError
from utils.seeding import derive_rng


def _assert_params_equal(a, b):
    for agent_a, agent_b in zip(a.agents, b.agents):
        for name, net in agent_a.networks().items():
            for x, y in zip(net.parameters(), agent_b.networks()[name].parameters()):
                np.testing.assert_array_equal(x, y)


def test_zero_budget_returns_initial_params(tiny_sac, short_arena):
    params, curve = train_baseline(tiny_sac, short_arena, seed=5, steps=0)
    _assert_params_equal(params, init_policy_params(tiny_sac, derive_rng(5, "init")))
    assert curve.empty
    assert list(curve.columns) == CURVE_COLUMNS


def test_negative_budget_raises(tiny_sac, short_arena):
    with pytest.raises(UsageError):
        train_baseline(tiny_sac, short_arena, seed=5, steps=-1)


def test_training_is_deterministic(tiny_sac, short_arena):
    params_a, curve_a = train_baseline(tiny_sac, short_arena, seed=3, steps=200)
    params_b, curve_b = train_baseline(tiny_sac, short_arena, seed=3, steps=200)
    _assert_params_equal(params_a, params_b)
    pd.testing.assert_frame_equal(curve_a, curve_b)
    assert len(curve_a) > 0


def test_loop_runs_updates_after_warmup(tiny_sac, short_arena):
    params = init_policy_params(tiny_sac, np.random.default_rng(0))
    loop = TrainingLoop(params, short_arena, seed=0)
    loop.run(tiny_sac.warmup_steps - 1)
    assert loop.update_count == 0
    loop.run(100)
    assert loop.update_count > 0
    assert loop.env_steps == tiny_sac.warmup_steps + 99
    assert len(loop.replay) == min(loop.env_steps, tiny_sac.replay_capacity)
    assert set(loop.last_losses) == {0, 1}


def test_curve_tracks_episodes(tiny_sac, short_arena):
    params = init_policy_params(tiny_sac, np.random.default_rng(0))
    loop = TrainingLoop(params, short_arena, seed=1)
    loop.run(3 * short_arena.max_ticks)
    curve = loop.curve()
    assert len(curve) >= 3
    assert curve["length"].max() <= short_arena.max_ticks
    assert curve["episode"].tolist() == list(range(len(curve)))
    assert curve["win_rate"].between(0.0, 1.0).all()


def test_step_hooks_run_every_step(tiny_sac, short_arena):
    params = init_policy_params(tiny_sac, np.random.default_rng(0))
    loop = TrainingLoop(params, short_arena, seed=1)
    seen = []
    loop.step_hooks.append(lambda lp: seen.append(lp.env_steps))
    loop.run(10)
    assert seen == list(range(1, 11))


def test_logged_episode_replays_exactly(tiny_params, short_arena):
    result = run_episode(tiny_params, short_arena, seed=42, record=True)
    log = result.log
    assert len(log.records) == len(result.transitions) <= short_arena.max_ticks
    ticks = [r.tick for r in log.records]
    assert ticks == sorted(set(ticks))

    state = reset(short_arena, log.seed)
    assert [list(w.pos) for w in state.white] == log.start_positions
    for record in log.records:
        out = step(state, tuple(record.actions), short_arena)
        state = out.next_state
        assert [list(w.pos) for w in state.white] == record.positions
        assert out.reward == record.reward
    assert out.outcome.value == log.outcome == result.outcome.value


def test_greedy_episode_is_deterministic(tiny_params, short_arena):
    a = run_episode(tiny_params, short_arena, seed=9)
    b = run_episode(tiny_params, short_arena, seed=9)
    assert a.transitions == b.transitions
    assert a.total_reward == b.total_reward


def test_sampled_episode_needs_rng(tiny_params, short_arena):
    with pytest.raises(UsageError):
        run_episode(tiny_params, short_arena, seed=9, mode="sample")


def test_gun_only_policy_never_fires_bomb(tiny_sac, short_arena):
    params = init_policy_params(tiny_sac, np.random.default_rng(4), action_mask=skill_mask(Skill.GUN))
    for agent in params.agents:
        agent.actor.biases[-1][WhiteAction.FIRE_BOMB] = 50.0
    report = evaluate_policy(params, short_arena, episodes=5, seed=0, record=True)
    assert report.masked_action_count == 0
    for log in report.trajectories:
        assert all(WhiteAction.FIRE_BOMB not in r.actions for r in log.records)


def test_evaluation_report(tiny_params, short_arena):
    report = evaluate_policy(tiny_params, short_arena, episodes=4, seed=0)
    assert report.episodes == 4
    assert sum(report.outcomes.values()) == 4
    assert report.win_rate == report.outcomes.get(Outcome.WIN.value, 0) / 4
    assert report.trajectories == []
    assert evaluate_policy(tiny_params, short_arena, episodes=4, seed=0).summary() == report.summary()
    with pytest.raises(UsageError):
        evaluate_policy(tiny_params, short_arena, episodes=0, seed=0)

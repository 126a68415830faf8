import numpy as np
import pytest

from arena.world import NUM_ACTIONS, OBS_SIZE
from learner.mlp import forward
from learner.policy import SacConfig, Skill, init_policy_params, skill_mask
from learner.replay import Transition, TransitionBatch
from learner.sac import (
    AdamOptimizer,
    SgdOptimizer,
    actor_loss_and_grads,
    critic_loss_and_grads,
    critic_targets,
    make_optimizer,
    make_optimizers,
    sac_update,
)
from utils.errors import TrainingError, UsageError


def _random_batch(rng, size=6, done_prob=0.3):
    return TransitionBatch(
        states=rng.normal(size=(size, OBS_SIZE)),
        actions=rng.integers(0, NUM_ACTIONS, size=(size, 2)),
        rewards=rng.normal(size=size),
        next_states=rng.normal(size=(size, OBS_SIZE)),
        dones=(rng.random(size) < done_prob).astype(np.float64),
    )


def _params(seed, mask=None, gamma=0.9):
    sac = SacConfig(hidden_sizes=(5,), gamma=gamma, alpha=0.2)
    rng = np.random.default_rng(seed)
    params = init_policy_params(sac, rng, action_mask=mask or skill_mask(Skill.ALL))
    for agent in params.agents:
        # push the actor away from uniform so its gradient is not tiny
        agent.actor.weights[-1] *= 100.0
    return params


def _relative_error(analytic, numeric):
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-10)
    return np.linalg.norm(analytic - numeric) / scale


def _finite_difference(loss_fn, net, eps=1e-5):
    numeric = []
    for param in net.parameters():
        grad = np.zeros_like(param)
        for idx in np.ndindex(param.shape):
            old = param[idx]
            param[idx] = old + eps
            up = loss_fn()
            param[idx] = old - eps
            down = loss_fn()
            param[idx] = old
            grad[idx] = (up - down) / (2 * eps)
        numeric.append(grad)
    return numeric


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("critic", ["q1", "q2"])
def test_critic_gradients_match_finite_differences(seed, critic):
    params = _params(seed)
    batch = _random_batch(np.random.default_rng(100 + seed))
    agent = seed % 2
    targets = critic_targets(params, batch, agent)
    _, grads = critic_loss_and_grads(params, batch, agent, critic, targets)
    net = getattr(params.agents[agent], critic)
    numeric = _finite_difference(
        lambda: critic_loss_and_grads(params, batch, agent, critic, targets)[0], net
    )
    for analytic, approx in zip(grads.parameters(), numeric):
        assert _relative_error(analytic, approx) < 1e-4


@pytest.mark.parametrize("seed", range(10))
def test_actor_gradients_match_finite_differences(seed):
    params = _params(seed)
    batch = _random_batch(np.random.default_rng(200 + seed))
    agent = seed % 2
    _, grads, _ = actor_loss_and_grads(params, batch, agent)
    numeric = _finite_difference(lambda: actor_loss_and_grads(params, batch, agent)[0], params.agents[agent].actor)
    for analytic, approx in zip(grads.parameters(), numeric):
        assert _relative_error(analytic, approx) < 1e-4


@pytest.mark.parametrize("seed", range(3))
def test_masked_actor_gradients_match_finite_differences(seed):
    params = _params(seed, mask=skill_mask(Skill.BOMB))
    batch = _random_batch(np.random.default_rng(300 + seed))
    _, grads, _ = actor_loss_and_grads(params, batch, 0)
    numeric = _finite_difference(lambda: actor_loss_and_grads(params, batch, 0)[0], params.agents[0].actor)
    for analytic, approx in zip(grads.parameters(), numeric):
        assert _relative_error(analytic, approx) < 1e-4


def test_critic_target_reduces_to_reward():
    sac = SacConfig(hidden_sizes=(5,), gamma=0.0, alpha=1e-12)
    params = init_policy_params(sac, np.random.default_rng(0))
    batch = _random_batch(np.random.default_rng(1), done_prob=1.1)
    np.testing.assert_array_equal(critic_targets(params, batch, 0), batch.rewards)


def test_critic_target_formula():
    params = _params(4)
    batch = _random_batch(np.random.default_rng(5))
    net = params.agents[1]
    logits = forward(net.actor, batch.next_states)
    logits = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    min_q = np.minimum(forward(net.q1_target, batch.next_states), forward(net.q2_target, batch.next_states))
    value = np.sum(probs * (min_q - params.alpha * np.log(probs)), axis=1)
    expected = batch.rewards + params.sac.gamma * (1 - batch.dones) * value
    np.testing.assert_allclose(critic_targets(params, batch, 1), expected, rtol=1e-12, atol=1e-12)


def test_repeated_updates_fit_single_transition():
    sac = SacConfig(hidden_sizes=(8,), learning_rate=0.05)
    params = init_policy_params(sac, np.random.default_rng(0))
    state = np.linspace(-1.0, 1.0, OBS_SIZE)
    transition = Transition(state, (3, 5), 0.7, state, True)
    optimizers = make_optimizers(params)
    for _ in range(400):
        params, report = sac_update(params, [transition], 0, optimizers)
    assert forward(params.agents[0].q1, state)[3] == pytest.approx(0.7, abs=1e-2)
    assert forward(params.agents[0].q2, state)[3] == pytest.approx(0.7, abs=1e-2)
    assert np.isfinite(report.actor_loss)


def test_update_moves_target_critics_by_tau(tiny_params):
    batch = _random_batch(np.random.default_rng(0), size=8)
    before = tiny_params.agents[0].q1_target.copy()
    params, _ = sac_update(tiny_params, batch, 0)
    tau = params.sac.tau
    online = params.agents[0].q1
    for t_new, t_old, o in zip(params.agents[0].q1_target.parameters(), before.parameters(), online.parameters()):
        np.testing.assert_allclose(t_new, (1 - tau) * t_old + tau * o, rtol=0, atol=1e-15)


def test_update_leaves_other_agent_untouched(tiny_params):
    other = {name: net.copy() for name, net in tiny_params.agents[1].networks().items()}
    sac_update(tiny_params, _random_batch(np.random.default_rng(0), size=8), 0)
    for name, net in tiny_params.agents[1].networks().items():
        for a, b in zip(net.parameters(), other[name].parameters()):
            np.testing.assert_array_equal(a, b)


def test_non_finite_update_raises_training_error(tiny_params):
    tiny_params.agents[0].q1.weights[0][0, 0] = np.nan
    with pytest.raises(TrainingError) as excinfo:
        sac_update(tiny_params, _random_batch(np.random.default_rng(0), size=8), 0)
    assert excinfo.value.diagnostics["agent"] == 0


def test_empty_batch_raises(tiny_params):
    with pytest.raises(UsageError):
        sac_update(tiny_params, [], 0)


def test_optimizer_selection_and_clipping():
    assert isinstance(make_optimizer(SacConfig(optimizer="adam")), AdamOptimizer)
    sgd = make_optimizer(SacConfig())
    assert type(sgd) is SgdOptimizer

    params = init_policy_params(SacConfig(hidden_sizes=(3,)), np.random.default_rng(0))
    net = params.agents[0].q1
    before = [p.copy() for p in net.parameters()]
    grads = net.copy()
    for g in grads.parameters():
        g[...] = 100.0
    opt = SgdOptimizer(learning_rate=1.0, clip_norm=10.0)
    norm = opt.step(net, grads)
    assert norm > 10.0
    step_norm = np.sqrt(sum(np.sum((a - b) ** 2) for a, b in zip(net.parameters(), before)))
    assert step_norm == pytest.approx(10.0)

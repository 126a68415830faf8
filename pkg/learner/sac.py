"""
Discrete Soft Actor-Critic
Expectation-form actor and critic losses with analytic gradients, SGD/Adam steps
"""

import logging
from dataclasses import dataclass

import numpy as np

from learner.mlp import backward, forward, forward_with_cache, soft_update
from learner.policy import distribution_from_logits
from learner.replay import TransitionBatch
from utils.errors import TrainingError, UsageError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SacLossReport:
    agent: int
    critic1_loss: float
    critic2_loss: float
    actor_loss: float
    policy_entropy: float
    critic_grad_norm: float
    actor_grad_norm: float


def _as_batch(batch):
    if isinstance(batch, TransitionBatch):
        if len(batch) == 0:
            raise UsageError("SAC update needs a nonempty batch")
        return batch
    return TransitionBatch.from_transitions(list(batch))


def critic_targets(params, batch, agent):
    """
    y = r + gamma * (1 - done) * sum_a pi(a|s') * (min(Q1', Q2')(s', a) - alpha * ln pi(a|s'))
    computed with the target critics.
    """
    networks = params.agents[agent]
    probs, log_probs = distribution_from_logits(
        forward(networks.actor, batch.next_states), params.mask_array
    )
    min_q = np.minimum(
        forward(networks.q1_target, batch.next_states),
        forward(networks.q2_target, batch.next_states),
    )
    soft_value = np.sum(probs * (min_q - params.alpha * log_probs), axis=1)
    return batch.rewards + params.sac.gamma * (1.0 - batch.dones) * soft_value


def critic_loss_and_grads(params, batch, agent, critic="q1", targets=None):
    """
    Mean squared error of Q(s, a_agent) against the soft target.

    Returns:
        tuple: (loss, gradients as an Mlp)
    """
    batch = _as_batch(batch)
    if targets is None:
        targets = critic_targets(params, batch, agent)
    net = getattr(params.agents[agent], critic)
    q, cache = forward_with_cache(net, batch.states)
    rows = np.arange(len(batch))
    chosen = batch.actions[:, agent]
    error = q[rows, chosen] - targets
    loss = float(np.mean(error**2))
    grad_out = np.zeros_like(q)
    grad_out[rows, chosen] = 2.0 * error / len(batch)
    return loss, backward(net, cache, grad_out)


def actor_loss_and_grads(params, batch, agent):
    """
    mean_b sum_a pi(a|s) * (alpha * ln pi(a|s) - min(Q1, Q2)(s, a)).

    d/dlogits = pi * (f - L_b) / B with f = alpha * ln pi - min Q; the
    alpha * d(ln pi) part sums to zero.

    Returns:
        tuple: (loss, gradients as an Mlp, mean policy entropy)
    """
    batch = _as_batch(batch)
    networks = params.agents[agent]
    logits, cache = forward_with_cache(networks.actor, batch.states)
    probs, log_probs = distribution_from_logits(logits, params.mask_array)
    min_q = np.minimum(forward(networks.q1, batch.states), forward(networks.q2, batch.states))
    f = np.where(params.mask_array, params.alpha * log_probs - min_q, 0.0)
    per_sample = np.sum(probs * f, axis=1)
    loss = float(np.mean(per_sample))
    grad_logits = probs * (f - per_sample[:, None]) / len(batch)
    entropy = float(np.mean(-np.sum(probs * log_probs, axis=1)))
    return loss, backward(networks.actor, cache, grad_logits), entropy


def grad_norm(grads):
    return float(np.sqrt(sum(np.sum(g**2) for g in grads.parameters())))


class SgdOptimizer:
    """Plain gradient descent with global-norm clipping."""

    def __init__(self, learning_rate, clip_norm):
        self.learning_rate = learning_rate
        self.clip_norm = clip_norm

    def _clipped(self, grads):
        norm = grad_norm(grads)
        scale = self.clip_norm / norm if norm > self.clip_norm else 1.0
        return [g * scale for g in grads.parameters()], norm

    def step(self, net, grads):
        clipped, norm = self._clipped(grads)
        for param, g in zip(net.parameters(), clipped):
            param -= self.learning_rate * g
        return norm


class AdamOptimizer(SgdOptimizer):
    """Adaptive-moment variant, enabled with `optimizer: "adam"`."""

    def __init__(self, learning_rate, clip_norm, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(learning_rate, clip_norm)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, net, grads):
        clipped, norm = self._clipped(grads)
        if self.m is None:
            self.m = [np.zeros_like(g) for g in clipped]
            self.v = [np.zeros_like(g) for g in clipped]
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for i, (param, g) in enumerate(zip(net.parameters(), clipped)):
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g**2
            m_hat = self.m[i] / correction1
            v_hat = self.v[i] / correction2
            param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
        return norm


def make_optimizer(sac):
    if sac.optimizer == "adam":
        return AdamOptimizer(sac.learning_rate, sac.grad_clip_norm)
    return SgdOptimizer(sac.learning_rate, sac.grad_clip_norm)


def make_optimizers(params):
    """One optimizer per (agent, trainable net)."""
    return {
        (agent, name): make_optimizer(params.sac)
        for agent in range(len(params.agents))
        for name in ("actor", "q1", "q2")
    }


def _ensure_finite(agent, stage, loss, grads):
    norm = grad_norm(grads)
    if not (np.isfinite(loss) and np.isfinite(norm)):
        raise TrainingError(
            "Non-finite SAC update",
            {"agent": agent, "stage": stage, "loss": loss, "grad_norm": norm},
        )


def sac_update(params, batch, agent, optimizers=None):
    """
    One discrete-SAC step for `agent`, treating the other agent as part of
    the environment: critic step on both Q nets, actor step against the
    updated critics, then Polyak update of the target critics.

    Params are updated in place and returned for chaining.

    Args:
        params (PolicyParams): Joint policy
        batch (TransitionBatch | list[Transition]): Nonempty batch
        agent (int): Agent whose networks are updated
        optimizers (dict): From `make_optimizers`; stateless SGD when omitted

    Returns:
        tuple: (params, SacLossReport)

    Raises:
        TrainingError: If a loss or gradient is not finite
    """
    batch = _as_batch(batch)
    if optimizers is None:
        optimizers = make_optimizers(params)
    networks = params.agents[agent]

    targets = critic_targets(params, batch, agent)
    loss1, grads1 = critic_loss_and_grads(params, batch, agent, "q1", targets)
    loss2, grads2 = critic_loss_and_grads(params, batch, agent, "q2", targets)
    _ensure_finite(agent, "critic1", loss1, grads1)
    _ensure_finite(agent, "critic2", loss2, grads2)
    norm1 = optimizers[(agent, "q1")].step(networks.q1, grads1)
    norm2 = optimizers[(agent, "q2")].step(networks.q2, grads2)

    actor_loss, actor_grads, entropy = actor_loss_and_grads(params, batch, agent)
    _ensure_finite(agent, "actor", actor_loss, actor_grads)
    actor_norm = optimizers[(agent, "actor")].step(networks.actor, actor_grads)

    tau = params.sac.tau
    networks.q1_target = soft_update(networks.q1_target, networks.q1, tau)
    networks.q2_target = soft_update(networks.q2_target, networks.q2, tau)

    return params, SacLossReport(
        agent=agent,
        critic1_loss=loss1,
        critic2_loss=loss2,
        actor_loss=actor_loss,
        policy_entropy=entropy,
        critic_grad_norm=max(norm1, norm2),
        actor_grad_norm=actor_norm,
    )

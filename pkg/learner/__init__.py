from learner.mlp import Mlp, forward, soft_update
from learner.policy import PolicyParams, SacConfig, act, policy_distribution
from learner.replay import ReplayBuffer, Transition, TransitionBatch
from learner.sac import sac_update

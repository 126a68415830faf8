"""
Arena World
Seedable reset, pure step function and state vector of the 2-vs-1 shooter
"""

import math
from dataclasses import dataclass, replace
from enum import Enum, IntEnum

import numpy as np

from arena.red_behavior import distance, red_controller
from utils.errors import UsageError

OBS_SIZE = 16
NUM_AGENTS = 2
NUM_ACTIONS = 7


class WhiteAction(IntEnum):
    STAY = 0
    MOVE_N = 1
    MOVE_S = 2
    MOVE_E = 3
    MOVE_W = 4
    FIRE_GUN = 5
    FIRE_BOMB = 6


_MOVES = {
    WhiteAction.MOVE_N: (0.0, 1.0),
    WhiteAction.MOVE_S: (0.0, -1.0),
    WhiteAction.MOVE_E: (1.0, 0.0),
    WhiteAction.MOVE_W: (-1.0, 0.0),
}


class Outcome(str, Enum):
    ONGOING = "ongoing"
    WIN = "win"
    LOSS = "loss"
    TIMEOUT = "timeout"


class Weapon(str, Enum):
    GUN = "gun"
    BOMB = "bomb"
    RED_GUN = "red_gun"


@dataclass(frozen=True)
class WhiteState:
    pos: tuple
    hp: int
    gun_cd: int = 0
    bomb_cd: int = 0
    alive: bool = True


@dataclass(frozen=True)
class RedState:
    pos: tuple
    heading_deg: float
    hp: int
    fire_cd: int = 0


@dataclass(frozen=True)
class WorldState:
    tick: int
    white: tuple
    red: RedState
    rng_state: int


@dataclass(frozen=True)
class ArenaEvent:
    """One successful attack. Whites are "white_0"/"white_1", the opponent is "red"."""

    shooter: str
    target: str
    weapon: Weapon
    damage: int


@dataclass(frozen=True)
class StepResult:
    next_state: WorldState
    reward: float
    done: bool
    outcome: Outcome
    events: tuple


def white_id(index):
    return f"white_{index}"


def reset(config, seed):
    """
    Start an episode: red at the center facing north, whites at their
    corner anchors plus uniform jitter.

    Args:
        config (ArenaConfig): Validated arena rules
        seed (int): Episode seed; equal seeds give equal states

    Returns:
        WorldState: Initial state at tick 0
    """
    rng = np.random.default_rng(int(seed))
    jitter = config.spawn_jitter_m
    whites = []
    for anchor in config.white_anchors:
        if jitter > 0:
            dx, dy = rng.uniform(-jitter, jitter, size=2)
        else:
            dx, dy = 0.0, 0.0
        pos = (float(anchor[0] + dx), float(anchor[1] + dy))
        whites.append(WhiteState(pos=pos, hp=config.white_hp))
    red = RedState(pos=config.red_spawn, heading_deg=0.0, hp=config.red_hp)
    return WorldState(tick=0, white=tuple(whites), red=red, rng_state=int(rng.integers(0, 2**63 - 1)))


def with_white_removed(state, index):
    """Copy of `state` where white `index` is dead from the start."""
    whites = list(state.white)
    whites[index] = replace(whites[index], hp=0, alive=False)
    return replace(state, white=tuple(whites))


def is_terminal(state, config):
    return state.red.hp <= 0 or not any(w.alive for w in state.white) or state.tick >= config.max_ticks


def _clip(value, upper):
    return min(max(value, 0.0), upper)


def _normalize_heading(angle):
    heading = angle % 360.0
    # -1e-15 % 360.0 rounds to 360.0
    return 0.0 if heading >= 360.0 else heading


def step(state, actions, config):
    """
    Advance one tick. Resolution order: white movement, white attacks, red
    behavior tree, cooldown decrement, reward and outcome.

    Raises:
        UsageError: If the state is already terminal or the action pair is malformed
    """
    if is_terminal(state, config):
        raise UsageError(f"Cannot step a terminal state (tick={state.tick})")
    if len(actions) != NUM_AGENTS:
        raise UsageError(f"Expected {NUM_AGENTS} actions, got {len(actions)}")
    actions = tuple(WhiteAction(int(a)) for a in actions)

    # 1. movement
    whites = []
    for white, action in zip(state.white, actions):
        if white.alive and action in _MOVES:
            ux, uy = _MOVES[action]
            speed = config.white_speed_m_per_tick
            pos = (
                _clip(white.pos[0] + ux * speed, config.arena_size_m),
                _clip(white.pos[1] + uy * speed, config.arena_size_m),
            )
            white = replace(white, pos=pos)
        whites.append(white)

    # 2. white attacks
    red = state.red
    events = []
    red_hp_before = red.hp
    for index, action in enumerate(actions):
        white = whites[index]
        if not white.alive or red.hp <= 0:
            continue
        dist = distance(white.pos, red.pos)
        if action == WhiteAction.FIRE_GUN and white.gun_cd == 0 and dist <= config.gun_range_m:
            damage = min(config.gun_damage_hp, red.hp)
            red = replace(red, hp=red.hp - damage)
            whites[index] = replace(white, gun_cd=config.gun_cooldown_ticks)
            events.append(ArenaEvent(white_id(index), "red", Weapon.GUN, damage))
        elif action == WhiteAction.FIRE_BOMB and white.bomb_cd == 0 and dist <= config.bomb_range_m:
            damage = min(config.bomb_damage_hp, red.hp)
            red = replace(red, hp=red.hp - damage)
            whites[index] = replace(white, bomb_cd=config.bomb_cooldown_ticks)
            events.append(ArenaEvent(white_id(index), "red", Weapon.BOMB, damage))

    # 3. red behavior tree; a red killed this tick does not fire
    white_hp_before = sum(w.hp for w in whites)
    if red.hp > 0:
        interim = replace(state, white=tuple(whites), red=red)
        command = red_controller(interim, config)
        red = replace(red, heading_deg=_normalize_heading(red.heading_deg + command.turn_delta_deg))
        if command.fire:
            target = whites[command.target]
            damage = min(config.red_damage_hp, target.hp)
            hp = target.hp - damage
            whites[command.target] = replace(target, hp=hp, alive=hp > 0)
            red = replace(red, fire_cd=config.red_fire_cooldown_ticks)
            events.append(ArenaEvent("red", white_id(command.target), Weapon.RED_GUN, damage))

    # 4. cooldowns and clock
    whites = [
        replace(w, gun_cd=max(w.gun_cd - 1, 0), bomb_cd=max(w.bomb_cd - 1, 0)) for w in whites
    ]
    red = replace(red, fire_cd=max(red.fire_cd - 1, 0))
    next_state = WorldState(
        tick=state.tick + 1, white=tuple(whites), red=red, rng_state=state.rng_state
    )

    # 5. reward and outcome
    dealt = red_hp_before - red.hp
    taken = white_hp_before - sum(w.hp for w in whites)
    reward = config.damage_dealt_reward_per_hp * dealt - config.damage_taken_penalty_per_hp * taken
    if red.hp <= 0:
        outcome = Outcome.WIN
        reward += config.win_bonus
    elif not any(w.alive for w in whites):
        outcome = Outcome.LOSS
        reward -= config.loss_penalty
    elif next_state.tick >= config.max_ticks:
        outcome = Outcome.TIMEOUT
        reward -= config.timeout_penalty
    else:
        outcome = Outcome.ONGOING

    return StepResult(
        next_state=next_state,
        reward=float(reward),
        done=outcome != Outcome.ONGOING,
        outcome=outcome,
        events=tuple(events),
    )


def observe(state, config):
    """
    Global state vector of length 16.

    Layout: for white 0 then white 1: x/size, y/size, hp/white_hp,
    gun_cd/gun_cooldown, bomb_cd/bomb_cooldown, alive; then red
    sin(heading), cos(heading), hp/red_hp, fire_cd/red_fire_cooldown.
    """
    obs = np.empty(OBS_SIZE, dtype=np.float64)
    size = config.arena_size_m
    for index, white in enumerate(state.white):
        base = index * 6
        obs[base] = white.pos[0] / size
        obs[base + 1] = white.pos[1] / size
        obs[base + 2] = white.hp / config.white_hp
        obs[base + 3] = white.gun_cd / config.gun_cooldown_ticks
        obs[base + 4] = white.bomb_cd / config.bomb_cooldown_ticks
        obs[base + 5] = 1.0 if white.alive else 0.0
    heading = math.radians(state.red.heading_deg)
    obs[12] = math.sin(heading)
    obs[13] = math.cos(heading)
    obs[14] = state.red.hp / config.red_hp
    obs[15] = state.red.fire_cd / config.red_fire_cooldown_ticks
    return obs

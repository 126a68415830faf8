"""
Red Cube Behavior Tree
Scripted opponent: aim at the nearest white cube, shoot it when lined up

    Selector
    ├── Sequence: has_target → turn_toward_target → Selector(Sequence(can_fire → fire), hold_fire)
    └── idle

Nodes are stateless, so ticking the tree is a pure function of
(WorldState, ArenaConfig). The blackboard dict collects the command.
"""

import math
from dataclasses import dataclass
from enum import Enum


class Status(Enum):
    SUCCESS = 1
    FAILURE = 2


class Selector:
    """OR: first child that succeeds wins."""

    def __init__(self, *children):
        self.children = children

    def tick(self, board):
        for child in self.children:
            if child.tick(board) == Status.SUCCESS:
                return Status.SUCCESS
        return Status.FAILURE


class Sequence:
    """AND: stop on the first failing child."""

    def __init__(self, *children):
        self.children = children

    def tick(self, board):
        for child in self.children:
            if child.tick(board) == Status.FAILURE:
                return Status.FAILURE
        return Status.SUCCESS


class Condition:
    def __init__(self, check_fn):
        self.check_fn = check_fn

    def tick(self, board):
        return Status.SUCCESS if self.check_fn(board) else Status.FAILURE


class Action:
    def __init__(self, action_fn):
        self.action_fn = action_fn

    def tick(self, board):
        self.action_fn(board)
        return Status.SUCCESS


@dataclass(frozen=True)
class RedCommand:
    turn_delta_deg: float
    fire: bool
    target: int | None = None


def wrap_degrees(angle):
    """Map an angle to (-180, 180]."""
    wrapped = math.fmod(angle, 360.0)
    if wrapped <= -180.0:
        wrapped += 360.0
    elif wrapped > 180.0:
        wrapped -= 360.0
    return wrapped


def bearing_deg(origin, target):
    """Compass bearing from origin to target: 0° is +y, 90° is +x."""
    return math.degrees(math.atan2(target[0] - origin[0], target[1] - origin[1])) % 360.0


def distance(a, b):
    return math.hypot(a[0] - b[0], a[1] - b[1])


# --- leaf behaviors ---

def _acquire_target(board):
    state, config = board["state"], board["config"]
    best = None
    for index, white in enumerate(state.white):
        if not white.alive:
            continue
        dist = distance(state.red.pos, white.pos)
        if dist > config.red_aim_range_m:
            continue
        # strict < keeps the lower index on ties
        if best is None or dist < best[1]:
            best = (index, dist)
    if best is None:
        return False
    board["target"], board["target_dist"] = best
    return True


def _turn_toward_target(board):
    state, config = board["state"], board["config"]
    white = state.white[board["target"]]
    error = wrap_degrees(bearing_deg(state.red.pos, white.pos) - state.red.heading_deg)
    limit = config.red_turn_deg_per_tick
    turn = max(-limit, min(limit, error))
    board["turn"] = turn
    board["residual_error"] = error - turn


def _can_fire(board):
    state, config = board["state"], board["config"]
    return (
        abs(board["residual_error"]) <= config.red_aim_tolerance_deg
        and board["target_dist"] <= config.red_fire_range_m
        and state.red.fire_cd == 0
    )


def _fire(board):
    board["fire"] = True


def _hold_fire(board):
    board["fire"] = False


def _idle(board):
    board["turn"] = 0.0
    board["fire"] = False
    board["target"] = None


RED_TREE = Selector(
    Sequence(
        Condition(_acquire_target),
        Action(_turn_toward_target),
        Selector(
            Sequence(Condition(_can_fire), Action(_fire)),
            Action(_hold_fire),
        ),
    ),
    Action(_idle),
)


def red_controller(state, config):
    """
    Decide the red cube's turn and trigger for this tick.

    Args:
        state (WorldState): Current world, red alive
        config (ArenaConfig): Arena rules

    Returns:
        RedCommand: Heading change (bounded by the turn rate) and fire flag
    """
    board = {"state": state, "config": config, "turn": 0.0, "fire": False, "target": None}
    RED_TREE.tick(board)
    return RedCommand(turn_delta_deg=board["turn"], fire=board["fire"], target=board["target"])

from arena.config import DEFAULT_ARENA, ArenaConfig
from arena.red_behavior import RedCommand, red_controller
from arena.world import (
    NUM_ACTIONS,
    NUM_AGENTS,
    OBS_SIZE,
    ArenaEvent,
    Outcome,
    RedState,
    StepResult,
    Weapon,
    WhiteAction,
    WhiteState,
    WorldState,
    is_terminal,
    observe,
    reset,
    step,
    with_white_removed,
)

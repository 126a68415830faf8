"""
Arena Configuration
Constants of the 2-vs-1 team shooter (0.5 s ticks, meters, hit points)
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ArenaConfig(BaseModel):
    """
    Rules of the mini team shooter: two learnable white cubes against one
    scripted red cube that can only turn in place.

    Durations are in ticks of `tick_seconds`; the defaults translate the
    gun's "every 2 seconds" and the bomb's "every 3 seconds" into 4 and 6
    ticks.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    arena_size_m: float = Field(40.0, gt=0)
    tick_seconds: float = Field(0.5, gt=0)
    white_speed_m_per_tick: float = Field(2.0, gt=0)

    gun_range_m: float = Field(20.0, gt=0)
    gun_cooldown_ticks: int = Field(4, gt=0)
    gun_damage_hp: int = Field(1, gt=0)
    bomb_range_m: float = Field(15.0, gt=0)
    bomb_cooldown_ticks: int = Field(6, gt=0)
    bomb_damage_hp: int = Field(2, gt=0)

    red_hp: int = Field(8, gt=0)
    white_hp: int = Field(2, gt=0)
    red_aim_range_m: float = Field(100.0, gt=0)
    red_fire_range_m: float = Field(20.0, gt=0)
    red_fire_cooldown_ticks: int = Field(4, gt=0)
    red_turn_deg_per_tick: float = Field(45.0, gt=0)
    red_aim_tolerance_deg: float = Field(10.0, gt=0)
    red_damage_hp: int = Field(1, gt=0)

    max_ticks: int = Field(240, ge=1)
    win_bonus: float = 5.0
    loss_penalty: float = 5.0
    timeout_penalty: float = 0.0
    damage_dealt_reward_per_hp: float = 1.0
    damage_taken_penalty_per_hp: float = 0.5
    spawn_jitter_m: float = Field(2.0, ge=0)

    @model_validator(mode="after")
    def _check_invariants(self):
        violations = []
        if not self.gun_range_m > self.bomb_range_m:
            violations.append(
                f"gun_range_m > bomb_range_m violated ({self.gun_range_m} <= {self.bomb_range_m})"
            )
        if not self.bomb_damage_hp > self.gun_damage_hp:
            violations.append(
                f"bomb_damage_hp > gun_damage_hp violated ({self.bomb_damage_hp} <= {self.gun_damage_hp})"
            )
        if not self.red_aim_range_m >= self.red_fire_range_m:
            violations.append(
                f"red_aim_range_m >= red_fire_range_m violated ({self.red_aim_range_m} < {self.red_fire_range_m})"
            )
        if self.spawn_jitter_m * 2 >= self.arena_size_m:
            violations.append("spawn_jitter_m must be smaller than half of arena_size_m")
        else:
            # closest possible spawn: anchor pulled toward the center by the full jitter
            closest = (self.arena_size_m / 2.0 - 2 * self.spawn_jitter_m) * 2**0.5
            if not closest > self.gun_range_m:
                violations.append(
                    f"white spawns must lie beyond gun_range_m from red (closest spawn {closest:.2f} m)"
                )
        if violations:
            raise ValueError("; ".join(violations))
        return self

    @property
    def red_spawn(self):
        half = self.arena_size_m / 2.0
        return (half, half)

    @property
    def white_anchors(self):
        """Opposite corners, inset by the jitter so spawns stay inside the arena."""
        inset = self.spawn_jitter_m
        far = self.arena_size_m - inset
        return ((inset, inset), (far, far))


DEFAULT_ARENA = ArenaConfig()

"""
Plot Export
Trajectory overlays for two policies as CSV, deterministic SVG and interactive HTML
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd
import plotly.graph_objects as go

from arena.world import NUM_AGENTS
from utils.errors import UsageError
from utils.logging_setup import kv

logger = logging.getLogger(__name__)

PLOT_COLUMNS = ["policy", "role", "agent", "tick", "x", "y", "kind", "weapon"]
ROLE_COLORS = {"a": "#E6B800", "b": "#D62728"}
AGENT_STYLES = {0: "-", 1: ":"}
SVG_HASH_SALT = "mmpd-trajectory-plot"


def select_episode(logs, index):
    """
    Pick one logged episode.

    Raises:
        UsageError: If `index` is out of range, listing the available indices
    """
    if not 0 <= index < len(logs):
        available = list(range(len(logs)))
        raise UsageError(f"No episode {index} in trajectory log. Available episode indices: {available}")
    return logs[index]


def trajectory_frame(log, policy, role):
    """One row per path point (spawn included) and one per successful white attack."""
    rows = []
    for agent in range(NUM_AGENTS):
        for tick, (x, y) in enumerate(log.agent_path(agent)):
            rows.append([policy, role, agent, tick, x, y, "path", ""])
    positions = {r.tick: r.positions for r in log.records}
    for tick, event in log.attack_events():
        agent = int(event["shooter"].split("_", 1)[1])
        x, y = positions[tick][agent]
        rows.append([policy, role, agent, tick, x, y, "attack", event["weapon"]])
    return pd.DataFrame(rows, columns=PLOT_COLUMNS)


def _write_svg(frame, path, arena):
    fig, ax = plt.subplots(figsize=(6, 6))
    for (role, agent), group in frame[frame["kind"] == "path"].groupby(["role", "agent"], sort=True):
        policy = group["policy"].iloc[0]
        ax.plot(group["x"], group["y"], color=ROLE_COLORS[role], linestyle=AGENT_STYLES[agent],
                linewidth=1.5, label=f"{policy} agent {agent}")
    red_x, red_y = arena.red_spawn
    for row in frame[frame["kind"] == "attack"].itertuples(index=False):
        ax.plot([row.x, red_x], [row.y, red_y], color="black", linestyle="--", linewidth=0.6)
        ax.plot([row.x], [row.y], marker="x", color=ROLE_COLORS[row.role], markersize=6)
    ax.plot([red_x], [red_y], marker="s", color="#D62728", markersize=9, markeredgecolor="black")
    ax.set_xlim(0, arena.arena_size_m)
    ax.set_ylim(0, arena.arena_size_m)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.legend(loc="upper left", fontsize=7)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _write_html(frame, path, arena):
    fig = go.Figure()
    for (role, agent), group in frame[frame["kind"] == "path"].groupby(["role", "agent"], sort=True):
        fig.add_trace(
            go.Scatter(
                x=group["x"], y=group["y"], mode="lines",
                name=f"{group['policy'].iloc[0]} agent {agent}",
                line={"color": ROLE_COLORS[role], "dash": "solid" if agent == 0 else "dot"},
                hovertext=[f"tick {t}" for t in group["tick"]],
            )
        )
    attacks = frame[frame["kind"] == "attack"]
    if not attacks.empty:
        fig.add_trace(
            go.Scatter(
                x=attacks["x"], y=attacks["y"], mode="markers", name="attacks",
                marker={"symbol": "x", "color": "black"},
                hovertext=[f"{p} agent {a} {w} @ tick {t}" for p, a, w, t in
                           zip(attacks["policy"], attacks["agent"], attacks["weapon"], attacks["tick"])],
            )
        )
    red_x, red_y = arena.red_spawn
    fig.add_trace(go.Scatter(x=[red_x], y=[red_y], mode="markers", name="red",
                             marker={"symbol": "square", "size": 12, "color": "#D62728"}))
    fig.update_layout(
        title="White cube trajectories",
        xaxis={"range": [0, arena.arena_size_m], "title": "x (m)"},
        yaxis={"range": [0, arena.arena_size_m], "title": "y (m)", "scaleanchor": "x"},
        template="plotly_white",
    )
    fig.write_html(path, include_plotlyjs="cdn", full_html=True, div_id="mmpd-trajectories")


def emit_plot_data(episodes, out_dir, stem, arena):
    """
    Write <stem>.csv, <stem>.svg and <stem>.html for one or two policies.

    Args:
        episodes (list): [(policy_id, TrajectoryLog)] for role a, then optionally b
        out_dir (Path): Output directory
        stem (str): File name stem
        arena (ArenaConfig): Arena bounds and red position

    Returns:
        dict: kind -> written path
    """
    if not 1 <= len(episodes) <= 2:
        raise UsageError(f"Plot needs one or two policies, got {len(episodes)}")
    frame = pd.concat(
        [trajectory_frame(log, policy, role) for (policy, log), role in zip(episodes, ("a", "b"))],
        ignore_index=True,
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"csv": out_dir / f"{stem}.csv", "svg": out_dir / f"{stem}.svg", "html": out_dir / f"{stem}.html"}
    frame.to_csv(paths["csv"], index=False, float_format="%.17g")
    _write_svg(frame, paths["svg"], arena)
    _write_html(frame, paths["html"], arena)
    logger.info(kv(event="plot_written", stem=stem, attacks=int((frame["kind"] == "attack").sum()), dir=out_dir))
    return paths

"""Unicycle kinematics, disk communication graphs, and connectivity-preserving
edge selection.

Robot ids are 1-based; vertex i of a graph corresponds to ``positions[i-1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Absolute slack on control-bound checks; planner output can sit on a bound
# up to floating-point error.
_BOUND_SLACK = 1e-9


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    m = float(angle) % (2.0 * math.pi)
    return m if m <= math.pi else m - 2.0 * math.pi


@dataclass(frozen=True)
class Box:
    """Axis-aligned workspace box."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self) -> None:
        low = np.asarray(self.low, dtype=float).ravel()
        high = np.asarray(self.high, dtype=float).ravel()
        if low.shape != high.shape or not np.all(low <= high):
            raise ValueError(f"invalid box: low={low}, high={high}")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    def contains(self, p, tol: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= self.low - tol) and np.all(p <= self.high + tol))

    def clip(self, p) -> np.ndarray:
        return np.clip(np.asarray(p, dtype=float), self.low, self.high)

    def shrink(self, margin: float) -> "Box":
        low = self.low + margin
        high = self.high - margin
        if np.any(low > high):
            raise ValueError(f"margin {margin} exceeds box extent")
        return Box(low, high)


@dataclass(frozen=True)
class RobotState:
    """Pose, velocity, and control bounds of one robot."""

    id: int
    position: np.ndarray      # (2,) [m]
    speed: float              # [m/s]
    heading: float            # [rad], wrapped to (-pi, pi]
    delta_v_max: float        # [m/s]
    delta_theta_max: float    # [rad]

    def __post_init__(self) -> None:
        pos = np.asarray(self.position, dtype=float).ravel()
        if pos.shape != (2,):
            raise ValueError("position must be a 2-vector")
        if not (self.delta_v_max > 0 and self.delta_theta_max > 0):
            raise ValueError("control bounds must be positive")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "heading", wrap_angle(self.heading))
        object.__setattr__(self, "speed", float(self.speed))


@dataclass(frozen=True)
class CommGraph:
    """Undirected disk-connectivity graph over robot positions."""

    num_vertices: int
    edges: frozenset          # unordered id pairs stored as (i, j), i < j
    radius: float

    def __post_init__(self) -> None:
        edges = frozenset(tuple(sorted(e)) for e in self.edges)
        for i, j in edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (1 <= i <= self.num_vertices and 1 <= j <= self.num_vertices):
                raise ValueError(f"edge ({i},{j}) outside vertex range")
        object.__setattr__(self, "edges", edges)

    def has_edge(self, i: int, j: int) -> bool:
        return tuple(sorted((i, j))) in self.edges

    def neighbors(self, i: int) -> tuple:
        return tuple(sorted(
            b if a == i else a for a, b in self.edges if i in (a, b)
        ))


def build_graph(positions, radius: float) -> CommGraph:
    """Connect every pair at Euclidean distance <= radius (boundary inclusive)."""
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    m = pos.shape[0]
    if m < 1 or radius <= 0:
        raise ValueError("need at least one robot and a positive radius")
    edges = set()
    for a in range(m):
        for b in range(a + 1, m):
            if np.linalg.norm(pos[a] - pos[b]) <= radius:
                edges.add((a + 1, b + 1))
    return CommGraph(m, frozenset(edges), float(radius))


def is_connected(g: CommGraph) -> bool:
    """True iff the graph has a single connected component."""
    if g.num_vertices <= 1:
        return True
    seen = {1}
    stack = [1]
    while stack:
        v = stack.pop()
        for w in g.neighbors(v):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.num_vertices


def preserve_set(i: int, g: CommGraph, positions) -> set:
    """Neighbors of robot i whose edges must stay within radius next step.

    A neighbor j is dropped only when some relay among i's other neighbors is
    adjacent to j and strictly closer than ||p_i - p_j|| to both endpoints;
    exact ties never prune, which keeps the kept sets symmetric.
    """
    if not 1 <= i <= g.num_vertices:
        raise ValueError(f"robot {i} not in graph with {g.num_vertices} vertices")
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    if pos.shape[0] != g.num_vertices:
        raise ValueError("positions must cover every vertex")
    kept = set()
    nbrs = g.neighbors(i)
    for j in nbrs:
        d_ij = np.linalg.norm(pos[i - 1] - pos[j - 1])
        keep = True
        for relay in nbrs:
            if relay == j or not g.has_edge(relay, j):
                continue
            d_ir = np.linalg.norm(pos[i - 1] - pos[relay - 1])
            d_jr = np.linalg.norm(pos[j - 1] - pos[relay - 1])
            if d_ir < d_ij and d_jr < d_ij:
                keep = False
                break
        if keep:
            kept.add(j)
    return kept


def step_dynamics(s: RobotState, dv: float, dtheta: float, tau: float) -> RobotState:
    """Apply one bounded control step: update speed and heading, then integrate."""
    if abs(dv) > s.delta_v_max + _BOUND_SLACK:
        raise ValueError(f"|dv|={abs(dv):.6g} exceeds bound {s.delta_v_max}")
    if abs(dtheta) > s.delta_theta_max + _BOUND_SLACK:
        raise ValueError(f"|dtheta|={abs(dtheta):.6g} exceeds bound {s.delta_theta_max}")
    speed = s.speed + dv
    heading = wrap_angle(s.heading + dtheta)
    position = s.position + tau * speed * np.array([math.cos(heading), math.sin(heading)])
    return RobotState(s.id, position, speed, heading, s.delta_v_max, s.delta_theta_max)


def linearize(s: RobotState, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """First-order dynamics matrices at the robot's current speed and heading."""
    a = np.eye(2)
    c, sn = math.cos(s.heading), math.sin(s.heading)
    b = tau * np.array([[c, -s.speed * sn], [sn, s.speed * c]])
    return a, b


def control_toward(s: RobotState, target, tau: float) -> tuple[float, float]:
    """Bounded (dv, dtheta) steering the true dynamics toward a waypoint.

    Inverts the unicycle step exactly when the required turn and speed change
    fit inside the bounds; otherwise clamps.  Reversing is preferred over
    turns beyond pi/2.
    """
    d = np.asarray(target, dtype=float) - s.position
    dist = float(np.linalg.norm(d))
    if dist < 1e-12:
        dv = float(np.clip(-s.speed, -s.delta_v_max, s.delta_v_max))
        return dv, 0.0
    psi = math.atan2(d[1], d[0])
    fwd_turn = wrap_angle(psi - s.heading)
    rev_turn = wrap_angle(psi + math.pi - s.heading)
    if abs(fwd_turn) <= abs(rev_turn):
        turn, target_speed = fwd_turn, dist / tau
    else:
        turn, target_speed = rev_turn, -dist / tau
    dtheta = float(np.clip(turn, -s.delta_theta_max, s.delta_theta_max))
    dv = float(np.clip(target_speed - s.speed, -s.delta_v_max, s.delta_v_max))
    return dv, dtheta

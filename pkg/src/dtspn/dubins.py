"""Closed-form Dubins shortest paths between oriented poses.

A Dubins path for a forward-only vehicle with minimum turning radius rho is
one of six segment words (LSL, RSR, LSR, RSL, RLR, LRL).  This module finds
the minimum-length word for a pose pair, evaluates lengths in bulk for cost
matrices, and samples poses exactly on the path arc.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# Fixed word order; ties in length are broken toward the earlier word.
WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")

# Segment parameters below this are clamped to zero to keep degenerate
# paths from flipping between adjacent words.
SEGMENT_EPS = 1e-9


def normalize_angle(theta: float) -> float:
    """Wrap an angle to [-pi, pi).

    In-range values pass through untouched so normalization is idempotent
    bit-for-bit (serialized poses re-normalize to themselves).
    """
    if -math.pi <= theta < math.pi:
        return theta
    return (theta + math.pi) % TWO_PI - math.pi


def mod2pi(theta):
    return theta % TWO_PI


@dataclass(frozen=True)
class Pose:
    """Planar configuration (x, y, heading).  Heading is kept in [-pi, pi)."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class DubinsPath:
    """A three-segment Dubins path.

    segment_params holds the turn angle in radians for L/R segments and the
    length in meters for the S segment, in word order.
    """

    start: Pose
    word: str
    segment_params: tuple[float, float, float]
    rho: float


def _apply_segment(x, y, theta, kind, param, rho):
    """Advance a pose along one exact segment (no chord approximation)."""
    if kind == "S":
        return x + param * math.cos(theta), y + param * math.sin(theta), theta
    if kind == "L":
        t2 = theta + param
        return (x + rho * (math.sin(t2) - math.sin(theta)),
                y - rho * (math.cos(t2) - math.cos(theta)),
                t2)
    # right turn: heading decreases
    t2 = theta - param
    return (x - rho * (math.sin(t2) - math.sin(theta)),
            y + rho * (math.cos(t2) - math.cos(theta)),
            t2)


def _word_params(word, alpha, beta, d):
    """Normalized segment parameters (t, p, q) for one word, or None.

    Inputs are the standard normalized coordinates: d is the pose distance
    over rho, alpha/beta the start/goal headings relative to the connecting
    line.  Curve parameters are angles; for CSC words p is the straight
    length over rho.
    """
    sa, ca = math.sin(alpha), math.cos(alpha)
    sb, cb = math.sin(beta), math.cos(beta)
    cab = math.cos(alpha - beta)

    if word == "LSL":
        p_sq = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb)
        if p_sq < 0.0:
            return None
        tmp = math.atan2(cb - ca, d + sa - sb)
        return mod2pi(tmp - alpha), math.sqrt(max(p_sq, 0.0)), mod2pi(beta - tmp)
    if word == "RSR":
        p_sq = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa)
        if p_sq < 0.0:
            return None
        tmp = math.atan2(ca - cb, d - sa + sb)
        return mod2pi(alpha - tmp), math.sqrt(max(p_sq, 0.0)), mod2pi(tmp - beta)
    if word == "LSR":
        p_sq = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb)
        if p_sq < 0.0:
            return None
        p = math.sqrt(p_sq)
        tmp = math.atan2(-ca - cb, d + sa + sb) - math.atan2(-2.0, p)
        return mod2pi(tmp - alpha), p, mod2pi(tmp - beta)
    if word == "RSL":
        p_sq = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb)
        if p_sq < 0.0:
            return None
        p = math.sqrt(p_sq)
        tmp = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
        return mod2pi(alpha - tmp), p, mod2pi(beta - tmp)
    if word == "RLR":
        tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0
        if abs(tmp) > 1.0:
            return None
        p = mod2pi(TWO_PI - math.acos(tmp))
        t = mod2pi(alpha - math.atan2(ca - cb, d - sa + sb) + p / 2.0)
        return t, p, mod2pi(alpha - beta - t + p)
    if word == "LRL":
        tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0
        if abs(tmp) > 1.0:
            return None
        p = mod2pi(TWO_PI - math.acos(tmp))
        t = mod2pi(-alpha + math.atan2(cb - ca, d + sa - sb) + p / 2.0)
        return t, p, mod2pi(beta - alpha - t + p)
    raise ValueError(f"unknown word {word!r}")


def _normalized_frame(start: Pose, end: Pose, rho: float):
    dx = end.x - start.x
    dy = end.y - start.y
    big_d = math.hypot(dx, dy)
    line = math.atan2(dy, dx)
    return mod2pi(start.theta - line), mod2pi(end.theta - line), big_d / rho


def shortest_path(start: Pose, end: Pose, rho: float) -> DubinsPath:
    """Minimum-length Dubins path from start to end with turning radius rho.

    Every pose pair admits at least one word, so this always succeeds.
    Near-zero segments are clamped to exactly zero; length ties within 1e-9
    go to the earlier word in WORDS.
    """
    if rho <= 0.0:
        raise ValueError("turning radius must be positive")
    alpha, beta, d = _normalized_frame(start, end, rho)
    best = None
    best_cost = math.inf
    for word in WORDS:
        params = _word_params(word, alpha, beta, d)
        if params is None:
            continue
        cost = params[0] + params[1] + params[2]
        if cost < best_cost - 1e-9:
            best = (word, params)
            best_cost = cost
    word, (t, p, q) = best
    t = 0.0 if t < SEGMENT_EPS else t
    q = 0.0 if q < SEGMENT_EPS else q
    p = 0.0 if p < SEGMENT_EPS else p
    if word[1] == "S":
        p *= rho
    return DubinsPath(start=start, word=word, segment_params=(t, p, q), rho=rho)


def path_length(path: DubinsPath) -> float:
    """Total arc length: rho times the turn angles plus the straight length."""
    t, p, q = path.segment_params
    if path.word[1] == "S":
        return path.rho * (t + q) + p
    return path.rho * (t + p + q)


def shortest_path_length(start: Pose, end: Pose, rho: float) -> float:
    return path_length(shortest_path(start, end, rho))


def path_endpoint(path: DubinsPath) -> Pose:
    x, y, theta = path.start.x, path.start.y, path.start.theta
    for kind, param in zip(path.word, path.segment_params):
        p = param if kind != "S" else param
        x, y, theta = _apply_segment(x, y, theta, kind, p, path.rho)
    return Pose(x, y, theta)


def _pose_at(path: DubinsPath, s: float) -> Pose:
    """Pose after arc length s along the path."""
    t, p, q = path.segment_params
    lengths = (
        path.rho * t,
        p if path.word[1] == "S" else path.rho * p,
        path.rho * q,
    )
    x, y, theta = path.start.x, path.start.y, path.start.theta
    remaining = s
    for kind, full_param, seg_len in zip(path.word, (t, p, q), lengths):
        if remaining >= seg_len:
            x, y, theta = _apply_segment(x, y, theta, kind, full_param, path.rho)
            remaining -= seg_len
        else:
            frac = remaining / seg_len if seg_len > 0.0 else 0.0
            x, y, theta = _apply_segment(x, y, theta, kind, full_param * frac, path.rho)
            remaining = 0.0
            break
    return Pose(x, y, theta)


def sample_path(path: DubinsPath, spacing: float) -> list[Pose]:
    """Poses exactly on the path at arc-length steps of at most `spacing`.

    The first sample is the start pose and the last the endpoint; samples on
    curve segments sit on the true circle, not on chords.
    """
    if spacing <= 0.0:
        raise ValueError("spacing must be positive")
    total = path_length(path)
    if total <= SEGMENT_EPS:
        return [path.start]
    n = max(1, math.ceil(total / spacing - 1e-12))
    return [_pose_at(path, total * i / n) for i in range(n + 1)]


def _word_params_bulk(alpha, beta, d):
    """Vectorized (t, p, q) per word for arrays of normalized coordinates.

    Returns an array of shape (6,) + alpha.shape holding the normalized path
    cost t+p+q per word, with inf where the word is infeasible.
    """
    sa, ca = np.sin(alpha), np.cos(alpha)
    sb, cb = np.sin(beta), np.cos(beta)
    cab = np.cos(alpha - beta)
    costs = np.full((6,) + np.shape(alpha), np.inf)

    # LSL / RSR are always feasible
    p_sq = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb)
    tmp = np.arctan2(cb - ca, d + sa - sb)
    costs[0] = mod2pi(tmp - alpha) + np.sqrt(np.maximum(p_sq, 0.0)) + mod2pi(beta - tmp)

    p_sq = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa)
    tmp = np.arctan2(ca - cb, d - sa + sb)
    costs[1] = mod2pi(alpha - tmp) + np.sqrt(np.maximum(p_sq, 0.0)) + mod2pi(tmp - beta)

    with np.errstate(invalid="ignore"):
        p_sq = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb)
        ok = p_sq >= 0.0
        p = np.sqrt(np.where(ok, p_sq, np.nan))
        tmp = np.arctan2(-ca - cb, d + sa + sb) - np.arctan2(-2.0, p)
        costs[2] = np.where(ok, mod2pi(tmp - alpha) + p + mod2pi(tmp - beta), np.inf)

        p_sq = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb)
        ok = p_sq >= 0.0
        p = np.sqrt(np.where(ok, p_sq, np.nan))
        tmp = np.arctan2(ca + cb, d - sa - sb) - np.arctan2(2.0, p)
        costs[3] = np.where(ok, mod2pi(alpha - tmp) + p + mod2pi(beta - tmp), np.inf)

        tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0
        ok = np.abs(tmp) <= 1.0
        p = mod2pi(TWO_PI - np.arccos(np.where(ok, tmp, 0.0)))
        t = mod2pi(alpha - np.arctan2(ca - cb, d - sa + sb) + p / 2.0)
        costs[4] = np.where(ok, t + p + mod2pi(alpha - beta - t + p), np.inf)

        tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0
        ok = np.abs(tmp) <= 1.0
        p = mod2pi(TWO_PI - np.arccos(np.where(ok, tmp, 0.0)))
        t = mod2pi(-alpha + np.arctan2(cb - ca, d + sa - sb) + p / 2.0)
        costs[5] = np.where(ok, t + p + mod2pi(beta - alpha - t + p), np.inf)

    return costs


def pose_array(poses) -> np.ndarray:
    """Stack Pose objects (or raw (x, y, theta) rows) into an (n, 3) array."""
    seq = list(poses)
    if seq and isinstance(seq[0], Pose):
        return np.array([(p.x, p.y, p.theta) for p in seq], dtype=float)
    return np.asarray(seq, dtype=float).reshape(len(seq), 3)


def length_matrix(from_poses, to_poses, rho: float) -> np.ndarray:
    """Dubins shortest-path lengths between two pose sets, shape (n, m).

    Accepts sequences of Pose or arrays of rows (x, y, theta).
    """
    a = pose_array(from_poses)
    b = pose_array(to_poses)
    dx = b[None, :, 0] - a[:, None, 0]
    dy = b[None, :, 1] - a[:, None, 1]
    big_d = np.hypot(dx, dy)
    line = np.arctan2(dy, dx)
    alpha = mod2pi(a[:, None, 2] - line)
    beta = mod2pi(b[None, :, 2] - line)
    costs = _word_params_bulk(alpha, beta, big_d / rho)
    return rho * costs.min(axis=0)

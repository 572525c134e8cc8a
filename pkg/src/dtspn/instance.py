"""Problem instances: seeded generation and a line-oriented text format."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .dubins import Pose

DEFAULT_MAP = (800.0, 800.0)
DEFAULT_SENSE = 58.0
DEFAULT_TURN = 30.0


class InstanceFormatError(ValueError):
    """Raised for malformed instance files; carries the offending line."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class Instance:
    map_width: float
    map_height: float
    tasks: Tuple[Tuple[float, float], ...]
    r_sense: float
    turn_radius: float
    start: Pose
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(tuple(t) for t in self.tasks))
        validate(self)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    def task_array(self) -> np.ndarray:
        return np.asarray(self.tasks, dtype=float)


def validate(instance: Instance) -> None:
    if instance.map_width <= 0 or instance.map_height <= 0:
        raise ValueError(f"nonpositive map dimensions "
                         f"{instance.map_width} x {instance.map_height}")
    if instance.r_sense <= 0:
        raise ValueError(f"r_sense must be positive, got {instance.r_sense}")
    if instance.turn_radius <= 0:
        raise ValueError(f"turn_radius must be positive, got {instance.turn_radius}")
    if not instance.tasks:
        raise ValueError("instance has no tasks")
    for i, (x, y) in enumerate(instance.tasks):
        if not (0.0 <= x <= instance.map_width and 0.0 <= y <= instance.map_height):
            raise ValueError(f"task {i} at ({x}, {y}) lies outside the map")


def default_start(map_width: float, map_height: float) -> Pose:
    """Start on the lower interior edge, mid-width, heading 0.

    The heading is a placeholder; episode resets overwrite it with the first
    expert waypoint's heading when an expert path is available.
    """
    return Pose(0.5 * map_width, 0.05 * map_height, 0.0)


def generate(n_tasks: int, seed: int,
             map_size: Tuple[float, float] = DEFAULT_MAP,
             r_sense: float = DEFAULT_SENSE,
             turn_radius: float = DEFAULT_TURN,
             start: Optional[Pose] = None) -> Instance:
    """Uniform i.i.d. task positions from a counter-based generator, so the
    same (seed, config) reproduces the same instance on any platform."""
    if n_tasks < 1:
        raise ValueError(f"n_tasks must be >= 1, got {n_tasks}")
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    w, h = float(map_size[0]), float(map_size[1])
    if w <= 0 or h <= 0:
        raise ValueError(f"nonpositive map dimensions {w} x {h}")
    rng = np.random.Generator(np.random.Philox(key=seed))
    pts = rng.uniform((0.0, 0.0), (w, h), size=(n_tasks, 2))
    if start is None:
        start = default_start(w, h)
    return Instance(map_width=w, map_height=h,
                    tasks=tuple(map(tuple, pts.tolist())),
                    r_sense=float(r_sense), turn_radius=float(turn_radius),
                    start=start, seed=int(seed))


def save(instance: Instance, path) -> None:
    lines = ["dtspn-instance v1",
             f"map {instance.map_width!r} {instance.map_height!r}",
             f"sense {instance.r_sense!r}",
             f"turn {instance.turn_radius!r}",
             f"start {instance.start.x!r} {instance.start.y!r} {instance.start.theta!r}",
             f"seed {instance.seed}"]
    for x, y in instance.tasks:
        lines.append(f"task {x!r} {y!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _floats(parts, count, key, line_no):
    if len(parts) != count:
        raise InstanceFormatError(
            f"field '{key}' expects {count} numbers, got {len(parts)}", line_no)
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise InstanceFormatError(
            f"field '{key}' has a non-numeric value: {parts}", line_no)


def load(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != "dtspn-instance v1":
        raise InstanceFormatError("missing 'dtspn-instance v1' header", line=1)
    fields = {}
    tasks = []
    for line_no, line in enumerate(raw[1:], start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, *parts = line.split()
        if key == "map":
            fields["map"] = _floats(parts, 2, "map", line_no)
        elif key == "sense":
            fields["sense"] = _floats(parts, 1, "sense", line_no)[0]
        elif key == "turn":
            fields["turn"] = _floats(parts, 1, "turn", line_no)[0]
        elif key == "start":
            fields["start"] = _floats(parts, 3, "start", line_no)
        elif key == "seed":
            try:
                fields["seed"] = int(parts[0]) if parts else None
            except ValueError:
                fields["seed"] = None
            if fields["seed"] is None:
                raise InstanceFormatError(f"field 'seed' is not an integer: {parts}",
                                          line_no)
        elif key == "task":
            tasks.append(tuple(_floats(parts, 2, "task", line_no)))
        else:
            raise InstanceFormatError(f"unknown field '{key}'", line_no)
    for key in ("map", "sense", "turn", "start", "seed"):
        if key not in fields:
            raise InstanceFormatError(f"missing field '{key}'")
    if not tasks:
        raise InstanceFormatError("missing field 'task' (no tasks)")
    sx, sy, sth = fields["start"]
    try:
        return Instance(map_width=fields["map"][0], map_height=fields["map"][1],
                        tasks=tuple(tasks), r_sense=fields["sense"],
                        turn_radius=fields["turn"], start=Pose(sx, sy, sth),
                        seed=fields["seed"])
    except ValueError as exc:
        raise InstanceFormatError(str(exc))

"""Arena geometry, the light field, and kinematic motion with blocking."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class LightSource:
    position: tuple[float, float]
    power: float = 1.0
    r0: float = 1.0

    def __post_init__(self) -> None:
        if self.power < 0 or not self.r0 > 0:
            raise ValueError("light power must be >= 0 and falloff radius r0 > 0")


@dataclass(frozen=True)
class Obstacle:
    center: tuple[float, float]
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("obstacle radius must be positive")

    def contains(self, x: float, y: float) -> bool:
        return math.hypot(x - self.center[0], y - self.center[1]) < self.radius


@dataclass(frozen=True)
class Environment:
    arena: tuple[float, float, float, float] = (-5.0, -5.0, 5.0, 5.0)
    home: tuple[float, float] = (0.0, 0.0)
    lights: tuple[LightSource, ...] = field(default_factory=tuple)
    obstacles: tuple[Obstacle, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        xmin, ymin, xmax, ymax = self.arena
        values = [*self.arena, *self.home]
        for light in self.lights:
            values += [*light.position, light.power, light.r0]
        for ob in self.obstacles:
            values += [*ob.center, ob.radius]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("environment geometry must be finite")
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("arena bounds must satisfy xmin < xmax and ymin < ymax")
        if not self.inside_arena(*self.home):
            raise ValueError("home must lie inside the arena")
        for ob in self.obstacles:
            cx, cy = ob.center
            if not (xmin <= cx - ob.radius and cx + ob.radius <= xmax
                    and ymin <= cy - ob.radius and cy + ob.radius <= ymax):
                raise ValueError(f"obstacle at {ob.center} extends outside the arena")

    def inside_arena(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.arena
        return xmin <= x <= xmax and ymin <= y <= ymax

    def free(self, x: float, y: float) -> bool:
        return self.inside_arena(x, y) and not any(ob.contains(x, y) for ob in self.obstacles)


def intensity_at(env: Environment, position: tuple[float, float]) -> float:
    """Superposed light intensity, each source falling off as power / (1 + (d/r0)^2)."""
    x, y = position
    total = 0.0
    for light in env.lights:
        d2 = (x - light.position[0]) ** 2 + (y - light.position[1]) ** 2
        total += light.power / (1.0 + d2 / (light.r0 * light.r0))
    return total


def intensity_gradient(env: Environment, position: tuple[float, float]) -> tuple[float, float]:
    x, y = position
    gx = gy = 0.0
    for light in env.lights:
        dx, dy = x - light.position[0], y - light.position[1]
        r2 = light.r0 * light.r0
        q = 1.0 + (dx * dx + dy * dy) / r2
        scale = -2.0 * light.power / (r2 * q * q)
        gx += scale * dx
        gy += scale * dy
    return gx, gy


def motion_step(position: tuple[float, float], theta: float, speed: float, dt: float,
                env: Environment) -> tuple[tuple[float, float], bool]:
    """Advance ``speed * dt`` along ``theta``.

    Returns the new position and whether the move was blocked. A blocked move
    (into an obstacle or out of the arena) leaves the position unchanged.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if speed == 0:
        return position, False
    x = position[0] + speed * dt * math.cos(theta)
    y = position[1] + speed * dt * math.sin(theta)
    if env.free(x, y):
        return (x, y), False
    return position, True

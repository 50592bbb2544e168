"""Planar geometry primitives: angle wrapping, poses, axis-aligned rectangles.

Frame convention (fixed for the whole package): x right, y up, theta
counter-clockwise from +x, wrapped to (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    wrapped = math.pi - np.mod(math.pi - np.asarray(theta, dtype=float), TWO_PI)
    if np.isscalar(theta) or np.ndim(theta) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class Pose2D:
    """Robot pose in the map frame; theta is wrapped on construction."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in meters. Degenerate (zero-extent) rects are legal
    for text boxes; semantic objects and rooms require positive extents."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return max(0.0, self.width) * max(0.0, self.height)

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def contains(self, x: float, y: float) -> bool:
        """Boundary-inclusive point containment."""
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def intersection_area(self, other: "Rect") -> float:
        w = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        h = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        if w <= 0.0 or h <= 0.0:
            return 0.0
        return w * h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @staticmethod
    def from_seq(seq) -> "Rect":
        x0, y0, x1, y1 = (float(v) for v in seq)
        return Rect(x0, y0, x1, y1)

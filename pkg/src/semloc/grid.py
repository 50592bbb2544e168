"""Occupancy grid: tri-state cells, world/cell conversions, DDA raycasting.

Cells are stored row-major in a (height, width) uint8 array; the world origin
is the corner of cell (0, 0). UNKNOWN cells are transparent to rays: floor
plans have unexplored regions and a ray crossing them must not produce a
phantom hit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfBoundsError
from .geometry import Pose2D

FREE = 0
OCCUPIED = 1
UNKNOWN = 2


@dataclass(eq=False)
class OccupancyGrid:
    resolution: float
    origin: tuple[float, float]
    cells: np.ndarray  # (height, width) uint8, values FREE/OCCUPIED/UNKNOWN

    _free_rc: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __eq__(self, other):
        if not isinstance(other, OccupancyGrid):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and self.origin == other.origin
            and np.array_equal(self.cells, other.cells)
        )

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=np.uint8)
        if cells.ndim != 2:
            raise ValueError("cells must be a 2D (height, width) array")
        self.cells = cells
        self.origin = (float(self.origin[0]), float(self.origin[1]))
        self.resolution = float(self.resolution)

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    def in_bounds(self, col: int, row: int) -> bool:
        return 0 <= col < self.width and 0 <= row < self.height

    def world_to_cell(self, x: float, y: float):
        """Cell index (col, row) containing the point, or None when outside.

        The floor convention puts a point lying exactly on a cell boundary
        into the higher-index cell.
        """
        col = math.floor((x - self.origin[0]) / self.resolution)
        row = math.floor((y - self.origin[1]) / self.resolution)
        if not self.in_bounds(col, row):
            return None
        return (col, row)

    def cell_center(self, col: int, row: int) -> tuple[float, float]:
        return (
            self.origin[0] + (col + 0.5) * self.resolution,
            self.origin[1] + (row + 0.5) * self.resolution,
        )

    def cell_value(self, col: int, row: int) -> int:
        return int(self.cells[row, col])

    def is_free_at(self, x: float, y: float) -> bool:
        idx = self.world_to_cell(x, y)
        return idx is not None and self.cells[idx[1], idx[0]] == FREE

    def free_cells(self) -> np.ndarray:
        """(k, 2) array of (row, col) indices of FREE cells, cached."""
        if self._free_rc is None:
            self._free_rc = np.argwhere(self.cells == FREE)
        return self._free_rc

    def raycast(self, pose: Pose2D, angle_offset: float, max_range: float) -> float:
        """Distance to the first OCCUPIED cell along the ray, else max_range.

        Traverses cells with the Amanatides-Woo DDA so no crossed cell is
        skipped; at exact corner crossings both adjacent cells are tested.
        Raises OutOfBoundsError when the start pose lies outside the grid.
        """
        start = self.world_to_cell(pose.x, pose.y)
        if start is None:
            raise OutOfBoundsError(f"raycast start ({pose.x:.3f}, {pose.y:.3f}) is outside the grid")
        col, row = start
        cells = self.cells
        if cells[row, col] == OCCUPIED:
            return 0.0

        a = pose.theta + angle_offset
        dx = math.cos(a)
        dy = math.sin(a)
        res = self.resolution
        ox, oy = self.origin

        if dx > 0.0:
            step_x = 1
            t_max_x = ((col + 1) * res + ox - pose.x) / dx
            t_delta_x = res / dx
        elif dx < 0.0:
            step_x = -1
            t_max_x = (col * res + ox - pose.x) / dx
            t_delta_x = -res / dx
        else:
            step_x = 0
            t_max_x = math.inf
            t_delta_x = math.inf
        if dy > 0.0:
            step_y = 1
            t_max_y = ((row + 1) * res + oy - pose.y) / dy
            t_delta_y = res / dy
        elif dy < 0.0:
            step_y = -1
            t_max_y = (row * res + oy - pose.y) / dy
            t_delta_y = -res / dy
        else:
            step_y = 0
            t_max_y = math.inf
            t_delta_y = math.inf

        width, height = self.width, self.height
        while True:
            if t_max_x < t_max_y:
                t = t_max_x
                if t > max_range:
                    return max_range
                col += step_x
                t_max_x += t_delta_x
                if not (0 <= col < width):
                    return max_range
                if cells[row, col] == OCCUPIED:
                    return t
            elif t_max_y < t_max_x:
                t = t_max_y
                if t > max_range:
                    return max_range
                row += step_y
                t_max_y += t_delta_y
                if not (0 <= row < height):
                    return max_range
                if cells[row, col] == OCCUPIED:
                    return t
            else:
                # Exact corner: advance both axes, testing the two cells the
                # ray grazes so diagonal wall junctions cannot be slipped through.
                t = t_max_x
                if t > max_range or math.isinf(t):
                    return max_range
                col += step_x
                t_max_x += t_delta_x
                if 0 <= col < width and cells[row, col] == OCCUPIED:
                    return t
                row += step_y
                t_max_y += t_delta_y
                if not (0 <= col < width and 0 <= row < height):
                    return max_range
                if cells[row, col] == OCCUPIED:
                    return t


def fill_rect(grid: OccupancyGrid, x_min, y_min, x_max, y_max, value: int) -> None:
    """Set every cell whose center lies inside the rect (world meters).

    Map construction helper used by the fixture worlds and tests; grids are
    treated as immutable once a map is assembled.
    """
    res = grid.resolution
    ox, oy = grid.origin
    c0 = max(0, math.ceil((x_min - ox) / res - 0.5))
    c1 = min(grid.width - 1, math.floor((x_max - ox) / res - 0.5))
    r0 = max(0, math.ceil((y_min - oy) / res - 0.5))
    r1 = min(grid.height - 1, math.floor((y_max - oy) / res - 0.5))
    if c1 < c0 or r1 < r0:
        return
    grid.cells[r0 : r1 + 1, c0 : c1 + 1] = value
    grid._free_rc = None

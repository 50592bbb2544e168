import numpy as np
import pytest

from semloc.geometry import Rect
from semloc.grid import FREE, OCCUPIED, UNKNOWN, OccupancyGrid, fill_rect
from semloc.semmap import AbstractSemanticMap, Room, SemanticObject, TextBox
from semloc.simulator import generate_trajectory, simulate_log
from semloc.worlds import build_office, build_twin_corridor, parse_scenario


@pytest.fixture
def three_room_map() -> AbstractSemanticMap:
    """Small handcrafted map: 6 x 4 m, two offices and a kitchen off a
    corridor, two objects, one text box."""
    cells = np.full((40, 60), UNKNOWN, dtype=np.uint8)
    grid = OccupancyGrid(resolution=0.1, origin=(0.0, 0.0), cells=cells)
    fill_rect(grid, 0.2, 0.2, 5.8, 3.8, OCCUPIED)
    fill_rect(grid, 0.4, 0.4, 5.6, 1.4, FREE)  # corridor
    fill_rect(grid, 0.4, 1.6, 2.0, 3.6, FREE)  # room a
    fill_rect(grid, 2.4, 1.6, 4.0, 3.6, FREE)  # room b
    fill_rect(grid, 4.4, 1.6, 5.6, 3.6, FREE)  # room c
    fill_rect(grid, 0.8, 1.4, 1.6, 1.6, FREE)  # doors
    fill_rect(grid, 2.8, 1.4, 3.6, 1.6, FREE)
    fill_rect(grid, 4.6, 1.4, 5.4, 1.6, FREE)
    objects = (
        SemanticObject("o1", "desk", Rect(0.6, 2.8, 1.4, 3.4)),
        SemanticObject("o2", "sink", Rect(2.6, 3.0, 3.2, 3.4)),
    )
    rooms = (
        Room("ra", (Rect(0.4, 1.6, 2.0, 3.6),), "office", "101", ("o1",)),
        Room("rb", (Rect(2.4, 1.6, 4.0, 3.6),), "kitchen", "102", ("o2",)),
        Room("rc", (Rect(4.4, 1.6, 5.6, 3.6),), "office", None, ()),
    )
    boxes = (TextBox("101", Rect(0.8, 0.6, 1.6, 1.2), support_count=0),)
    return AbstractSemanticMap(grid=grid, objects=objects, rooms=rooms, text_boxes=boxes)


@pytest.fixture(scope="session")
def twin_world():
    return build_twin_corridor()


@pytest.fixture(scope="session")
def office_world():
    return build_office()


class LogCache:
    """Simulate each (scenario, seed) log once per test session."""

    def __init__(self):
        self._worlds = {"twin": build_twin_corridor(), "office": build_office()}
        self._trajectories = {}
        self._logs = {}

    def world(self, name):
        return self._worlds[name][0]

    def scenario(self, name):
        return self._worlds[name][1]

    def trajectory(self, name):
        if name not in self._trajectories:
            world, scen = self._worlds[name]
            self._trajectories[name] = generate_trajectory(
                scen["waypoints"], scen["speed"], scen["turn_rate"], scen["dt"], grid=world.semmap.grid
            )
        return self._trajectories[name]

    def log(self, name, seed):
        key = (name, seed)
        if key not in self._logs:
            world, scen = self._worlds[name]
            scan_spec, _, noise = parse_scenario(scen)
            self._logs[key] = simulate_log(world, self.trajectory(name), noise, scan_spec, seed=seed)
        return self._logs[key]

    def gt(self, name):
        return self.trajectory(name)


@pytest.fixture(scope="session")
def log_cache():
    return LogCache()

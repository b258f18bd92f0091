"""Single-room gridworld whose task is a set of subtasks on a fixed workflow.

Subtasks: PickupKey -> OpenDoor, and PickupBall + OpenBox -> DropBall; the
goal is always part of the task and is counted as one more subtask. Each
completed subtask pays 1/n (n = chosen subtasks + goal), reaching the goal
with every other subtask done ends the episode with +1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

SUBTASKS = ("PickupKey", "OpenDoor", "PickupBall", "OpenBox", "DropBall")
REQUIRES = {
    "PickupKey": (),
    "OpenDoor": ("PickupKey",),
    "PickupBall": (),
    "OpenBox": (),
    "DropBall": ("PickupBall", "OpenBox"),
}
ACTIONS = ("left", "right", "forward", "pickup", "drop", "toggle")
# objects on the grid; "door_open" and "box_open" are states of door/box
CHANNELS = ("wall", "key", "door", "door_open", "ball", "box", "box_open", "goal", "agent")
DIRS = ((1, 0), (0, 1), (-1, 0), (0, -1))  # east, south, west, north


class CapacityError(ValueError):
    """Room too small for the requested objects."""


class DesignError(ValueError):
    """Subtask set that breaks the workflow's dependency closure."""


def closure(subtasks):
    """Smallest superset of ``subtasks`` closed under the dependency relation."""
    out = set(subtasks)
    stack = list(out)
    while stack:
        s = stack.pop()
        for dep in REQUIRES[s]:
            if dep not in out:
                out.add(dep)
                stack.append(dep)
    return out


@dataclass(frozen=True)
class GridDesign:
    """A set of subtasks (order-free, stored in workflow order); the goal is implicit."""

    subtasks: tuple = ()

    def __post_init__(self):
        names = set(self.subtasks)
        unknown = names - set(SUBTASKS) - {"Goal"}
        if unknown:
            raise DesignError(f"unknown subtasks {sorted(unknown)}")
        names.discard("Goal")
        missing = closure(names) - names
        if missing:
            raise DesignError(f"subtasks {sorted(names)} need {sorted(missing)} as well")
        object.__setattr__(self, "subtasks", tuple(s for s in SUBTASKS if s in names))

    @classmethod
    def closed(cls, subtasks):
        """Design from any subset, adding whatever the workflow requires."""
        return cls(tuple(closure(set(subtasks) - {"Goal"})))

    @property
    def n_rewarded(self):
        return len(self.subtasks) + 1

    def to_dict(self):
        return {"subtasks": list(self.subtasks) + ["Goal"]}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(s for s in d["subtasks"] if s != "Goal"))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _objects_for(design):
    s = set(design.subtasks)
    objs = ["goal"]
    if "PickupKey" in s:
        objs.append("key")
    if "OpenDoor" in s:
        objs.append("door")
    if "PickupBall" in s:
        objs.append("ball")
    if "OpenBox" in s:
        objs.append("box")
    return objs


@dataclass
class GridState:
    width: int
    height: int
    agent_pos: tuple
    agent_dir: int
    objects: dict  # (x, y) -> object name
    carried: str | None
    subtasks: tuple
    completed: frozenset = frozenset()
    steps: int = 0
    max_steps: int = 100
    kappa: float = 0.01
    done: bool = False
    success: bool = False
    potential_total: float = 0.0
    history: tuple = field(default_factory=tuple)

    @property
    def n_rewarded(self):
        return len(self.subtasks) + 1


def default_horizon(design):
    return 20 + 20 * len(design.subtasks)


def build_grid(design, rng, width=8, height=8, max_steps=None, kappa=0.01):
    """Place the design's objects and the agent on distinct random interior cells."""
    if not isinstance(design, GridDesign):
        design = GridDesign(tuple(design))
    objs = _objects_for(design)
    cells = [(x, y) for x in range(1, width - 1) for y in range(1, height - 1)]
    if len(objs) + 1 > len(cells):
        raise CapacityError(f"{len(objs)} objects and the agent do not fit in a {width}x{height} room")
    picks = rng.permutation(len(cells))[:len(objs) + 1]
    objects = {cells[int(picks[j])]: name for j, name in enumerate(objs)}
    agent = cells[int(picks[len(objs)])]
    return GridState(width, height, agent, int(rng.integers(0, 4)), objects, None, design.subtasks,
                     max_steps=default_horizon(design) if max_steps is None else max_steps, kappa=kappa)


def _wall(state, pos):
    x, y = pos
    return x <= 0 or y <= 0 or x >= state.width - 1 or y >= state.height - 1


def _complete(state, name, objects, carried, pos=None):
    """Mark ``name`` complete if it is part of the task and its prerequisites are done."""
    if name not in state.subtasks or name in state.completed:
        return state.completed, 0.0
    if any(dep not in state.completed for dep in REQUIRES[name]):
        return state.completed, 0.0
    return state.completed | {name}, 1.0 / state.n_rewarded


def grid_step(state, action):
    """Apply one action; returns ``(new_state, reward, done)``. The input state is not modified."""
    if state.done:
        raise RuntimeError("grid_step on a finished episode")
    if isinstance(action, (int, np.integer)):
        action = ACTIONS[action]
    objects = dict(state.objects)
    carried = state.carried
    pos, d = state.agent_pos, state.agent_dir
    completed = state.completed
    potential = 0.0
    front = (pos[0] + DIRS[d][0], pos[1] + DIRS[d][1])
    ahead = objects.get(front)
    if action == "left":
        d = (d - 1) % 4
    elif action == "right":
        d = (d + 1) % 4
    elif action == "forward":
        if not _wall(state, front) and ahead in (None, "goal", "door_open"):
            pos = front
    elif action == "pickup":
        if carried is None and ahead in ("key", "ball"):
            carried = ahead
            del objects[front]
            completed, potential = _complete(state, "PickupKey" if ahead == "key" else "PickupBall",
                                             objects, carried)
    elif action == "drop":
        if carried is not None and not _wall(state, front):
            if ahead is None:
                objects[front] = carried
                carried = None
            elif ahead == "box_open" and carried == "ball":
                carried = None
                completed, potential = _complete(state, "DropBall", objects, carried)
    elif action == "toggle":
        if ahead == "door" and carried == "key":
            objects[front] = "door_open"
            carried = None
            completed, potential = _complete(state, "OpenDoor", objects, carried)
        elif ahead == "box":
            objects[front] = "box_open"
            completed, potential = _complete(state, "OpenBox", objects, carried)
    else:
        raise ValueError(f"unknown action {action!r}")
    steps = state.steps + 1
    done = success = False
    terminal = 0.0
    if objects.get(pos) == "goal" and all(s in completed for s in state.subtasks):
        done = success = True
        potential += 1.0 / state.n_rewarded
        terminal = 1.0
    elif steps >= state.max_steps:
        done, terminal = True, -1.0
    reward = potential - state.kappa + terminal
    new = replace(state, agent_pos=pos, agent_dir=d, objects=objects, carried=carried, completed=completed,
                  steps=steps, done=done, success=success, potential_total=state.potential_total + potential,
                  history=state.history + tuple(sorted(completed - state.completed)))
    return new, reward, done


def grid_observation(state):
    """(width x height x channels) one-hot grid and an agent feature vector."""
    grid = np.zeros((state.width, state.height, len(CHANNELS)))
    grid[0, :, 0] = grid[-1, :, 0] = grid[:, 0, 0] = grid[:, -1, 0] = 1.0
    for (x, y), name in state.objects.items():
        grid[x, y, CHANNELS.index(name)] = 1.0
    grid[state.agent_pos[0], state.agent_pos[1], CHANNELS.index("agent")] = 1.0
    feats = np.zeros(2 + 4 + 2)
    feats[0] = state.agent_pos[0] / state.width
    feats[1] = state.agent_pos[1] / state.height
    feats[2 + state.agent_dir] = 1.0
    if state.carried == "key":
        feats[6] = 1.0
    elif state.carried == "ball":
        feats[7] = 1.0
    return grid, feats


def workflow_respected(history):
    """True if every completion in ``history`` came after its prerequisites."""
    done = set()
    for s in history:
        if any(dep not in done for dep in REQUIRES.get(s, ())):
            return False
        done.add(s)
    return True


# -- scripted solver ------------------------------------------------------------------

def _bfs(state, start, targets):
    """Shortest path of cells from ``start`` to a cell adjacent to one of ``targets``."""
    from collections import deque
    passable = lambda c: not _wall(state, c) and state.objects.get(c) in (None, "goal", "door_open")  # noqa: E731
    q = deque([start])
    prev = {start: None}
    while q:
        c = q.popleft()
        for dx, dy in DIRS:
            n = (c[0] + dx, c[1] + dy)
            if n in targets:
                path = [c]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1], n
            if n not in prev and passable(n):
                prev[n] = c
                q.append(n)
    return None, None


def _turn_to(d, want):
    acts = []
    while d != want:
        acts.append("right")
        d = (d + 1) % 4
    return acts


def _walk(state, path, face):
    acts, d = [], state.agent_dir
    cells = list(path) + [face]
    for a, b in zip(cells[:-1], cells[1:]):
        want = DIRS.index((b[0] - a[0], b[1] - a[1]))
        acts += _turn_to(d, want)
        d = want
        if b != face:
            acts.append("forward")
    return acts


def oracle_plan(state):
    """Next few actions of a scripted solver (replanned every call)."""
    s = set(state.subtasks)
    c = state.completed
    find = lambda name: {p for p, o in state.objects.items() if o == name}  # noqa: E731
    if "PickupKey" in s and "PickupKey" not in c:
        goal, tail = find("key"), ["pickup"]
        if state.carried is not None:
            return _drop_anywhere(state)
    elif "OpenDoor" in s and "OpenDoor" not in c:
        goal, tail = find("door"), ["toggle"]
    elif "OpenBox" in s and "OpenBox" not in c:
        goal, tail = find("box"), ["toggle"]
    elif "PickupBall" in s and "PickupBall" not in c:
        if state.carried is not None:
            return _drop_anywhere(state)
        goal, tail = find("ball"), ["pickup"]
    elif "DropBall" in s and "DropBall" not in c:
        goal, tail = find("box_open"), ["drop"]
    else:
        goal, tail = find("goal"), None
    path, target = _bfs(state, state.agent_pos, goal)
    if path is None:
        return ["left"]
    acts = _walk(state, path, target)
    if tail is None:
        return acts + ["forward"]
    return acts + tail


def _drop_anywhere(state):
    for d in range(4):
        f = (state.agent_pos[0] + DIRS[d][0], state.agent_pos[1] + DIRS[d][1])
        if not _wall(state, f) and f not in state.objects:
            return _turn_to(state.agent_dir, d) + ["drop"]
    return ["forward"]


def run_oracle(state):
    """Play the scripted solver to termination; returns the final state."""
    while not state.done:
        for a in oracle_plan(state):
            state, _, done = grid_step(state, a)
            if done:
                break
    return state

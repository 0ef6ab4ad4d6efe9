"""Systems under test: g maps a domain point to a trajectory.

Three built-in trajectory generators reproduce, at desk scale, the
qualitative robustness landscapes of a reaching task (positive plateau with
a dead-zone arc near the robot base and unreachable table edges), a
pick-and-place task over cube mass (flat success plateau, staircase of
grasp-slip discontinuities, flat failure), and a puck-sliding task (overshoot
region, stable left region, and a localized failure pocket). They are
closed-form trajectory generators, not closed-form robustness fields, so the
full trace -> monitor -> score pipeline is exercised end to end.

External systems attach through a line-delimited JSON protocol over a child
process's standard streams; see ExternalBlackBox.
"""

from __future__ import annotations

import json
import math
import queue
import subprocess
import threading

import numpy as np

from .design import Domain, Uniform
from .stl import Trace, parse_formula

__all__ = [
    "BlackBoxError",
    "ProtocolError",
    "BlackBoxTimeout",
    "BlackBoxCrash",
    "BuiltinBlackBox",
    "ExternalBlackBox",
    "Scenario",
    "scenario",
    "reach_arc_trace",
    "pick_mass_trace",
    "slide_shifted_trace",
    "PROTOCOL_VERSION",
]

PROTOCOL_VERSION = 1


class BlackBoxError(Exception):
    """Base class for system-under-test failures."""


class ProtocolError(BlackBoxError):
    """External process replied with something that is not a valid trace."""


class BlackBoxTimeout(BlackBoxError):
    """External process did not reply within the timeout."""


class BlackBoxCrash(BlackBoxError):
    """External process exited or closed its stream mid-session."""


# ---------------------------------------------------------------------------
# Reach: gripper approaches a cube on the table


REACH_BASE = np.array([0.0, 0.0, 0.30])
REACH_CUBE_Z = 0.02
REACH_SPEED = 1.1  # m/s
REACH_DT = 0.05
REACH_STEPS = 24
REACH_DEADZONE = (0.18, 0.30)  # annulus radii around the base
REACH_EDGE_MARGIN = 0.10
REACH_X = (-0.6, 0.6)
REACH_Y = (0.1, 0.9)


def _reach_progress_cap(cx, cy):
    # Fraction of the path the planner completes. Ramps keep the induced
    # robustness continuous in the cube position.
    cap = 1.0
    edge_depth = max(
        (REACH_X[0] + REACH_EDGE_MARGIN) - cx,
        cx - (REACH_X[1] - REACH_EDGE_MARGIN),
        (REACH_Y[0] + REACH_EDGE_MARGIN) - cy,
        cy - (REACH_Y[1] - REACH_EDGE_MARGIN),
    )
    if edge_depth > 0:
        cap = min(cap, 1.0 - min(1.0, edge_depth / REACH_EDGE_MARGIN))
    lo, hi = REACH_DEADZONE
    rho = math.hypot(cx, cy)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    dz_depth = 1.0 - abs(rho - mid) / half
    if dz_depth > 0:
        cap = min(cap, 1.0 - 0.6 * dz_depth)
    return cap


def reach_arc_trace(x):
    """Gripper trace for a cube at table position x = (cx, cy).

    Inside the dead-zone annulus the planner stalls partway (worst at the
    annulus centerline); toward the table edges plans degrade until the
    gripper cannot move at all; otherwise the gripper moves straight at the
    cube at constant speed.
    """
    cx, cy = float(x[0]), float(x[1])
    cube = np.array([cx, cy, REACH_CUBE_Z])
    progress_cap = _reach_progress_cap(cx, cy)

    direction = cube - REACH_BASE
    total = float(np.linalg.norm(direction))
    direction = direction / total
    t = np.arange(REACH_STEPS) * REACH_DT
    travelled = np.minimum(REACH_SPEED * t, progress_cap * total)
    gripper = REACH_BASE[None, :] + travelled[:, None] * direction[None, :]
    return Trace(
        {
            "r.x": gripper[:, 0],
            "r.y": gripper[:, 1],
            "r.z": gripper[:, 2],
            "c.x": np.full(REACH_STEPS, cube[0]),
            "c.y": np.full(REACH_STEPS, cube[1]),
            "c.z": np.full(REACH_STEPS, cube[2]),
        },
        REACH_DT,
    )


# ---------------------------------------------------------------------------
# Pick-and-place: carry a cube of mass m from one container to the target


PICK_DT = 0.1
PICK_STEPS = 33
PICK_START = np.array([-0.3, 0.0, 0.02])
PICK_TARGET = np.array([0.3, 0.0, 0.02])
PICK_CARRY_Z = 0.02
PICK_GRASP_T = 0.3
PICK_ARRIVE_T = 1.0
# grasp-slip bands: (mass lo, mass hi, drop stage at lo, stage at hi);
# alternating slip stages make adjacent bands skid into the target or miss it
# by very different margins, producing the robustness staircase; the gentle
# within-band drift keeps the field sloped between the jumps
PICK_SLIP_BANDS = [
    (35.0, 40.0, 0.800, 0.830),
    (40.0, 45.0, 0.550, 0.510),
    (45.0, 50.0, 0.800, 0.830),
    (50.0, 55.0, 0.300, 0.260),
    (55.0, 60.0, 0.120, 0.080),
]
PICK_SKID_BASE = 0.12  # dropped cube skids roughly this far onward
PICK_SKID_WOBBLE = 0.015
PICK_SKID_PERIOD = 4.0  # grams


def _pick_skid(mass):
    # mass-dependent skid: smooth fine structure between the jumps
    return PICK_SKID_BASE + PICK_SKID_WOBBLE * math.sin(
        2.0 * math.pi * (mass - 35.0) / PICK_SKID_PERIOD
    )


def _pick_carry_z(mass):
    # heavier cubes sag a little in the grasp; keeps the success plateau
    # approximately (not exactly) constant
    return PICK_CARRY_Z + 0.004 * math.sin(2.0 * math.pi * (mass - 20.0) / 7.0)


def _pick_outcome(mass):
    if mass < PICK_SLIP_BANDS[0][0]:
        return None
    for lo, hi, s_lo, s_hi in PICK_SLIP_BANDS:
        if lo <= mass < hi:
            return s_lo + (s_hi - s_lo) * (mass - lo) / (hi - lo)
    return "never-lifts"


def pick_mass_trace(x):
    """Pick-and-place trace for cube mass x = (m,) in grams.

    Light cubes ride the gripper to the target; mid masses slip at a
    mass-band-dependent stage of the carry and skid onward, some bands into
    the target and some well short of it; heavy cubes never leave the
    container. The 'held' channel is +1 while grasped, -1 else.
    """
    mass = float(np.atleast_1d(x)[0])
    stage = _pick_outcome(mass)
    t = np.arange(PICK_STEPS) * PICK_DT

    carry = np.clip((t - PICK_GRASP_T) / (PICK_ARRIVE_T - PICK_GRASP_T), 0.0, 1.0)
    gripper = PICK_START[None, :] + carry[:, None] * (PICK_TARGET - PICK_START)
    gripper[:, 2] = np.where(t >= PICK_GRASP_T, _pick_carry_z(mass), PICK_START[2])

    held = np.where(t >= PICK_GRASP_T, 1.0, -1.0)
    cube = np.empty((PICK_STEPS, 3))

    if stage == "never-lifts":
        held[:] = -1.0
        cube[:] = PICK_START
        # the failed grasp still nudges the cube by a hair
        cube[:, 0] += 0.0005 * math.sin(2.0 * math.pi * mass / 5.0)
    elif stage is None:
        cube[:] = gripper
        cube[t < PICK_GRASP_T] = PICK_START
    else:
        drop_t = PICK_GRASP_T + stage * (PICK_ARRIVE_T - PICK_GRASP_T)
        drop_xy = PICK_START + stage * (PICK_TARGET - PICK_START)
        skid_dir = (PICK_TARGET - PICK_START) / np.linalg.norm(
            PICK_TARGET - PICK_START
        )
        rest = drop_xy + _pick_skid(mass) * skid_dir
        rest[2] = 0.0
        for i, ti in enumerate(t):
            if ti < PICK_GRASP_T:
                cube[i] = PICK_START
            elif ti < drop_t:
                cube[i] = gripper[i]
            else:
                cube[i] = rest
        held = np.where((t >= PICK_GRASP_T) & (t < drop_t), 1.0, -1.0)

    return Trace(
        {
            "r.x": gripper[:, 0],
            "r.y": gripper[:, 1],
            "r.z": gripper[:, 2],
            "c.x": cube[:, 0],
            "c.y": cube[:, 1],
            "c.z": cube[:, 2],
            "t.x": np.full(PICK_STEPS, PICK_TARGET[0]),
            "t.y": np.full(PICK_STEPS, PICK_TARGET[1]),
            "t.z": np.full(PICK_STEPS, PICK_TARGET[2]),
            "held": held,
        },
        PICK_DT,
    )


# ---------------------------------------------------------------------------
# Slide: knock a puck to a goal on a slippery table


SLIDE_DT = 0.1
SLIDE_STEPS = 42
SLIDE_PUCK = np.array([0.0, 0.0])
SLIDE_X = (-0.5, 0.5)
SLIDE_Y = (0.1, 0.9)
SLIDE_RIGHT_EDGE = 0.15  # goals right of this overshoot off the table
SLIDE_POCKET_CENTER = np.array([0.0, 0.7])
SLIDE_POCKET_RADII = np.array([0.08, 0.10])


def _in_pocket(goal):
    rel = (goal - SLIDE_POCKET_CENTER) / SLIDE_POCKET_RADII
    return float(rel @ rel) < 1.0


def slide_shifted_trace(x):
    """Puck trace for a goal at x = (gx, gy) on the low-friction table.

    Right-of-table goals overshoot and never settle; the controller corrects
    overshoot on the left and parks the puck at the goal, except in a pocket
    near the puck-aligned far corner where the correction cannot catch up.
    """
    goal = np.asarray(x, dtype=float)[:2]
    dist = float(np.linalg.norm(goal - SLIDE_PUCK))
    direction = (goal - SLIDE_PUCK) / max(dist, 1e-12)
    t = np.arange(SLIDE_STEPS) * SLIDE_DT
    t_hit = 0.2 + 0.8 * dist  # first pass over the goal

    if goal[0] > SLIDE_RIGHT_EDGE:
        # no post-hit correction; the final overshoot grows with depth into
        # the slippery right region, so robustness decays continuously
        over = 0.02 + 2.0 * (goal[0] - SLIDE_RIGHT_EDGE)
        settle = None
    elif _in_pocket(goal):
        over = 0.35
        settle = None
    else:
        over = 0.15
        settle = t_hit + 0.8

    positions = np.empty((SLIDE_STEPS, 2))
    for i, ti in enumerate(t):
        if ti <= t_hit:
            s = dist * (ti / t_hit) if t_hit > 0 else dist
        elif settle is None:
            s = dist + over * min(1.0, (ti - t_hit) / 0.4)
        elif ti <= t_hit + 0.4:
            s = dist + over * ((ti - t_hit) / 0.4)
        elif ti < settle:
            s = dist + over * (1.0 - (ti - (t_hit + 0.4)) / (settle - t_hit - 0.4))
        else:
            s = dist
        positions[i] = SLIDE_PUCK + s * direction

    return Trace(
        {
            "p.x": positions[:, 0],
            "p.y": positions[:, 1],
            "g.x": np.full(SLIDE_STEPS, goal[0]),
            "g.y": np.full(SLIDE_STEPS, goal[1]),
        },
        SLIDE_DT,
    )


# ---------------------------------------------------------------------------
# Black-box wrappers


class BuiltinBlackBox:
    """Deterministic built-in generator; (x, seed) fully determine the trace."""

    GENERATORS = {
        "reach_arc": reach_arc_trace,
        "pick_mass": pick_mass_trace,
        "slide_shifted": slide_shifted_trace,
    }

    def __init__(self, name, seed=0):
        if name not in self.GENERATORS:
            raise BlackBoxError(
                f"unknown builtin {name!r}; available: {sorted(self.GENERATORS)}"
            )
        self.name = name
        self.seed = seed
        self._fn = self.GENERATORS[name]

    def evaluate(self, x):
        return self._fn(np.asarray(x, dtype=float))

    def describe(self):
        return {"kind": "builtin", "name": self.name, "seed": self.seed}

    def close(self):
        pass


class ExternalBlackBox:
    """System under test in a child process, spoken to over JSON lines.

    On startup the child must write a handshake line {"v": 1}. Each request
    is one line {"id": n, "x": [..]}; each reply is one line
    {"id": n, "dt": float, "channels": {"name": [..], ...}} or
    {"id": n, "error": "..."}. One request is in flight at a time; callers
    must serialize access per instance.
    """

    def __init__(self, command, timeout=30.0):
        self.command = list(command)
        self.timeout = float(timeout)
        self._id = 0
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )
        self._lines = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        hello = self._read_line()
        try:
            hello = json.loads(hello)
        except json.JSONDecodeError:
            raise ProtocolError(f"bad handshake line: {hello!r}") from None
        if hello.get("v") != PROTOCOL_VERSION:
            raise ProtocolError(
                f"unsupported protocol version {hello.get('v')!r}"
            )

    def _pump(self):
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF marker

    def _read_line(self):
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise BlackBoxTimeout(
                f"no reply within {self.timeout}s from {self.command[0]}"
            ) from None
        if line is None:
            raise BlackBoxCrash(
                f"{self.command[0]} closed its output "
                f"(exit code {self._proc.poll()})"
            )
        return line

    def evaluate(self, x):
        self._id += 1
        request = {"id": self._id, "x": [float(v) for v in np.atleast_1d(x)]}
        try:
            self._proc.stdin.write(json.dumps(request) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError):
            raise BlackBoxCrash(f"{self.command[0]} closed its input") from None
        raw = self._read_line()
        try:
            reply = json.loads(raw)
        except json.JSONDecodeError:
            raise ProtocolError(f"unparseable reply: {raw[:200]!r}") from None
        if reply.get("id") != self._id:
            raise ProtocolError(
                f"reply id {reply.get('id')!r} does not match request {self._id}"
            )
        if "error" in reply:
            raise BlackBoxError(f"system reported: {reply['error']}")
        if "dt" not in reply or "channels" not in reply:
            raise ProtocolError("reply missing 'dt' or 'channels'")
        channels = reply["channels"]
        if not isinstance(channels, dict) or not channels:
            raise ProtocolError("'channels' must be a non-empty object")
        arrays = {}
        for name, vals in channels.items():
            a = np.asarray(vals, dtype=float)
            if not np.all(np.isfinite(a)):
                raise ProtocolError(f"channel {name!r} contains non-finite values")
            arrays[name] = a
        try:
            return Trace(arrays, reply["dt"])
        except (ValueError, TypeError) as exc:
            raise ProtocolError(f"reply is not a valid trace: {exc}") from None

    def describe(self):
        return {
            "kind": "external",
            "command": self.command,
            "timeout": self.timeout,
        }

    def close(self):
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# ---------------------------------------------------------------------------
# Benchmark scenarios: formula + domain + system, bundled


class Scenario:
    def __init__(self, name, formula_text, domain, blackbox):
        self.name = name
        self.formula_text = formula_text
        self.formula = parse_formula(formula_text)
        self.domain = domain
        self.blackbox = blackbox


REACH_FORMULA = (
    "ev[0,1] (clamp(norm(r.x - c.x, r.y - c.y, r.z - c.z), 0, 0.5) <= -0.8)"
)
PICK_FORMULA = (
    "((clamp(held, -1, 1) <= 0)"
    " | (clamp(norm(r.x - c.x, r.y - c.y, r.z - c.z), 0, 0.5) <= -0.6))"
    " until[0,2] (clamp(norm(c.x - t.x, c.y - t.y, c.z - t.z), 0, 0.5) <= -0.8)"
)
SLIDE_FORMULA = "ev[0,2] (alw[0,2] (clamp(norm(p.x - g.x, p.y - g.y), 0, 1) <= -0.8))"


def scenario(name, seed=0):
    """Bundle one of the built-in benchmark scenarios by name."""
    if name == "reach_arc":
        dom = Domain(
            [Uniform(*REACH_X), Uniform(*REACH_Y)],
            names=["cube_x", "cube_y"],
            units=["m", "m"],
        )
        return Scenario(name, REACH_FORMULA, dom, BuiltinBlackBox(name, seed))
    if name == "pick_mass":
        dom = Domain([Uniform(20.0, 70.0)], names=["mass"], units=["g"])
        return Scenario(name, PICK_FORMULA, dom, BuiltinBlackBox(name, seed))
    if name == "slide_shifted":
        dom = Domain(
            [Uniform(*SLIDE_X), Uniform(*SLIDE_Y)],
            names=["goal_x", "goal_y"],
            units=["m", "m"],
        )
        return Scenario(name, SLIDE_FORMULA, dom, BuiltinBlackBox(name, seed))
    raise BlackBoxError(f"unknown scenario {name!r}")

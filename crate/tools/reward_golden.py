#!/usr/bin/env python3
"""Regenerates the reward golden fixture.

Writes `reward_golden_input.json` (the `fame reward --input` file) and
`reward_golden_expected.json` (raw value per term) under
crates/core/tests/fixtures. The raw values are computed here straight from
the closed forms, independently of the Rust evaluator.

    python3 tools/reward_golden.py
"""

import json
import math
import pathlib
import re

ROOT = pathlib.Path(__file__).resolve().parent.parent
MODEL = ROOT / "crates/core/assets/h12_like.toml"
OUT = ROOT / "crates/core/tests/fixtures"

# Shaping defaults.
FEET_D = (0.2, 0.45)
KNEE_D = (0.2, 0.45)
STAND_STILL_SPEED = 0.05
CONTACT_FORCE = 5.0
ACTION_BOUND = 1.0
SOFT_POS = 0.975
SOFT_VEL = 1.0
SOFT_TAU = 0.95
KNEE_REF = 0.5
FORCE_CAP = 900.0
LANDING_OFFSET = 50.0
SHARPNESS = 4.0
STUMBLE_RATIO = 3.0


def joints():
    text = MODEL.read_text()
    out = []
    for block in text.split("[[joints]]")[1:]:
        name = re.search(r'^name = "([^"]+)"', block, re.M).group(1)
        lim = re.search(
            r"limits = \{ lower = ([-\d.e]+), upper = ([-\d.e]+), effort = ([-\d.e]+), velocity = ([-\d.e]+) \}",
            block,
        )
        out.append((name, *map(float, lim.groups())))
    return out


def main():
    js = joints()
    n = len(js)
    names = [j[0] for j in js]
    lower = names[15:]
    hips = [names.index(x) for x in lower if "hip" in x]
    knees = [names.index(x) for x in lower if "knee" in x]
    ankles = [names.index(x) for x in lower if "ankle" in x]

    q_default = [0.01 * ((k % 5) - 2) for k in range(n)]
    q = [q_default[k] + 0.05 * math.sin(k + 1) for k in range(n)]
    # push a few joints past their soft limits
    q[names.index("left_knee")] = js[names.index("left_knee")][2] - 0.01
    q[names.index("right_ankle_pitch")] = js[names.index("right_ankle_pitch")][1] + 0.005
    q[names.index("torso")] = 2.33
    qd = [0.3 * math.cos(k) for k in range(n)]
    qd[3] = js[3][4] + 0.5
    qd[20] = -(js[20][4] + 1.25)
    qdd = [2.0 * ((k % 3) - 1) + 0.5 for k in range(n)]
    q_target = [q[k] + 0.02 * ((k % 4) - 1.5) for k in range(n)]
    tau = [5.0 * math.sin(0.7 * k) for k in range(n)]
    tau[18] = js[18][3] * 0.97
    tau[9] = -js[9][3]
    action = [0.4 * ((k % 7) - 3) for k in range(12)]
    last = [0.1 * k - 0.5 for k in range(12)]
    last2 = [0.05 * (6 - k) for k in range(12)]

    feet = [
        {"force": [10.0, 5.0, 400.0], "height": 0.01, "vel_xy": [0.1, 0.2], "vel_z": -0.3, "lateral": [0.15, 0.14, 0.145]},
        {"force": [3000.0, 0.0, 600.0], "height": 0.03, "vel_xy": [0.0, -0.1], "vel_z": 0.2, "lateral": [-0.12, -0.13, -0.1]},
    ]
    inp = {
        "h_base": 0.9,
        "h_cmd": 1.0,
        "base_lin_vel": [0.1, -0.2, 0.3],
        "ang_vel_xy": [0.4, -0.5],
        "projected_gravity_xy": [0.05, -0.1],
        "q": q,
        "qd": qd,
        "qdd": qdd,
        "q_target": q_target,
        "tau": tau,
        "action": action,
        "last_action": last,
        "last_last_action": last2,
        "feet": feet,
        "knee_lateral": [0.16, -0.14],
        "command_is_zero": True,
    }

    sq = lambda v: sum(x * x for x in v)
    var = lambda v: sum((x - sum(v) / len(v)) ** 2 for x in v) / len(v)
    ramp = lambda d, lo, hi: min(max((d - lo) / (hi - lo), 0.0), 1.0)
    contact = [f["force"][2] > CONTACT_FORCE for f in feet]
    seps = [abs(a - b) for a, b in zip(feet[0]["lateral"], feet[1]["lateral"])]
    mean_knee = sum(q[j] for j in knees) / len(knees)

    def pos_violation(k):
        lo, hi = js[k][1], js[k][2]
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo) * SOFT_POS
        return max(mid - half - q[k], 0.0) + max(q[k] - (mid + half), 0.0)

    raw = {
        "height_tracking": math.exp(-SHARPNESS * abs(0.9 - 1.0)),
        "lin_vel_z": 0.3**2,
        "ang_vel_xy": 0.4**2 + 0.5**2,
        "orientation": 0.05**2 + 0.1**2,
        "stand_still": 1.0 if math.sqrt(sq(inp["base_lin_vel"])) > STAND_STILL_SPEED else 0.0,
        "hip_deviation": sum((q[j] - q_default[j]) ** 2 for j in hips),
        "ankle_deviation": sum((q[j] - q_default[j]) ** 2 for j in ankles),
        "knee_deviation": abs((mean_knee - KNEE_REF) * (0.9 - 1.0)),
        "joint_tracking": sum((q_target[k] - q[k]) ** 2 for k in range(n)),
        "dof_acc": sq(qdd),
        "feet_lateral_distance": ramp(sum(seps) / len(seps), *FEET_D),
        "knee_lateral_distance": ramp(abs(0.16 - -0.14), *KNEE_D),
        "feet_parallel": var(seps),
        "feet_ground_parallel": var([f["height"] for f in feet]),
        "feet_slip": sum(math.hypot(*f["vel_xy"]) for f, c in zip(feet, contact) if c),
        "feet_stumble": 1.0 if any(math.hypot(f["force"][0], f["force"][1]) > STUMBLE_RATIO * f["force"][2] for f in feet) else 0.0,
        "feet_contact_forces": sum(max(math.sqrt(sq(f["force"])) - FORCE_CAP, 0.0) for f in feet),
        "contact_momentum": sum(min(f["vel_z"], 0.0) * (f["force"][2] - LANDING_OFFSET) for f, c in zip(feet, contact) if c),
        "no_fly": 1.0 if sum(contact) == 1 else 0.0,
        "action_rate": sum((a - b) ** 2 for a, b in zip(action, last)),
        "action_smoothness": sum((a - 2 * b + c) ** 2 for a, b, c in zip(action, last, last2)),
        "joint_power": sum(abs(v * t) for v, t in zip(qd, tau)),
        "torques": sq(tau),
        "action_vanish": sum(max(abs(a) - ACTION_BOUND, 0.0) ** 2 for a in action) / 12,
        "dof_pos_limits": sum(pos_violation(k) for k in range(n)),
        "dof_vel": sq(qd),
        "dof_vel_limits": sum(max(abs(qd[k]) - js[k][4] * SOFT_VEL, 0.0) for k in range(n)),
        "torque_limits": sum(max(abs(tau[k]) - js[k][3] * SOFT_TAU, 0.0) for k in range(n)),
    }

    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "reward_golden_input.json").write_text(json.dumps({"q_default": q_default, "input": inp}, indent=1) + "\n")
    (OUT / "reward_golden_expected.json").write_text(json.dumps(raw, indent=1) + "\n")


if __name__ == "__main__":
    main()

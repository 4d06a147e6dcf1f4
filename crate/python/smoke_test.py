"""Smoke test for the bests_sim extension module.

Build first:  cargo build --release -p bests-py
The script looks for the compiled library under target/ and loads it as
`bests_sim`, so maturin is not required.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    try:
        import bests_sim  # installed wheel

        return bests_sim
    except ImportError:
        pass
    suffix = {"darwin": "dylib", "win32": "dll"}.get(sys.platform, "so")
    prefix = "" if sys.platform == "win32" else "lib"
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / f"{prefix}bests_sim.{suffix}"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("bests_sim", str(lib))
            spec = importlib.util.spec_from_loader("bests_sim", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("bests_sim library not found; run `cargo build -p bests-py` first")


def main():
    sim = load_module()

    seg = sim.Segment(30.0, 0.5, 60.0)
    k, phi, saturated = seg.half_bend(0.0)
    assert (k, phi, saturated) == (30.0, 0.0, False)
    assert math.isclose(seg.saturation_curvature, math.pi / 15.0)
    k, phi, _ = seg.half_bend(0.02)
    assert abs(k - 29.85963603870582) < 1e-9 and abs(phi - 0.0748590050817626) < 1e-9

    assert sim.mode_of_phase(0.0) == "walk"
    assert sim.mode_of_phase(2.5) == "turn_left"
    assert sim.mode_of_phase(3.5) == "turn_right"
    assert sim.twist_fraction("B", 0.0) == 0.0 and sim.twist_fraction("A", 0.0) == 1.0

    robot = sim.Robot()
    rho, eta = robot.equilibrium("A", math.pi / 2)
    assert rho > 0.0 and 0.0 < eta < 1.0
    contacts = dict(robot.leg_contacts(0.3))
    assert len(contacts) == 10

    calib = robot.calibrate()
    assert math.isclose(calib.stride_walk_cm, 4.9)
    rows = calib.simulate("walk", 8)
    t, x, y, heading, mode = rows[-1]
    assert math.isclose(x / t, 1.75, rel_tol=0.01), x / t

    assert robot.trajectory_csv("walk") == robot.trajectory_csv("walk")
    o_rows = robot.simulate("o")
    print(f"O-path: {o_rows[-1][0]:.1f} s, heading {math.degrees(o_rows[-1][3]):.1f} deg")
    print("smoke test passed")


if __name__ == "__main__":
    main()

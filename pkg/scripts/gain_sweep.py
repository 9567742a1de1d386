"""Settling times of the acceleration law on the double-integrator harness.

Sweeps K (settling of |e_sys|) and C (settling of |e| in free space) over
repeated doublings and prints one row per gain value.
"""
import argparse
from dataclasses import replace

import numpy as np

from motionforce.harness import settling_time, simulate
from motionforce.model import ControllerConfig


def sweep(gain, values, signal, x0, duration, dt):
    rows = []
    for v in values:
        config = replace(ControllerConfig(), **{gain: (v, v, v)})
        log = simulate(config, x0, dt=dt, duration=duration)
        rows.append((v, settling_time(log.t, np.linalg.norm(getattr(log, signal), axis=1))))
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--doublings", type=int, default=3)
    parser.add_argument("--offset", type=float, default=1e-4, help="initial position error in m")
    parser.add_argument("--dt", type=float, default=1e-4)
    parser.add_argument("--duration", type=float, default=0.2)
    args = parser.parse_args()
    x0 = [args.offset, -args.offset, 0.5 * args.offset]
    scales = 2.0 ** np.arange(args.doublings + 1)
    for gain, base, signal in (("gain_k", 350.0, "e_sys"), ("gain_c", 150.0, "e")):
        print(f"{gain}: 2% settling of |{signal}|")
        for v, t in sweep(gain, base * scales, signal, x0, args.duration, args.dt):
            print(f"  {v:8.1f}  {t * 1e3:7.2f} ms")


if __name__ == "__main__":
    main()

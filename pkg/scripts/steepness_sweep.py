"""Adiabatic and instantaneous 99% boundaries versus tanh ramp steepness.

Usage: python3 scripts/steepness_sweep.py [--steepness 3 4 5] [--tilts 0.02 0.05 0.1 0.3]
"""
import argparse

from floqubit.initialization import BoundaryNotFound, min_ramp_time

# (search range, resolution) in ns
SEARCH = {"adiabatic": ((1.0, 3000.0), 0.5), "instantaneous": ((0.1, 3000.0), 0.002)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--steepness", type=float, nargs="+", default=[3.0, 4.0, 5.0])
    ap.add_argument("--tilts", type=float, nargs="+", default=[0.02, 0.05, 0.1, 0.3])
    ap.add_argument("--threshold", type=float, default=0.99)
    args = ap.parse_args()
    print("kind,steepness,tilt,T_ns,T_times_tilt")
    for kind, (search, resolution) in SEARCH.items():
        for k in args.steepness:
            for tilt in args.tilts:
                try:
                    t = min_ramp_time(kind, tilt, args.threshold, search, resolution, steepness=k)
                except BoundaryNotFound as err:
                    print(f"{kind},{k},{tilt},nan,nan  # {err}")
                    continue
                print(f"{kind},{k},{tilt},{t:.4g},{t * tilt:.4g}", flush=True)


if __name__ == "__main__":
    main()

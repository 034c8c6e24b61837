"""Circuit readout: Eq.-13-shape fit at the default truncation and the effect of doubling each mode.

Slow (several minutes per truncation). Usage: python3 scripts/circuit_convergence.py
"""
import time

import numpy as np

from floqubit.readout.circuit import KerrCircuit, fit_longitudinal, simulate_circuit_readout


def main():
    base = KerrCircuit()
    times = np.linspace(0.0, 5.0 / base.kappa, 101)
    t0 = time.perf_counter()
    ref = simulate_circuit_readout(base, times)
    amp, k, rms = fit_longitudinal(times, ref.D)
    print(f"{base.truncation}: {time.perf_counter() - t0:.0f} s, fit A={amp:.4f} kappa_eff={k:.4f} "
          f"(kappa={base.kappa:.4f}), rms/A={rms / amp:.2%}, "
          f"predicted two-level {ref.params['d_inf_predicted']:.4f}, Floquet {ref.params['d_inf_floquet']:.4f}")
    for i in range(3):
        trunc = list(base.truncation)
        trunc[i] *= 2
        t0 = time.perf_counter()
        tr = simulate_circuit_readout(base.with_truncation(trunc), times)
        move = np.max(np.abs(tr.D - ref.D)) / amp
        print(f"{tuple(trunc)}: {time.perf_counter() - t0:.0f} s, max |dD|/A = {move:.2e}", flush=True)


if __name__ == "__main__":
    main()

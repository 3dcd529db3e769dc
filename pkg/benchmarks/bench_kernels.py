"""Compare the numba-compiled and interpreted orbit engine.

    python benchmarks/bench_kernels.py [--repeat 3]

Each backend runs in its own interpreter because the switch is read at
import time (FASTSLOW_EPI_NO_NUMBA).
"""
import argparse
import json
import os
import subprocess
import sys

CASES = r"""
import json, sys, time
from fastslow_epi import ModelParams, EventSpec, IntegratorConfig, integrate, poincare_return
from fastslow_epi._accel import backend_name

repeat = int(sys.argv[1])
cases = {
    "sir_layer": lambda: integrate("SIR", ModelParams(260, 17), (0.9, 1e-4), layer=True,
                                   events=[EventSpec.i_crossing(1e-12, -1, True)]),
    "sir_return_eps1e-3": lambda: poincare_return("SIR", ModelParams(2, 1, xi=1, epsilon=1e-3),
                                                  EventSpec.i_crossing(1e-6, 1), (0.9, 1e-6)),
    "sirws_cycle_t500": lambda: integrate("SIRWS", ModelParams(260, 17, xi=0.01, kappa=0.1, nu=10),
                                          (0.9, 1e-3, 0.0495), config=IntegratorConfig(horizon=500.0)),
}
t = time.perf_counter(); [c() for c in cases.values()]; warm = time.perf_counter() - t
out = {"backend": backend_name(), "warmup_s": warm}
for name, fn in cases.items():
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter(); fn(); best = min(best, time.perf_counter() - t)
    out[name] = best
print(json.dumps(out))
"""


def run(no_numba, repeat):
    env = dict(os.environ)
    env["FASTSLOW_EPI_NO_NUMBA"] = "1" if no_numba else "0"
    res = subprocess.run([sys.executable, "-c", CASES, str(repeat)], env=env, check=True,
                         capture_output=True, text=True)
    return json.loads(res.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    fast, slow = run(False, args.repeat), run(True, args.repeat)
    names = [k for k in fast if k not in ("backend", "warmup_s")]
    print(f"{'case':<22}{'numba [s]':>12}{'python [s]':>12}{'speedup':>10}")
    for k in names:
        print(f"{k:<22}{fast[k]:>12.4g}{slow[k]:>12.4g}{slow[k] / fast[k]:>10.1f}")
    print(f"numba first-call (compile) time: {fast['warmup_s']:.2f} s")


if __name__ == "__main__":
    main()

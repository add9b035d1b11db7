"""Compare the compiled metric kernels against the pure-Python fallback.

Usage:  python3 benchmarks/bench_kernels.py [events] [calls]

Times the fading-sum scan that dominates simulation runtime (it runs several
times per record over the whole event history), at a few log sizes, and a
full 1000-record simulation under each backend.
"""

import random
import sys
import time
from array import array

from colabel._kernels import pure

try:
    from colabel._kernels import _fast
except ImportError:
    _fast = None


def make_columns(n, seed=0):
    rng = random.Random(seed)
    ts = array("q", range(n))
    out = array("q", (rng.choice((-1, 0, 1)) for _ in range(n)))
    final = array("q", (rng.randrange(2) for _ in range(n)))
    is_auto = array("B", (rng.random() < 0.3 for _ in range(n)))
    return ts, out, final, is_auto


def time_kernel(impl, cols, calls):
    ts, out, final, is_auto = cols
    n = len(ts)
    start = time.perf_counter()
    acc = 0.0
    for i in range(calls):
        num, den_label, den_all = impl.temporal_label_sums(
            ts, out, final, is_auto, i % 2, False, 0.98, n + i
        )
        acc += num
    elapsed = time.perf_counter() - start
    return elapsed, acc


def time_simulation(pure_only: bool) -> float:
    import os
    import subprocess
    import sys as _sys

    env = dict(os.environ)
    if pure_only:
        env["COLABEL_PURE_KERNELS"] = "1"
    else:
        env.pop("COLABEL_PURE_KERNELS", None)
    code = (
        "import tempfile, time, json\n"
        "from colabel.simulate import ExperimentConfig, run_experiment\n"
        "exp = ExperimentConfig.from_dict({\n"
        "    'engine': {'k_max': 100, 'tau_promote': 0.8},\n"
        "    'oracle': {'base_accuracy': 0.9, 'accept_when_correct': 0.9,\n"
        "               'accept_when_wrong': 0.1, 'consent_policy': 'always'},\n"
        "    'data': {'generator': {'n': 1000, 'classes': 2, 'dims': 2, 'separation': 4.0}},\n"
        "    'seeds': [0], 'seed_rows': 20,\n"
        "})\n"
        "with tempfile.TemporaryDirectory() as d:\n"
        "    t0 = time.perf_counter()\n"
        "    run_experiment(exp, d)\n"
        "    print(time.perf_counter() - t0)\n"
    )
    out = subprocess.run(
        [_sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    return float(out.stdout.strip().splitlines()[-1])


def main():
    events = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    calls = int(sys.argv[2]) if len(sys.argv) > 2 else 2000

    print(f"kernel scan: {events} events x {calls} calls")
    for n in (200, events):
        cols = make_columns(n)
        t_pure, acc_p = time_kernel(pure, cols, calls)
        line = f"  {n:>6} events: pure {t_pure*1e3:9.1f} ms"
        if _fast is not None:
            t_fast, acc_f = time_kernel(_fast, cols, calls)
            assert acc_p == acc_f, "kernels diverged"
            line += f" | cython {t_fast*1e3:9.1f} ms | speedup {t_pure/t_fast:6.1f}x"
        print(line)

    print("end-to-end 1000-record simulation (subprocess per backend):")
    t = time_simulation(pure_only=True)
    print(f"  pure   kernels: {t:6.2f} s")
    if _fast is not None:
        t = time_simulation(pure_only=False)
        print(f"  cython kernels: {t:6.2f} s")
    else:
        print("  cython kernels: not built")


if __name__ == "__main__":
    main()

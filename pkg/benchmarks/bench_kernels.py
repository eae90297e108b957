"""Time the compiled and pure-Python estimator kernels on the same batch.

    python benchmarks/bench_kernels.py [--reps N] [--n1 N1] [--n2 N2] [--repeat K]
"""

import argparse
import sys
import timeit

import numpy as np

from twostage import DesignConfig, ParameterPoint, _backend
from twostage import estimators as E
from twostage.simulate import _batch_stats, _kernel_args


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=20_000)
    parser.add_argument("--n1", type=int, default=5)
    parser.add_argument("--n2", type=int, default=5)
    parser.add_argument("--mu", type=float, default=0.5)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    cfg = DesignConfig(args.n1, args.n2)
    noise = np.random.default_rng(0).standard_normal((args.reps, 2 * cfg.n1 + cfg.n2))
    stats = _batch_stats(noise, ParameterPoint(0.0, args.mu), cfg)[:4]
    kinds, ms = _kernel_args(E.PAPER_FOUR + (E.bayes(1),))

    backends = _backend.available()
    if "cython" not in backends:
        print("compiled kernel not built; timing the Python kernel only", file=sys.stderr)

    timings, outputs = {}, {}
    for name in backends:
        kernel = _backend.get_kernel(name)

        def call():
            return kernel.estimate_batch(*stats, cfg.n1, cfg.n2, kinds, ms)

        outputs[name] = call()
        timings[name] = min(timeit.repeat(call, number=1, repeat=args.repeat))
        print(f"{name:7s} {timings[name]:9.4f} s  {args.reps / timings[name]:12.0f} reps/s")

    if len(timings) == 2:
        diff = np.max(np.abs(outputs["cython"][1] - outputs["python"][1]))
        print(f"speedup {timings['python'] / timings['cython']:.1f}x, max abs difference {diff:.1e}")


if __name__ == "__main__":
    main()

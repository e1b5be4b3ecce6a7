"""Time the compiled trajectory kernel against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--segments N] [--trials B]

Both run the same GDM segment workload from identical inputs; the script
checks the outputs agree before reporting per-segment cost.
"""
import argparse
import time

import numpy as np

from heislab import _kernels_py, kernels, model, trajectory
from heislab.pauli import eigenstate_vector


def workload(trials, segments, seed=0):
    h = model.build_gdm(seed)
    e_b = "XXI"
    letters, E, Vp, phase, kern = trajectory.segment_operators(h, e_b, 1e-3, h.mode_freqs)
    rng = np.random.default_rng(seed)
    nq = h.n_qubits
    psi = np.repeat(eigenstate_vector(e_b, 1)[None], trials, axis=0).astype(complex)
    bos = np.zeros((trials, h.n_modes), dtype=complex)
    prev = np.ascontiguousarray(np.repeat(np.eye(2, dtype=complex)[None, None], nq, axis=1).repeat(trials, axis=0))
    angles = rng.uniform(0, np.pi, size=(trials, segments, nq, 2))
    snap_at = np.array([segments], dtype=np.int64)
    snaps = np.zeros((trials, 1, h.n_modes), dtype=complex)
    return [psi, bos, letters, angles, prev, E, Vp, phase, kern, snap_at, snaps]


def run(fn, args, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        a = [x.copy() if isinstance(x, np.ndarray) else x for x in args]
        t = time.perf_counter()
        fn(*a)
        best = min(best, time.perf_counter() - t)
        out = a
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--segments", type=int, default=20_000)
    ap.add_argument("--trials", type=int, default=8)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    work = workload(args.trials, args.segments)
    n = args.trials * args.segments
    t_py, out_py = run(_kernels_py.trotter_segments, work, args.repeat)
    print(f"python : {t_py:9.4f} s  {1e6 * t_py / n:8.3f} us/segment")
    if kernels.BACKEND != "cython":
        print("compiled kernel not available (build with Cython to compare)")
        return
    t_cy, out_cy = run(kernels.trotter_segments, work, args.repeat)
    print(f"cython : {t_cy:9.4f} s  {1e6 * t_cy / n:8.3f} us/segment")
    diff = max(np.max(np.abs(out_py[0] - out_cy[0])), np.max(np.abs(out_py[-1] - out_cy[-1])))
    print(f"speedup: {t_py / t_cy:8.1f}x   max |diff| = {diff:.2e}")


if __name__ == "__main__":
    main()

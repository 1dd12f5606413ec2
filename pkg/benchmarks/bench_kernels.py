"""Compare the numpy and numba implementations of the hot kernels.

Both implementations are always importable from ``zkstrip._kernels``
regardless of ``ZKSTRIP_DISABLE_NUMBA``; that flag only picks which one the
solver dispatches to.  Run with ``python benchmarks/bench_kernels.py``.
"""

import argparse
import timeit

import numpy as np

from zkstrip import _kernels
from zkstrip.basis import Grid
from zkstrip.propagator import ExpQuadrature, rates


def panel_case(nx, ny, m, rng):
    grid = Grid(30.0, nx, 2.0 * np.pi, ny, "d")
    E_stage, A, W, E_end = ExpQuadrature(m).coefficients(rates(grid, 0.0), 0.05)
    c = rng.normal(size=(nx, ny)) + 1j * rng.normal(size=(nx, ny))
    F = rng.normal(size=(m, nx, ny)) + 1j * rng.normal(size=(m, nx, ny))
    out = np.empty((m, nx, ny), dtype=np.complex128)
    return (E_stage, A, W, E_end, c, F, 0.05, out)


def gh_case(n, rng):
    u = rng.normal(scale=3.0, size=n)
    coeffs = np.array([0.0, 0.0, 0.5])
    return (u, coeffs, 0.5, np.empty(n), np.empty(n))


def bench(fn, args, repeat):
    fn(*args)  # warm-up (triggers compilation for the numba variant)
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def _result(fn, case):
    """Return value plus output buffers, copied so the two variants can be compared."""
    args = [np.copy(a) if isinstance(a, np.ndarray) else a for a in case]
    ret = fn(*args)
    outs = [a for a in args[-2:] if isinstance(a, np.ndarray)]
    parts = ([np.ravel(ret)] if ret is not None else []) + [np.ravel(o) for o in outs]
    return np.concatenate(parts)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, default=256)
    ap.add_argument("--ny", type=int, default=33)
    ap.add_argument("--m", type=int, default=4)
    ap.add_argument("--points", type=int, default=384 * 33)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    if not _kernels.NUMBA_AVAILABLE:
        print("numba is not installed; only the numpy timings are meaningful")
    cases = {
        "panel_update": panel_case(args.nx, args.ny, args.m, rng),
        "poly_gh": gh_case(args.points, rng),
    }
    print(f"{'kernel':<14}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}{'max diff':>12}")
    for name, case in cases.items():
        fn_np = _kernels.IMPLEMENTATIONS["numpy"][name]
        fn_nb = _kernels.IMPLEMENTATIONS["numba"][name]
        t_np = bench(fn_np, case, args.repeat)
        t_nb = bench(fn_nb, case, args.repeat)
        diff = float(np.max(np.abs(_result(fn_np, case) - _result(fn_nb, case))))
        print(f"{name:<14}{1e3 * t_np:12.3f}{1e3 * t_nb:12.3f}{t_np / t_nb:10.2f}{diff:12.2e}")


if __name__ == "__main__":
    main()

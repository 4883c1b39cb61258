"""Compare the compiled and the interpreted fail-reachability search.

    python3 benchmarks/bench_explore.py [--repeat N] [--fuel N] [NAME ...]

NAME is a corpus table program (default: simple-loop-safe linger-dec-safe minmax-unsafe).
"""

from __future__ import annotations

import argparse
import statistics
import time

from bfo import explore_core
from bfo.checker import check_program
from bfo.corpus import corpus_root
from bfo.parser import parse
from bfo.translate import translate_program
from bfo.tsemantics import DEFAULT_DOMAIN

try:
    from bfo import _explore_kernel
except ImportError:
    _explore_kernel = None

DEFAULT_NAMES = ["simple-loop-safe", "linger-dec-safe", "minmax-unsafe"]


def target(name: str):
    text = (corpus_root() / "table" / f"{name}.bfo").read_text(encoding="utf-8")
    return translate_program(check_program(parse(text)))


def timed(impl, p, fuel: int, repeat: int):
    times, verdict = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        verdict = impl.explore(p, DEFAULT_DOMAIN, fuel).fail_reachable
        times.append(time.perf_counter() - t0)
    return statistics.median(times), verdict


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", default=DEFAULT_NAMES)
    ap.add_argument("--fuel", type=int, default=32, help="call-depth bound (default 32)")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _explore_kernel is None:
        print("compiled kernel not built; reinstall with Cython available to compare")
    print(f"{'program':<22}{'python s':>10}{'cython s':>10}{'speedup':>9}  verdict")
    for name in args.names:
        p = target(name)
        tp, vp = timed(explore_core, p, args.fuel, args.repeat)
        if _explore_kernel is None:
            print(f"{name:<22}{tp:>10.3f}{'-':>10}{'-':>9}  {vp}")
            continue
        tc, vc = timed(_explore_kernel, p, args.fuel, args.repeat)
        assert vp == vc, f"{name}: kernels disagree ({vp} vs {vc})"
        print(f"{name:<22}{tp:>10.3f}{tc:>10.3f}{tp / tc:>8.2f}x  {vp}")


if __name__ == "__main__":
    main()

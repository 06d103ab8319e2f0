#!/usr/bin/env python3
"""Wall time of fair-swap and fair-flow as n grows at fixed k.

    python3 scripts/scaling.py --sizes 10000,30000,100000 --k 20
"""
import argparse

from fairdiv.bench import timing_sweep


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="10000,30000,100000")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    sizes = tuple(int(s) for s in args.sizes.split(","))

    for alg, m in (("fair-swap", 2), ("fair-flow", 3), ("fair-kcenter", 3)):
        t = timing_sweep(alg, sizes, k=args.k, m=m, seed=args.seed, repeats=args.repeats)
        base = t[sizes[0]]
        cells = "  ".join(f"n={n}: {t[n] * 1000:8.2f} ms ({t[n] / base:5.2f}x)" for n in sizes)
        print(f"{alg:13s} m={m}  {cells}")


if __name__ == "__main__":
    main()

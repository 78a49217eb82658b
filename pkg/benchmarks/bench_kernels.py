"""Compiled kernels against the numpy fallback on growing inputs.

    python3 benchmarks/bench_kernels.py [--repeats N]
"""
import argparse

from blowup.bench import compiled, run_case


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        print("compiled extension not built; only the fallback is timed")
    cases = [{"case": "pair_deviation", "n": n} for n in (8, 10, 12, 14, 16)]
    cases += [{"case": "hom_count", "n": n} for n in (8, 16, 24, 32)]
    print(f"{'case':<16}{'n':>4}{'python s':>12}{'cython s':>12}{'speedup':>9}  agree")
    for case in cases:
        rows = {r["backend"]: r for r in run_case(case, args.repeats)}
        py, cy = rows["python"], rows.get("cython")
        if cy is None:
            print(f"{case['case']:<16}{case['n']:>4}{py['seconds']:>12.5f}{'-':>12}{'-':>9}  -")
            continue
        agree = py["result"] == cy["result"]
        print(f"{case['case']:<16}{case['n']:>4}{py['seconds']:>12.5f}{cy['seconds']:>12.5f}"
              f"{py['seconds'] / max(cy['seconds'], 1e-9):>9.1f}  {agree}")


if __name__ == "__main__":
    main()

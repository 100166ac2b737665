#!/usr/bin/env python3
"""Solve a WCNF file with RC2 and print a MaxSAT-evaluation style answer."""
import sys

from pysat.examples.rc2 import RC2
from pysat.formula import WCNF


def main():
    if len(sys.argv) != 2:
        print("usage: rc2_solve.py FILE.wcnf", file=sys.stderr)
        return 1
    wcnf = WCNF(from_file=sys.argv[1])
    with RC2(wcnf) as rc2:
        model = rc2.compute()
        if model is None:
            print("s UNSATISFIABLE")
            return 20
        values = {abs(l): l > 0 for l in model}
        print(f"o {rc2.cost}")
        print("s OPTIMUM FOUND")
        lits = [str(v if values.get(v, False) else -v) for v in range(1, wcnf.nv + 1)]
        print("v " + " ".join(lits))
    return 30


if __name__ == "__main__":
    sys.exit(main())

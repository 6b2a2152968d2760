#!/usr/bin/env python3
"""Marginalization defects of sequential measurements.

Prints, for the two-basis qubit and for a commuting reference model, how much
the statistics of later observations change when an earlier measurement slot
is summed out.  A nonzero defect is the interference that blocks any additive
(classical) description of the process.
"""

from qsproc.bridges import interference_witness
from qsproc.fixtures import commuting_diagonal, qubit_xz


def main():
    for name, (model, site) in (
        ("two-basis qubit", qubit_xz()),
        ("commuting diagonal", commuting_diagonal(trivial_order=False)),
    ):
        print(name)
        for t in site.points:
            defect = interference_witness(model, site, t)
            print(f"  marginalizing {t}: defect {defect:.6f}")
    print()
    print("the two-basis defect of one half is the textbook double-slit value:")
    print("summing over the intermediate outcomes adds probability that the")
    print("undisturbed process never had.")


if __name__ == "__main__":
    main()

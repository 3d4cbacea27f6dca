#!/usr/bin/env python3
"""Recompute all published reference tables and report pass/fail per cell.

Exits nonzero if any cell is outside its acceptance tolerance.
"""

import sys

from doublesweep.cli import format_rows, reproduce_table

TABLES = ("appendixA", "table2", "table3", "table1")


def main() -> int:
    all_ok = True
    for table in TABLES:
        print(f"== {table} ==")
        rows, ok = reproduce_table(table)
        print(format_rows(rows, "markdown"))
        all_ok &= ok
    print("ALL PASS" if all_ok else "FAILURES PRESENT")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())

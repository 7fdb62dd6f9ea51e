#!/usr/bin/env python3
"""Run the four reference reconstruction cells and print the results table.

Equivalent to `sarlift reproduce-table2`; kept as a script entry point so
the experiment is one command from a fresh checkout:

    python scripts/reproduce_table2.py --output-dir results/table2
"""

import sys

from sarlift.cli import main

if __name__ == "__main__":
    sys.exit(main(["reproduce-table2", *sys.argv[1:]]))

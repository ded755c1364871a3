"""Windowed acoustic energy leaving a ball for decreasing Mach numbers, in 1D.

Run with ``python demos/acoustic_decay.py``; pass an output directory as the
first argument to also write the CSV, JSON and SVG files.
"""

import sys

from lowmach.experiments import run_acoustic_decay
from lowmach.reports import write_report

report = run_acoustic_decay(dims=(1,), points={1: 256})
print("\n".join(report.lines()))
if len(sys.argv) > 1:
    for path in write_report(report, sys.argv[1]):
        print("wrote", path)

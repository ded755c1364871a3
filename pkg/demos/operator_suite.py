"""Check the mollifier identity, the high-frequency bound and the commutator slope.

Run with ``python demos/operator_suite.py``.
"""

from lowmach.experiments import run_operator_suite

report = run_operator_suite(seed=1, n=64, d=2)
print("\n".join(report.lines()))

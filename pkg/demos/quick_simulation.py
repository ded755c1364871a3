"""Integrate the main system for one parameter triple and print its norm history.

Run with ``python demos/quick_simulation.py``; it finishes in a few seconds.
"""

from lowmach.experiments import ExperimentSpec, run_simulation
from lowmach.integrate import StepperConfig
from lowmach.norms import ParamTriple

spec = ExperimentSpec(name="simulate", points=32, t_end=0.1)
report = run_simulation(ParamTriple(0.1, 0.5, 0.5), spec, StepperConfig(dt=0.01, adaptive=True))

table = report.tables["norms"]
for t, composite in zip(table.column("t"), table.column("composite")):
    print(f"t = {t:.4f}  composite norm = {composite:.6f}")
print("\n".join(report.lines()))

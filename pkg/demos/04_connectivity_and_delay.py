"""Weak connectivity or slow synapses restore desynchronization.

Scans the connectivity J and the synaptic relaxation time lambda for the
log-shaped threshold with alpha = 3.  Runs use a coarse grid (ds = 0.01) and
a long horizon so that slow transients have died out.  Set
ELAPSED_NEURONS_THREADS to control how many runs execute in parallel.

    python3 demos/04_connectivity_and_delay.py
"""

from elapsed_neurons import ModelConfig, PaperThreshold
from elapsed_neurons.analysis import scan_connectivity, scan_delay

base = ModelConfig(PaperThreshold(3.0), ds=1e-2, t_max=300.0)

print("connectivity scan")
result = scan_connectivity(base, 0.1, 1.0, 10)
for row in result.rows + result.bisection:
    print(f"  J={row.value:.4f}  {row.report.summary()}")
print(f"  transition between J={result.critical[0]:.4f} and J={result.critical[1]:.4f}"
      if result.critical else "  no transition found")

print("\nsynaptic delay scan at J = 1")
for row in scan_delay(base, [0.1, 0.5, 1.0, 2.0, 5.0, 10.0]).rows:
    print(f"  lambda={row.value:<4g} {row.report.summary()}")
